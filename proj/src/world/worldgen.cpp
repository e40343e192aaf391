#include "lrta/world/worldgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "lrta/error.hpp"
#include "lrta/exec/oracle.hpp"
#include "lrta/program/render.hpp"

namespace lrta::world {

using program::Direction;
using program::Instruction;
using program::InstructionProgram;
using program::Opcode;

SymbolicScene sample_scene(const WorldSchema& schema, nn::RngState& rng, const SceneOptions& options,
                           const std::string& scene_id) {
  if (options.min_objects < 1 || options.max_objects < options.min_objects) {
    throw ContractError("scene size range [" + std::to_string(options.min_objects) + ", " +
                        std::to_string(options.max_objects) + "] is empty");
  }
  SymbolicScene scene;
  scene.scene_id = scene_id;
  const auto span = static_cast<std::size_t>(options.max_objects - options.min_objects + 1);
  const int n = options.min_objects + static_cast<int>(rng.index(span));
  for (int i = 0; i < n; ++i) {
    SymbolicObject o;
    o.id = i;
    o.category = schema.categories[rng.index(schema.categories.size())];
    for (const auto& mc : schema.metaconcepts) o.attributes[mc.name] = mc.values[rng.index(mc.values.size())];
    const double w = rng.uniform(0.05, 0.3);
    const double h = rng.uniform(0.05, 0.3);
    o.box = {rng.uniform(0.0, 1.0 - w), rng.uniform(0.0, 1.0 - h), w, h};
    scene.objects.push_back(std::move(o));
  }
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (s == t || !rng.bernoulli(options.relation_density)) continue;
      scene.relations.push_back({s, schema.predicates[rng.index(schema.predicates.size())], t});
    }
  }
  return scene;
}

namespace {

std::vector<int> final_set(const SymbolicScene& scene, const WorldSchema& schema, const std::vector<Instruction>& steps,
                           std::size_t m_max) {
  InstructionProgram p{steps};
  return exec::oracle_execute(scene, p, schema, std::max(m_max, steps.size())).bitmaps.back();
}

int count(const std::vector<int>& bits) { return static_cast<int>(std::count(bits.begin(), bits.end(), 1)); }

/// Appends filters on the target's own values, in random metaconcept order,
/// keeping only those that shrink the set, until the target is alone.
bool narrow_to(const SymbolicScene& scene, const WorldSchema& schema, nn::RngState& rng,
               std::vector<Instruction>& steps, int target, std::size_t budget, std::size_t m_max) {
  auto current = final_set(scene, schema, steps, m_max);
  std::vector<std::size_t> order(schema.metaconcepts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t mc : order) {
    if (count(current) == 1) break;
    if (budget == 0) return false;
    const auto& name = schema.metaconcepts[mc].name;
    const auto& value = scene.objects[static_cast<std::size_t>(target)].attributes.at(name);
    steps.push_back(Instruction::filter(name, value));
    auto next = final_set(scene, schema, steps, m_max);
    if (count(next) < count(current)) {
      current = std::move(next);
      --budget;
    } else {
      steps.pop_back();
    }
  }
  return count(current) == 1;
}

/// Metaconcepts not yet filtered since the last select or relate.
std::vector<std::size_t> unfiltered(const WorldSchema& schema, const std::vector<Instruction>& steps) {
  std::set<std::string> used;
  for (auto it = steps.rbegin(); it != steps.rend() && it->op == Opcode::filter_attr; ++it) used.insert(it->arg);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < schema.metaconcepts.size(); ++i) {
    if (!used.count(schema.metaconcepts[i].name)) out.push_back(i);
  }
  if (out.empty()) {
    for (std::size_t i = 0; i < schema.metaconcepts.size(); ++i) out.push_back(i);
  }
  return out;
}

enum class Kind { exist, query, verify };

std::optional<std::vector<Instruction>> positive_body(const SymbolicScene& scene, const WorldSchema& schema,
                                                      nn::RngState& rng, Kind kind, bool relate, std::size_t m_max,
                                                      int& target) {
  const bool unique = kind != Kind::exist;
  const auto& objects = scene.objects;
  std::vector<Instruction> steps;
  if (!relate) {
    target = static_cast<int>(rng.index(objects.size()));
    steps.push_back(Instruction::select(objects[static_cast<std::size_t>(target)].category));
    if (unique) {
      if (!narrow_to(scene, schema, rng, steps, target, m_max - 2, m_max)) return std::nullopt;
    } else if (rng.bernoulli(0.5)) {
      const auto& mc = schema.metaconcepts[rng.index(schema.metaconcepts.size())].name;
      steps.push_back(Instruction::filter(mc, objects[static_cast<std::size_t>(target)].attributes.at(mc)));
    }
    return steps;
  }
  if (scene.relations.empty() || m_max < 3) return std::nullopt;
  const Relation& r = scene.relations[rng.index(scene.relations.size())];
  const Direction dir = rng.bernoulli(0.5) ? Direction::forward : Direction::backward;
  const int anchor = scene.position_of(dir == Direction::forward ? r.subject : r.object);
  target = scene.position_of(dir == Direction::forward ? r.object : r.subject);
  steps.push_back(Instruction::select(objects[static_cast<std::size_t>(anchor)].category));
  if (!narrow_to(scene, schema, rng, steps, anchor, m_max - 3, m_max)) return std::nullopt;
  steps.push_back(Instruction::relate(r.predicate, dir));
  const std::size_t left = m_max - 1 - steps.size();
  if (unique) {
    if (!narrow_to(scene, schema, rng, steps, target, left, m_max)) return std::nullopt;
  } else if (left > 0 && rng.bernoulli(0.3)) {
    const auto& mc = schema.metaconcepts[rng.index(schema.metaconcepts.size())].name;
    steps.push_back(Instruction::filter(mc, objects[static_cast<std::size_t>(target)].attributes.at(mc)));
  }
  return steps;
}

std::optional<std::vector<Instruction>> negate(const SymbolicScene& scene, const WorldSchema& schema,
                                               nn::RngState& rng, const std::vector<Instruction>& steps,
                                               std::size_t m_max) {
  std::vector<std::vector<Instruction>> candidates;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    std::vector<std::string> alternatives;
    const Instruction& step = steps[s];
    if (step.op == Opcode::select) {
      alternatives = schema.categories;
    } else if (step.op == Opcode::filter_attr) {
      alternatives = schema.metaconcepts[static_cast<std::size_t>(schema.metaconcept_index(step.arg))].values;
    } else if (step.op == Opcode::relate) {
      alternatives = schema.predicates;
    }
    for (const auto& alt : alternatives) {
      if (alt == (step.op == Opcode::filter_attr ? step.value : step.arg)) continue;
      auto changed = steps;
      if (step.op == Opcode::filter_attr) {
        changed[s].value = alt;
      } else {
        changed[s].arg = alt;
      }
      if (count(final_set(scene, schema, changed, m_max)) == 0) candidates.push_back(std::move(changed));
    }
  }
  if (candidates.empty()) return std::nullopt;
  return candidates[rng.index(candidates.size())];
}

}  // namespace

std::optional<SampledProgram> sample_program_for(const SymbolicScene& scene, const WorldSchema& schema,
                                                 nn::RngState& rng, const TypeMix& mix, std::size_t m_max) {
  if (scene.objects.empty()) return std::nullopt;
  const double total = mix.exist + mix.query + mix.verify;
  if (!(total > 0.0)) throw ContractError("type mix has no positive weight");
  const double u = rng.uniform() * total;
  const Kind kind = u < mix.exist ? Kind::exist : (u < mix.exist + mix.query ? Kind::query : Kind::verify);
  const bool negative = kind == Kind::exist && rng.bernoulli(mix.negative);

  for (int attempt = 0; attempt < 64; ++attempt) {
    const bool relate = rng.bernoulli(mix.relate);
    int target = -1;
    auto body = positive_body(scene, schema, rng, kind, relate, m_max, target);
    if (!body) continue;
    if (negative) {
      body = negate(scene, schema, rng, *body, m_max);
      if (!body) continue;
    }
    SampledProgram out;
    out.program.steps = std::move(*body);
    out.answerable = !negative;
    if (kind == Kind::exist) {
      out.program.steps.push_back(Instruction::exist());
    } else {
      const auto options = unfiltered(schema, out.program.steps);
      const auto& mc = schema.metaconcepts[options[rng.index(options.size())]];
      if (kind == Kind::query) {
        out.program.steps.push_back(Instruction::query(mc.name));
      } else {
        std::string value = scene.objects[static_cast<std::size_t>(target)].attributes.at(mc.name);
        if (rng.bernoulli(0.5)) {
          std::vector<std::string> others;
          for (const auto& v : mc.values) {
            if (v != value) others.push_back(v);
          }
          value = others[rng.index(others.size())];
        }
        out.program.steps.push_back(Instruction::verify(mc.name, value));
      }
    }
    program::validate_program(out.program, schema, m_max, true);
    return out;
  }
  return std::nullopt;
}

DatasetItem make_item(const SymbolicScene& scene, const InstructionProgram& program, const WorldSchema& schema,
                      nn::RngState& rng, std::string question_id) {
  const auto result = exec::oracle_execute(scene, program, schema, std::max<std::size_t>(program.size(), 1));
  const auto question = program::render_question(program, rng);
  const auto full = answer::render_full_answer(program, result);
  DatasetItem item;
  item.question_id = std::move(question_id);
  item.scene_id = scene.scene_id;
  item.tokens = question.tokens;
  item.program = program;
  item.question_type = question.question_type;
  item.short_answer = result.short_answer;
  item.full_answer = full.tokens;
  item.bitmaps = result.bitmaps;
  return item;
}

Json item_to_json(const DatasetItem& item) {
  return Json{{"question_id", item.question_id},
              {"scene_id", item.scene_id},
              {"tokens", item.tokens},
              {"program", program::program_to_strings(item.program)},
              {"question_type", item.question_type},
              {"short_answer", item.short_answer},
              {"full_answer", item.full_answer},
              {"bitmaps", item.bitmaps}};
}

DatasetItem item_from_json(const Json& j) {
  DatasetItem item;
  std::string field;
  try {
    field = "question_id";
    item.question_id = j.at(field).get<std::string>();
    field = "scene_id";
    item.scene_id = j.at(field).get<std::string>();
    field = "tokens";
    item.tokens = j.at(field).get<std::vector<std::string>>();
    field = "program";
    item.program = program::program_from_strings(j.at(field).get<std::vector<std::string>>());
    field = "question_type";
    item.question_type = j.value(field, item.program.question_type());
    field = "short_answer";
    item.short_answer = j.at(field).get<std::string>();
    field = "full_answer";
    item.full_answer = j.at(field).get<std::vector<std::string>>();
    field = "bitmaps";
    item.bitmaps = j.at(field).get<std::vector<std::vector<int>>>();
  } catch (const Json::exception& e) {
    throw DataError("question record: field '" + field + "': " + e.what());
  }
  return item;
}

std::vector<DatasetItem> read_items_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<DatasetItem> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(item_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_items_jsonl(const std::filesystem::path& path, const std::vector<DatasetItem>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  for (const auto& item : items) out << item_to_json(item).dump() << '\n';
}

Json DatasetConfig::to_json() const {
  return Json{{"seed", seed},
              {"train", train},
              {"valid", valid},
              {"testdev", testdev},
              {"questions_per_scene", questions_per_scene},
              {"min_objects", scene.min_objects},
              {"max_objects", scene.max_objects},
              {"relation_density", scene.relation_density},
              {"mix_exist", mix.exist},
              {"mix_query", mix.query},
              {"mix_verify", mix.verify},
              {"mix_relate", mix.relate},
              {"negative_fraction", mix.negative},
              {"answer_cap", answer_cap},
              {"m_max", m_max}};
}

DatasetConfig DatasetConfig::from_json(const Json& j) {
  DatasetConfig c;
  c.seed = j.value("seed", c.seed);
  c.train = j.value("train", c.train);
  c.valid = j.value("valid", c.valid);
  c.testdev = j.value("testdev", c.testdev);
  c.questions_per_scene = j.value("questions_per_scene", c.questions_per_scene);
  c.scene.min_objects = j.value("min_objects", c.scene.min_objects);
  c.scene.max_objects = j.value("max_objects", c.scene.max_objects);
  c.scene.relation_density = j.value("relation_density", c.scene.relation_density);
  c.mix.exist = j.value("mix_exist", c.mix.exist);
  c.mix.query = j.value("mix_query", c.mix.query);
  c.mix.verify = j.value("mix_verify", c.mix.verify);
  c.mix.relate = j.value("mix_relate", c.mix.relate);
  c.mix.negative = j.value("negative_fraction", c.mix.negative);
  c.answer_cap = j.value("answer_cap", c.answer_cap);
  c.m_max = j.value("m_max", c.m_max);
  return c;
}

namespace {

std::string padded(std::size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace

DatasetSplit build_split(const WorldSchema& schema, const DatasetConfig& config, const std::string& split) {
  std::size_t wanted = 0;
  if (split == "train") {
    wanted = config.train;
  } else if (split == "valid") {
    wanted = config.valid;
  } else if (split == "testdev") {
    wanted = config.testdev;
  } else {
    throw ContractError("unknown split '" + split + "'");
  }
  if (config.questions_per_scene == 0) throw ContractError("questions_per_scene must be positive");
  const nn::RngState root = nn::RngState(config.seed).derive("worldgen").derive(split);
  DatasetSplit out;
  out.name = split;
  // (yes, no) counts per yes/no question type
  std::map<std::string, std::pair<std::size_t, std::size_t>> answers;
  std::size_t scene_index = 0;
  std::size_t stalled = 0;
  while (out.scenes.size() < wanted) {
    nn::RngState rng = root.derive(scene_index);
    SymbolicScene scene = sample_scene(schema, rng, config.scene, split + "-s" + padded(scene_index, 5));
    ++scene_index;
    std::set<std::vector<std::string>> seen;
    std::size_t taken = 0;
    for (std::size_t attempt = 0; attempt < 8 * config.questions_per_scene && taken < config.questions_per_scene;
         ++attempt) {
      auto sampled = sample_program_for(scene, schema, rng, config.mix, config.m_max);
      if (!sampled) continue;
      auto text = program::program_to_strings(sampled->program);
      if (seen.count(text)) continue;
      DatasetItem item = make_item(scene, sampled->program, schema, rng, split + "-q" + padded(out.items.size(), 6));
      if (item.short_answer == "yes" || item.short_answer == "no") {
        auto& [yes, no] = answers[item.question_type];
        const std::size_t same = item.short_answer == "yes" ? yes : no;
        const std::size_t other = item.short_answer == "yes" ? no : yes;
        const bool within = static_cast<double>(same + 1) <= config.answer_cap * static_cast<double>(yes + no + 1);
        if (same > other && !within) continue;
        (item.short_answer == "yes" ? yes : no) += 1;
      }
      seen.insert(std::move(text));
      out.items.push_back(std::move(item));
      ++taken;
    }
    if (taken > 0) {
      out.scenes.push_back(std::move(scene));
      stalled = 0;
    } else if (++stalled > 1000) {
      throw DataError("split '" + split + "': no question could be drawn for 1000 consecutive scenes");
    }
  }
  return out;
}

std::vector<DatasetSplit> build_dataset(const WorldSchema& schema, const DatasetConfig& config) {
  schema.validate();
  std::vector<DatasetSplit> out;
  for (const auto& name : split_names()) out.push_back(build_split(schema, config, name));
  return out;
}

void write_dataset(const std::filesystem::path& dir, const WorldSchema& schema,
                   const std::vector<DatasetSplit>& splits) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "schema.json", std::ios::binary);
    if (!out) throw LoadError("cannot write " + (dir / "schema.json").string());
    out << schema.to_json().dump(2) << '\n';
  }
  for (const auto& split : splits) {
    write_scenes_jsonl(dir / (split.name + ".scenes.jsonl"), split.scenes);
    write_items_jsonl(dir / (split.name + ".questions.jsonl"), split.items);
  }
}

WorldSchema read_schema(const std::filesystem::path& dir) {
  std::ifstream in(dir / "schema.json");
  if (!in) throw LoadError("cannot open " + (dir / "schema.json").string());
  try {
    return WorldSchema::from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw DataError("schema.json: " + std::string(e.what()));
  }
}

DatasetSplit read_split(const std::filesystem::path& dir, const std::string& split) {
  DatasetSplit out;
  out.name = split;
  out.scenes = read_scenes_jsonl(dir / (split + ".scenes.jsonl"));
  out.items = read_items_jsonl(dir / (split + ".questions.jsonl"));
  return out;
}

std::vector<SymbolicScene> scenes_from_gqa(const Json& gqa, const WorldSchema& schema) {
  if (!gqa.is_object()) throw DataError("GQA scene graphs must be a JSON object keyed by image id");
  std::vector<SymbolicScene> out;
  for (const auto& [image_id, graph] : gqa.items()) {
    try {
      const double width = graph.value("width", 1.0);
      const double height = graph.value("height", 1.0);
      SymbolicScene scene;
      scene.scene_id = image_id;
      std::map<std::string, int> ids;
      const Json& objects = graph.at("objects");
      for (const auto& [key, obj] : objects.items()) {
        const auto name = obj.at("name").get<std::string>();
        if (schema.category_index(name) < 0) continue;
        SymbolicObject o;
        o.id = static_cast<int>(scene.objects.size());
        o.category = name;
        for (const auto& a : obj.value("attributes", Json::array())) {
          const auto value = a.get<std::string>();
          if (auto mc = schema.metaconcept_of_value(value)) {
            o.attributes.emplace(schema.metaconcepts[static_cast<std::size_t>(*mc)].name, value);
          }
        }
        const double x = obj.value("x", 0.0) / width;
        const double y = obj.value("y", 0.0) / height;
        const double w = std::max(obj.value("w", 1.0) / width, 1e-3);
        const double h = std::max(obj.value("h", 1.0) / height, 1e-3);
        o.box = {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0), std::min(w, 1.0), std::min(h, 1.0)};
        ids.emplace(key, o.id);
        scene.objects.push_back(std::move(o));
      }
      std::set<std::pair<int, int>> linked;
      for (const auto& [key, obj] : objects.items()) {
        auto from = ids.find(key);
        if (from == ids.end()) continue;
        for (const auto& rel : obj.value("relations", Json::array())) {
          const auto pred = rel.at("name").get<std::string>();
          auto to = ids.find(rel.at("object").get<std::string>());
          if (to == ids.end() || schema.predicate_index(pred) < 0 || to->second == from->second) continue;
          if (!linked.emplace(from->second, to->second).second) continue;
          scene.relations.push_back({from->second, pred, to->second});
        }
      }
      out.push_back(std::move(scene));
    } catch (const Json::exception& e) {
      throw DataError("GQA image " + image_id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lrta::world
