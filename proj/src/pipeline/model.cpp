#include "lrta/pipeline/model.hpp"

#include <fstream>

#include "lrta/error.hpp"
#include "lrta/nn/checkpoint.hpp"
#include "lrta/program/render.hpp"
#include "lrta/scene/matching.hpp"

namespace lrta::pipeline {

using nn::Index;
using nn::Tape;
using nn::Var;

Model Model::create(const WorldSchema& schema, const PipelineConfig& config) {
  config.validate();
  schema.validate();
  Model m;
  m.config = config;
  m.schema = schema;
  m.question_vocab = question_vocabulary(schema);
  m.instruction_vocab = instruction_vocabulary(schema);
  m.answer_vocab = answer_vocabulary(schema);
  m.store = std::make_unique<nn::ParameterStore>();
  auto& store = *m.store;
  const nn::RngState root = nn::RngState(config.seed).derive("init");

  nn::RngState rng = root.derive("embed");
  m.embedder = scene::SceneEmbedder::create(store, "embed", schema, config.dim, rng);
  rng = root.derive("look");
  m.look = scene::SceneGraphHeads::create(store, "look", schema, config.dim, config.hidden, rng);

  rng = root.derive("read");
  program::ParserConfig pc;
  pc.dim = config.dim;
  pc.hidden = config.hidden;
  pc.heads = config.heads;
  pc.encoder_blocks = config.encoder_blocks;
  pc.m_max = config.m_max;
  pc.max_question_len = config.max_question_len;
  m.parser = program::QuestionParser::create(store, "read.parser", m.question_vocab.size(), pc, rng);
  m.instruction_text = nn::SequenceDecoder::create(store, "read.text", m.instruction_vocab.size(), 5, config.dim,
                                                   config.hidden, config.heads, config.text_blocks, Vocabulary::bos(),
                                                   Vocabulary::eos(), rng);
  rng = root.derive("gold");
  m.gold = program::GoldInstructionEmbedder::create(store, "gold", m.instruction_vocab.size(), config.dim, rng);
  rng = root.derive("think");
  m.think = exec::ExecutionEngine::create(store, "think", config.dim, config.think_hidden, rng,
                                          config.think_layers);
  rng = root.derive("answer");
  m.answer = answer::AnswerGenerator::create(store, "answer", m.answer_vocab.size(), config.dim, config.hidden,
                                             config.heads, config.answer_blocks, config.m_max, config.a_max, rng);
  m.apply_mode_freezing();
  return m;
}

void Model::apply_mode_freezing() {
  store->set_frozen("", false);
  if (config.mode == Mode::visual_oracle) {
    // Edge vectors are part of the input graph, so only the decoding heads freeze.
    store->set_frozen("look.", true);
    store->set_frozen("look.relation_encoder", false);
  }
  if (config.mode == Mode::reading_oracle) store->set_frozen("read.", true);
  if (config.mode != Mode::reading_oracle && config.curriculum_epochs == 0) store->set_frozen("gold.", true);
}

scene::EmbedOptions embed_options(const PipelineConfig& config, bool training) {
  scene::EmbedOptions o;
  o.slots = config.slots;
  o.permute = true;
  if (config.mode == Mode::noisy) {
    o.noise_std = config.noise_std;
    o.slot_dropout = training ? config.slot_dropout : 0.0;
  }
  return o;
}

std::vector<std::vector<int>> slot_bitmaps(const std::vector<std::vector<int>>& position_bitmaps,
                                           const std::vector<int>& slot_object, std::size_t steps) {
  if (position_bitmaps.size() < steps) {
    throw DataError("bitmaps: " + std::to_string(position_bitmaps.size()) + " steps stored, " +
                    std::to_string(steps) + " needed");
  }
  std::vector<std::vector<int>> out(steps, std::vector<int>(slot_object.size(), 0));
  for (std::size_t m = 0; m < steps; ++m) {
    for (std::size_t s = 0; s < slot_object.size(); ++s) {
      const int pos = slot_object[s];
      if (pos < 0) continue;
      if (static_cast<std::size_t>(pos) >= position_bitmaps[m].size()) {
        throw DataError("bitmap of step " + std::to_string(m + 1) + " is shorter than the scene");
      }
      out[m][s] = position_bitmaps[m][static_cast<std::size_t>(pos)];
    }
  }
  return out;
}

namespace {

nn::RngState scene_stream(const PipelineConfig& config, std::uint64_t stream) {
  return nn::RngState(config.seed).derive("look").derive(stream);
}

void require_supervision(const world::DatasetItem& item) {
  if (item.program.steps.empty()) throw DataError("question " + item.question_id + ": missing field 'program'");
  if (item.bitmaps.empty()) throw DataError("question " + item.question_id + ": missing field 'bitmaps'");
  if (item.full_answer.empty()) throw DataError("question " + item.question_id + ": missing field 'full_answer'");
  if (item.tokens.empty()) throw DataError("question " + item.question_id + ": missing field 'tokens'");
}

}  // namespace

ForwardResult total_loss(Tape& tape, const Model& model, const SymbolicScene& scene, const world::DatasetItem& item,
                         const ForwardOptions& options) {
  require_supervision(item);
  const auto& cfg = model.config;
  nn::RngState rng = scene_stream(cfg, options.stream);
  const auto graph = scene::embed_scene(tape, scene, model.schema, model.embedder, model.look.encoder,
                                        embed_options(cfg, true), rng);
  ForwardResult out;
  Var total = tape.scalar(0.0);
  auto add = [&](double weight, Var term, double& slot) {
    slot = term.scalar();
    total = total + weight * term;
  };

  if (cfg.mode != Mode::visual_oracle && cfg.lambda_look > 0.0) {
    const auto pred = scene::predict_graph(tape, graph, model.look);
    add(cfg.lambda_look, scene::set_prediction_loss(tape, pred, scene, model.schema, cfg.lambda_box).loss,
        out.components.look);
  }

  const auto steps = static_cast<Index>(item.program.size());
  std::vector<Var> instructions;
  const bool need_parser = cfg.mode != Mode::reading_oracle;
  program::InstructionVectorSeq parsed;
  if (need_parser) {
    const auto ids = model.question_vocab.encode(item.tokens);
    parsed = program::parse_question(tape, model.parser, ids, steps);
    if (cfg.lambda_read > 0.0) {
      const auto targets =
          program::encode_gold_program(item.program, model.schema, model.instruction_vocab,
                                       static_cast<std::size_t>(cfg.m_max));
      add(cfg.lambda_read, program::instruction_loss(tape, parsed, model.instruction_text, targets),
          out.components.read);
    }
  }
  if (!need_parser || options.gold_instructions) {
    instructions = program::embed_gold_program(tape, model.gold, item.program, model.instruction_vocab);
  } else {
    instructions = parsed.vectors;
  }

  const auto trace = exec::execute(tape, model.think, graph, instructions);
  if (cfg.lambda_think > 0.0) {
    const auto gold = slot_bitmaps(item.bitmaps, graph.slot_object, static_cast<std::size_t>(steps));
    add(cfg.lambda_think, exec::traversal_loss(trace, gold), out.components.think);
  }
  if (cfg.lambda_answer > 0.0) {
    const Var memory = answer::answer_memory(tape, model.answer, trace.histories, instructions);
    const auto target = model.answer_vocab.encode(item.full_answer);
    add(cfg.lambda_answer, answer::answer_loss(tape, model.answer, memory, target), out.components.answer);
  }
  out.loss = total;
  out.components.total = total.scalar();
  return out;
}

Inference infer(const Model& model, const SymbolicScene& scene, const world::DatasetItem& item, bool explain) {
  Tape tape(false);
  const auto& cfg = model.config;
  nn::RngState rng = scene_stream(cfg, nn::fnv1a64(item.question_id));
  const auto graph = scene::embed_scene(tape, scene, model.schema, model.embedder, model.look.encoder,
                                        embed_options(cfg, false), rng);
  std::vector<Var> instructions;
  if (cfg.mode == Mode::reading_oracle) {
    instructions = program::embed_gold_program(tape, model.gold, item.program, model.instruction_vocab);
  } else {
    if (item.tokens.empty()) throw DataError("question " + item.question_id + ": missing field 'tokens'");
    instructions = program::parse_question(tape, model.parser, model.question_vocab.encode(item.tokens)).vectors;
  }
  Inference out;
  out.slot_object = graph.slot_object;
  out.trace = exec::execute(tape, model.think, graph, instructions);
  const Var memory = answer::answer_memory(tape, model.answer, out.trace.histories, instructions);
  out.answer = answer::generate_answer(tape, model.answer, memory, model.answer_vocab);
  for (const auto& st : out.trace.states) {
    std::vector<int> bits(scene.objects.size(), 0);
    for (std::size_t s = 0; s < graph.slot_object.size(); ++s) {
      if (graph.slot_object[s] >= 0) bits[static_cast<std::size_t>(graph.slot_object[s])] = st.bitmap[s];
    }
    out.position_bitmaps.push_back(std::move(bits));
  }
  if (explain) {
    for (const auto& v : instructions) {
      out.trace.instructions.push_back(
          program::decode_instruction(tape, model.instruction_text, v, model.instruction_vocab, 4));
    }
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const Model& model) {
  std::filesystem::create_directories(dir);
  nn::save_parameters(dir / "parameters.ckpt", *model.store);
  Json manifest{{"format", 1},
                {"seed", model.config.seed},
                {"config_hash", model.config.hash()},
                {"config", model.config.to_json()},
                {"schema", model.schema.to_json()},
                {"schema_fingerprint", model.schema.fingerprint()},
                {"parameters", model.store->size()},
                {"scalars", model.store->scalar_count()}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw LoadError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Model load_checkpoint(const std::filesystem::path& dir, const WorldSchema* expected_schema) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw LoadError("no checkpoint manifest in " + dir.string());
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const Json::exception& e) {
    throw LoadError("manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  if (manifest.value("format", 0) != 1) throw VersioningError("unsupported checkpoint format in " + dir.string());
  WorldSchema schema;
  PipelineConfig config;
  try {
    schema = WorldSchema::from_json(manifest.at("schema"));
    config = PipelineConfig::from_json(manifest.at("config"));
  } catch (const Json::exception& e) {
    throw LoadError("manifest: " + std::string(e.what()));
  }
  if (expected_schema && !(*expected_schema == schema)) {
    throw VersioningError("checkpoint " + dir.string() + " was trained on a different world schema");
  }
  Model m = Model::create(schema, config);
  nn::load_parameters(dir / "parameters.ckpt", *m.store);
  return m;
}

}  // namespace lrta::pipeline
