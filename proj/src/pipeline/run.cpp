#include "lrta/pipeline/run.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "lrta/error.hpp"
#include "lrta/exec/oracle.hpp"
#include "lrta/program/render.hpp"

namespace lrta::pipeline {

const SymbolicScene& Dataset::scene_of(const world::DatasetItem& item) const {
  auto it = scenes.find(item.scene_id);
  if (it == scenes.end()) throw DataError("question " + item.question_id + " references unknown scene " + item.scene_id);
  return it->second;
}

Dataset make_dataset(const world::DatasetSplit& split) {
  Dataset d;
  for (const auto& s : split.scenes) d.scenes.emplace(s.scene_id, s);
  d.items = split.items;
  for (const auto& item : d.items) d.scene_of(item);
  return d;
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& split) {
  return make_dataset(world::read_split(dir, split));
}

Json TrainLog::to_json() const {
  Json rows = Json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"total", e.loss.total},
                    {"look", e.loss.look},
                    {"read", e.loss.read},
                    {"think", e.loss.think},
                    {"answer", e.loss.answer},
                    {"valid_short", e.valid_short},
                    {"valid_full", e.valid_full}});
  }
  return Json{{"epochs", rows}, {"best_epoch", best_epoch}};
}

namespace {

std::vector<nn::Tensor> snapshot(const nn::ParameterStore& store) {
  std::vector<nn::Tensor> out;
  for (const auto& p : store.all()) out.push_back(p.value);
  return out;
}

void restore(nn::ParameterStore& store, const std::vector<nn::Tensor>& values) {
  std::size_t i = 0;
  for (auto& p : store.all()) p.value = values[i++];
}

bool better(const EpochLog& a, const EpochLog& b) {
  if (a.valid_short != b.valid_short) return a.valid_short > b.valid_short;
  return a.valid_full > b.valid_full;
}

}  // namespace

TrainResult train(const PipelineConfig& config, const WorldSchema& schema, const Dataset& train_set,
                  const Dataset& valid_set, const EpochCallback& on_epoch) {
  Model model = Model::create(schema, config);
  nn::Optimizer optimizer(config.optimizer_config());
  const nn::RngState root = nn::RngState(config.seed).derive("train");
  const auto n = train_set.items.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t batches_per_epoch = n == 0 ? 0 : (n + batch - 1) / batch;
  const double total_batches = static_cast<double>(batches_per_epoch * static_cast<std::size_t>(config.epochs));

  TrainResult result{std::move(model), {}};
  Model& m = result.model;
  auto validate = [&](EpochLog& log) {
    if (valid_set.items.empty()) return;
    const auto report = evaluate(m, valid_set);
    log.valid_short = report.metrics.short_acc;
    log.valid_full = report.metrics.full_acc;
  };

  EpochLog init;
  validate(init);
  result.log.epochs.push_back(init);
  if (on_epoch) on_epoch(init);
  EpochLog best = init;
  auto best_values = snapshot(*m.store);

  std::size_t global_batch = 0;
  for (long epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const bool curriculum = epoch <= config.curriculum_epochs;
    if (config.curriculum_epochs > 0 && epoch == config.curriculum_epochs + 1) m.store->set_frozen("gold.", true);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    nn::RngState shuffle = root.derive("shuffle").derive(static_cast<std::uint64_t>(epoch));
    shuffle.shuffle(order);

    EpochLog log;
    log.epoch = epoch;
    for (std::size_t b = 0; b < batches_per_epoch; ++b, ++global_batch) {
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(n, lo + batch);
      const double scale = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) {
        const auto& item = train_set.items[order[k]];
        nn::Tape tape;
        ForwardOptions opts;
        opts.gold_instructions = curriculum;
        opts.stream = (static_cast<std::uint64_t>(epoch) << 32) ^ static_cast<std::uint64_t>(order[k]);
        auto fwd = total_loss(tape, m, train_set.scene_of(item), item, opts);
        if (!std::isfinite(fwd.components.total)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                             " (question " + item.question_id + ")");
        }
        tape.backward(scale * fwd.loss);
        log.loss.look += fwd.components.look;
        log.loss.read += fwd.components.read;
        log.loss.think += fwd.components.think;
        log.loss.answer += fwd.components.answer;
        log.loss.total += fwd.components.total;
      }
      const double progress = total_batches > 0 ? static_cast<double>(global_batch) / total_batches : 0.0;
      const double lr = config.lr * (config.lr_min_ratio +
                                     (1.0 - config.lr_min_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
      try {
        optimizer.step(*m.store, lr);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      }
    }
    if (n > 0) {
      const double inv = 1.0 / static_cast<double>(n);
      log.loss.look *= inv;
      log.loss.read *= inv;
      log.loss.think *= inv;
      log.loss.answer *= inv;
      log.loss.total *= inv;
    }
    validate(log);
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (better(log, best)) {
      best = log;
      best_values = snapshot(*m.store);
      result.log.best_epoch = epoch;
    }
  }
  restore(*m.store, best_values);
  m.apply_mode_freezing();
  return result;
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::strip_attributes: return "strip_attributes";
    case Ablation::strip_relations: return "strip_relations";
    case Ablation::strip_both: return "strip_both";
  }
  return "?";
}

Ablation parse_ablation(const std::string& name) {
  for (Ablation a : {Ablation::none, Ablation::strip_attributes, Ablation::strip_relations, Ablation::strip_both}) {
    if (ablation_name(a) == name) return a;
  }
  throw ContractError("unknown ablation '" + name + "' (none, strip_attributes, strip_relations, strip_both)");
}

namespace {

bool attribute_dependent(const program::InstructionProgram& p) {
  for (const auto& s : p.steps) {
    if (s.op == program::Opcode::filter_attr || s.op == program::Opcode::verify_attr) return true;
  }
  return false;
}

std::vector<std::string> subsets_of(const world::DatasetItem& item) {
  return {item.program.has_relate() ? "relate" : "no_relate", attribute_dependent(item.program) ? "attribute"
                                                                                                : "no_attribute"};
}

answer::Prediction reference_of(const world::DatasetItem& item) {
  return {item.question_id, item.full_answer, item.short_answer, item.question_type};
}

void fill_subsets(EvalReport& report, const Dataset& data) {
  std::map<std::string, const answer::Prediction*> by_id;
  for (const auto& p : report.predictions) by_id[p.question_id] = &p;
  std::map<std::string, std::pair<std::size_t, std::size_t>> hits;
  for (const auto& item : data.items) {
    const auto& p = *by_id.at(item.question_id);
    for (const auto& s : subsets_of(item)) {
      ++report.subsets[s].n;
      hits[s].first += p.short_answer == item.short_answer;
      hits[s].second += p.full_answer == item.full_answer;
    }
  }
  for (auto& [name, sc] : report.subsets) {
    sc.short_acc = static_cast<double>(hits[name].first) / static_cast<double>(sc.n);
    sc.full_acc = static_cast<double>(hits[name].second) / static_cast<double>(sc.n);
  }
}

SymbolicScene ablate(const SymbolicScene& scene, Ablation a) {
  switch (a) {
    case Ablation::none: return scene;
    case Ablation::strip_attributes: return strip_attributes(scene);
    case Ablation::strip_relations: return strip_relations(scene);
    case Ablation::strip_both: return strip_relations(strip_attributes(scene));
  }
  return scene;
}

}  // namespace

Json EvalReport::to_json() const {
  Json j = answer::metrics_to_json(metrics);
  Json subs = Json::object();
  for (const auto& [name, s] : subsets) subs[name] = {{"n", s.n}, {"short_acc", s.short_acc}, {"full_acc", s.full_acc}};
  j["subsets"] = subs;
  j["bitmap_exact"] = bitmap_exact;
  j["bitmap_iou"] = bitmap_iou;
  return j;
}

EvalReport score_predictions(const std::vector<answer::Prediction>& predictions, const Dataset& data) {
  std::vector<answer::Prediction> refs;
  for (const auto& item : data.items) refs.push_back(reference_of(item));
  EvalReport r;
  r.metrics = answer::score(predictions, refs);
  r.predictions = predictions;
  fill_subsets(r, data);
  return r;
}

EvalReport evaluate(const Model& model, const Dataset& data, Ablation ablation) {
  std::vector<answer::Prediction> preds;
  double exact = 0.0, iou = 0.0;
  for (const auto& item : data.items) {
    const SymbolicScene scene = ablate(data.scene_of(item), ablation);
    const auto inf = infer(model, scene, item);
    preds.push_back({item.question_id, inf.answer.tokens, inf.answer.short_answer, item.question_type});

    const auto& gold = item.bitmaps;
    bool all_equal = gold.size() == inf.position_bitmaps.size();
    double item_iou = 0.0;
    for (std::size_t m = 0; m < gold.size(); ++m) {
      std::size_t inter = 0, uni = 0;
      const bool have = m < inf.position_bitmaps.size();
      for (std::size_t i = 0; i < gold[m].size(); ++i) {
        const int p = have ? inf.position_bitmaps[m][i] : 0;
        inter += gold[m][i] && p;
        uni += gold[m][i] || p;
        if (p != gold[m][i]) all_equal = false;
      }
      item_iou += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    exact += all_equal;
    iou += gold.empty() ? 0.0 : item_iou / static_cast<double>(gold.size());
  }
  EvalReport r = score_predictions(preds, data);
  if (!data.items.empty()) {
    r.bitmap_exact = exact / static_cast<double>(data.items.size());
    r.bitmap_iou = iou / static_cast<double>(data.items.size());
  }
  return r;
}

std::vector<perturb::DropRow> perturbation_rows(const Model& model, const Dataset& data,
                                                const perturb::CueLexicons& lexicons) {
  const auto before = evaluate(model, data);
  std::vector<perturb::DropRow> rows;
  for (auto [kind, subset] : {std::pair{perturb::MaskKind::attributes, "attribute"},
                              std::pair{perturb::MaskKind::vb_prpn, "relate"}}) {
    Dataset masked = data;
    for (auto& item : masked.items) item.tokens = perturb::mask_tokens(item.tokens, kind, lexicons).tokens;
    const auto after = evaluate(model, masked);
    const auto name = perturb::mask_kind_name(kind);
    auto sub = [&](const EvalReport& r) {
      auto it = r.subsets.find(subset);
      return it == r.subsets.end() ? SubsetScore{} : it->second;
    };
    rows.push_back({name, subset, 100.0 * sub(before).short_acc, 100.0 * sub(after).short_acc, sub(before).n});
    rows.push_back({name, "all", 100.0 * before.metrics.short_acc, 100.0 * after.metrics.short_acc, before.metrics.n});
  }
  return rows;
}

std::vector<perturb::DropRow> ablation_rows(const Model& model, const Dataset& data) {
  const auto before = evaluate(model, data);
  std::vector<perturb::DropRow> rows;
  for (auto [ablation, subset] : {std::pair{Ablation::strip_relations, "relate"},
                                  std::pair{Ablation::strip_attributes, "attribute"}}) {
    const auto after = evaluate(model, data, ablation);
    const auto& b = before.subsets.at(subset);
    rows.push_back({ablation_name(ablation), subset, 100.0 * b.short_acc, 100.0 * after.subsets.at(subset).short_acc,
                    b.n});
  }
  return rows;
}

Json explain(const Model& model, const Dataset& data, const std::string& question_id) {
  const world::DatasetItem* item = nullptr;
  for (const auto& it : data.items) {
    if (it.question_id == question_id) item = &it;
  }
  if (!item) throw DataError("unknown question id '" + question_id + "'");
  const auto& scene = data.scene_of(*item);
  const auto inf = infer(model, scene, *item, true);
  std::vector<std::string> names;
  for (int pos : inf.slot_object) {
    if (pos < 0) {
      names.push_back("-");
    } else {
      const auto& o = scene.objects[static_cast<std::size_t>(pos)];
      names.push_back(o.category + "#" + std::to_string(o.id));
    }
  }
  Json j = exec::trace_to_json(inf.trace, names);
  j["question_id"] = item->question_id;
  j["question"] = program::join_tokens(item->tokens);
  j["full_answer"] = program::join_tokens(inf.answer.tokens);
  j["short_answer"] = inf.answer.short_answer;
  j["reference"] = program::join_tokens(item->full_answer);
  return j;
}

}  // namespace lrta::pipeline
