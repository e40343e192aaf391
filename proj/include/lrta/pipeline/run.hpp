#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrta/perturb/perturb.hpp"
#include "lrta/pipeline/model.hpp"

namespace lrta::pipeline {

/// Scenes indexed by id plus the questions over them.
struct Dataset {
  std::map<std::string, SymbolicScene> scenes;
  std::vector<world::DatasetItem> items;

  const SymbolicScene& scene_of(const world::DatasetItem& item) const;
};

Dataset load_dataset(const std::filesystem::path& dir, const std::string& split);
Dataset make_dataset(const world::DatasetSplit& split);

struct EpochLog {
  long epoch = 0;
  LossComponents loss;  // means per question
  double valid_short = 0.0;
  double valid_full = 0.0;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  long best_epoch = 0;

  /// Without wall time, so that equal runs give equal documents.
  Json to_json() const;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Seeded shuffling, mini-batch Adam/SGD, cosine learning-rate decay, and
/// best-validation selection. Epoch 0 is the initialization. Throws
/// NumericError with epoch/batch coordinates on a non-finite loss.
TrainResult train(const PipelineConfig& config, const WorldSchema& schema, const Dataset& train_set,
                  const Dataset& valid_set, const EpochCallback& on_epoch = {});

enum class Ablation { none, strip_attributes, strip_relations, strip_both };

std::string ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);

struct SubsetScore {
  std::size_t n = 0;
  double short_acc = 0.0;
  double full_acc = 0.0;
};

struct EvalReport {
  answer::Metrics metrics;
  /// Subsets: "relate" (has a relate step), "attribute" (has a filter or
  /// verify step), and their complements.
  std::map<std::string, SubsetScore> subsets;
  double bitmap_exact = 0.0;
  double bitmap_iou = 0.0;
  std::vector<answer::Prediction> predictions;

  Json to_json() const;
};

/// Runs the model over every question. Scenes are ablated before embedding;
/// references stay those of the dataset.
EvalReport evaluate(const Model& model, const Dataset& data, Ablation ablation = Ablation::none);

/// Predictions scored against references only.
EvalReport score_predictions(const std::vector<answer::Prediction>& predictions, const Dataset& data);

/// Before/after accuracies for attribute masking on the "attribute" subset
/// and VB/PRPN masking on the "relate" subset, plus "all" rows.
std::vector<perturb::DropRow> perturbation_rows(const Model& model, const Dataset& data,
                                                const perturb::CueLexicons& lexicons);

/// Scene-ablation rows on the "relate" and "attribute" subsets.
std::vector<perturb::DropRow> ablation_rows(const Model& model, const Dataset& data);

/// Per-step instruction text, active objects (as "category#id") and answer.
Json explain(const Model& model, const Dataset& data, const std::string& question_id);

}  // namespace lrta::pipeline
