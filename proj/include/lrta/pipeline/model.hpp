#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lrta/answer/answer.hpp"
#include "lrta/exec/engine.hpp"
#include "lrta/pipeline/config.hpp"
#include "lrta/program/parser.hpp"
#include "lrta/scene/scene_graph.hpp"
#include "lrta/world/worldgen.hpp"

namespace lrta::pipeline {

/// Perception, parser, engine and answer modules over one parameter store.
/// Parameter prefixes: "embed." (scene embedder), "look." (scene-graph heads
/// and relation encoder), "read." (parser and instruction text decoder),
/// "gold." (gold instruction embedder), "think." and "answer.".
struct Model {
  PipelineConfig config;
  WorldSchema schema;
  Vocabulary question_vocab;
  Vocabulary instruction_vocab;
  Vocabulary answer_vocab;
  std::unique_ptr<nn::ParameterStore> store;

  scene::SceneEmbedder embedder;
  scene::SceneGraphHeads look;
  program::QuestionParser parser;
  nn::SequenceDecoder instruction_text;
  program::GoldInstructionEmbedder gold;
  exec::ExecutionEngine think;
  answer::AnswerGenerator answer;

  /// Deterministic initialization from config.seed; freezes the modules the
  /// mode replaces by oracles.
  static Model create(const WorldSchema& schema, const PipelineConfig& config);
  void apply_mode_freezing();
};

struct LossComponents {
  double look = 0.0;
  double read = 0.0;
  double think = 0.0;
  double answer = 0.0;
  double total = 0.0;
};

/// Training-time options for one forward pass.
struct ForwardOptions {
  bool gold_instructions = false;
  std::uint64_t stream = 0;
};

struct ForwardResult {
  nn::Var loss;
  LossComponents components;
};

/// Weighted sum of the four module losses for one question. Terms whose
/// weight is zero or which the mode replaces by an oracle are skipped.
/// Throws DataError when a supervision field needed by an active term is
/// missing.
ForwardResult total_loss(nn::Tape& tape, const Model& model, const SymbolicScene& scene,
                         const world::DatasetItem& item, const ForwardOptions& options);

struct Inference {
  std::vector<int> slot_object;
  exec::ExecTrace trace;
  answer::FullAnswer answer;
  /// Per step, predicted bitmap over scene positions.
  std::vector<std::vector<int>> position_bitmaps;
};

/// Free-running inference; `explain` additionally decodes every instruction
/// vector to text.
Inference infer(const Model& model, const SymbolicScene& scene, const world::DatasetItem& item, bool explain = false);

/// Embedding options used by the mode; `training` enables dropout.
scene::EmbedOptions embed_options(const PipelineConfig& config, bool training);

/// Per-step gold bits in slot layout.
std::vector<std::vector<int>> slot_bitmaps(const std::vector<std::vector<int>>& position_bitmaps,
                                           const std::vector<int>& slot_object, std::size_t steps);

/// Checkpoint directory: parameters.ckpt plus manifest.json (config, seed,
/// config hash, schema).
void save_checkpoint(const std::filesystem::path& dir, const Model& model);
/// Rebuilds the model from the manifest and loads its parameters. When
/// `expected_schema` is given it must equal the stored one, else
/// VersioningError.
Model load_checkpoint(const std::filesystem::path& dir, const WorldSchema* expected_schema = nullptr);

}  // namespace lrta::pipeline
