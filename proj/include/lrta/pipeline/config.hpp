#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lrta/nn/optimizer.hpp"
#include "lrta/world/schema.hpp"

namespace lrta::pipeline {

enum class Mode { visual_oracle, reading_oracle, end_to_end, noisy };

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

/// Flat training / evaluation configuration. Every field maps to one JSON
/// key of the same name.
struct PipelineConfig {
  // dimensions
  long dim = 64;
  long slots = 12;
  long m_max = 5;
  long a_max = 16;
  long hidden = 128;
  long think_hidden = 128;
  long think_layers = 2;
  long heads = 2;
  long encoder_blocks = 2;
  long text_blocks = 1;
  long answer_blocks = 2;
  long max_question_len = 32;

  // losses
  double lambda_look = 1.0;
  double lambda_read = 1.0;
  double lambda_think = 1.0;
  double lambda_answer = 1.0;
  double lambda_box = 1.0;

  // optimization
  std::string optimizer = "adam";
  double lr = 1e-3;
  double lr_min_ratio = 0.1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double clip_norm = 5.0;
  long epochs = 30;
  long batch_size = 32;
  long curriculum_epochs = 0;

  // perception
  Mode mode = Mode::visual_oracle;
  double noise_std = 0.1;
  double slot_dropout = 0.05;

  std::uint64_t seed = 7;
  std::string data_dir = "data/synthetic";
  std::string out_dir = "runs/default";

  Json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ContractError.
  static PipelineConfig from_json(const Json& j);
  /// Throws ContractError naming the first invalid field.
  void validate() const;
  std::uint64_t hash() const;
  nn::OptimizerConfig optimizer_config() const;
};

/// Reads a JSON config file (empty path -> defaults) and applies
/// "--key value" overrides, converting each value to the type of the key's
/// default.
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// Applies "--key value" pairs to a flat JSON object of defaults.
void apply_overrides(Json& config, const std::vector<std::string>& overrides);

}  // namespace lrta::pipeline
