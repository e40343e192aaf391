#pragma once

#include <string>
#include <vector>

#include "lrta/nn/parameter.hpp"

namespace lrta::nn {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double momentum = 0.0;  // sgd only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; <= 0 disables.
  double clip_norm = 0.0;
};

OptimizerKind parse_optimizer_kind(const std::string& name);

/// Stateful first-order optimizer over a ParameterStore. Moment buffers are
/// keyed by registration order.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  /// Applies one update to every non-frozen parameter, then zeroes all
  /// gradients. Throws NumericError naming the first non-finite gradient.
  void step(ParameterStore& params, double learning_rate);

  const OptimizerConfig& config() const { return config_; }
  long steps_taken() const { return t_; }

 private:
  OptimizerConfig config_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

/// One-shot update with a fresh optimizer (no carried moments).
void optimizer_step(ParameterStore& params, double learning_rate, const OptimizerConfig& config);

}  // namespace lrta::nn
