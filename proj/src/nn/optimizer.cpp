#include "lrta/nn/optimizer.hpp"

#include <cmath>

namespace lrta::nn {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ContractError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void Optimizer::step(ParameterStore& params, double learning_rate) {
  auto& all = params.all();
  for (const auto& p : all) {
    if (!p.frozen && !p.gradient.allFinite()) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }
  if (m_.size() != all.size()) {
    m_.resize(all.size());
    v_.resize(all.size());
  }
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : all) {
      if (!p.frozen) sq += p.gradient.squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  ++t_;
  for (std::size_t k = 0; k < all.size(); ++k) {
    Parameter& p = all[k];
    if (p.frozen) continue;
    const Tensor g = scale * p.gradient;
    if (config_.kind == OptimizerKind::sgd) {
      if (config_.momentum != 0.0) {
        if (m_[k].size() == 0) m_[k] = Tensor::Zero(g.rows(), g.cols());
        m_[k] = config_.momentum * m_[k] + g;
        p.value -= learning_rate * m_[k];
      } else {
        p.value -= learning_rate * g;
      }
    } else {
      if (m_[k].size() == 0) {
        m_[k] = Tensor::Zero(g.rows(), g.cols());
        v_[k] = Tensor::Zero(g.rows(), g.cols());
      }
      m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
      v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
      p.value.array() -= learning_rate * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.epsilon);
    }
  }
  params.zero_grad();
}

void optimizer_step(ParameterStore& params, double learning_rate, const OptimizerConfig& config) {
  Optimizer opt(config);
  opt.step(params, learning_rate);
}

}  // namespace lrta::nn
