#include "lrta/nn/parameter.hpp"

#include <cmath>
#include <cstring>

namespace lrta::nn {

Parameter& ParameterStore::create(const std::string& name, Index rows, Index cols, Init init,
                                  RngState& rng) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("parameter '" + name + "' needs positive shape, got " + shape_string(rows, cols));
  }
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  Parameter p;
  p.name = name;
  p.value.resize(rows, cols);
  switch (init) {
    case Init::zeros:
      p.value.setZero();
      break;
    case Init::ones:
      p.value.setOnes();
      break;
    case Init::glorot_uniform: {
      const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-a, a);
      break;
    }
  }
  p.zero_grad();
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LoadError("unknown parameter '" + name + "'");
  return params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LoadError("unknown parameter '" + name + "'");
  return params_[it->second];
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void ParameterStore::set_frozen(const std::string& prefix, bool frozen) {
  for (auto& p : params_) {
    if (p.name.rfind(prefix, 0) == 0) p.frozen = frozen;
  }
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::uint64_t ParameterStore::fingerprint(const std::string& prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    if (p.name.rfind(prefix, 0) != 0) continue;
    h = mix64(h ^ fnv1a64(p.name));
    for (Index i = 0; i < p.value.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, p.value.data() + i, sizeof bits);
      h = mix64(h ^ bits);
    }
  }
  return h;
}

}  // namespace lrta::nn
