#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lrta/nn/rng.hpp"
#include "lrta/nn/tensor.hpp"

namespace lrta::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor gradient;
  /// Frozen parameters enter the tape as constants and are skipped by the
  /// optimizer.
  bool frozen = false;

  void zero_grad() { gradient.setZero(value.rows(), value.cols()); }
};

enum class Init { glorot_uniform, zeros, ones };

/// Owns every parameter of a model. Addresses are stable for the store's
/// lifetime; iteration follows registration order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  /// glorot_uniform draws from U(-a, a), a = sqrt(6 / (rows + cols)).
  Parameter& create(const std::string& name, Index rows, Index cols, Init init, RngState& rng);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  void zero_grad();
  /// Sets `frozen` on every parameter whose name starts with `prefix`.
  void set_frozen(const std::string& prefix, bool frozen);
  std::size_t scalar_count() const;

  /// Hash over names and bit patterns of all values (frozen or not).
  std::uint64_t fingerprint(const std::string& prefix = "") const;

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace lrta::nn
