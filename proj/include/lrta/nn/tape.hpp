#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "lrta/nn/parameter.hpp"
#include "lrta/nn/tensor.hpp"

namespace lrta::nn {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1 x 1 node.
  double scalar() const;
  bool valid() const { return tape != nullptr && id >= 0; }
};

/// Reverse-mode recording for one example's dynamic graph. Nodes are appended
/// in evaluation order, so reverse iteration is a valid topological order.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, int self)>;

  /// With gradients disabled no backward closures are stored (evaluation).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var scalar(double v);
  /// Leaf bound to a parameter; one leaf per parameter per tape.
  Var param(Parameter& p);

  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.param ? n.param->value : n.value;
  }
  /// Gradient accumulated so far at a node (empty if none reached it).
  const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  /// Propagates d(loss)/d(node) to every reachable node and adds the leaf
  /// results into Parameter::gradient. `loss` must be 1 x 1.
  void backward(Var loss);

  // Used by operation implementations.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backprop fn);
  Var record(Tensor value, std::span<const Var> inputs, Backprop fn);
  template <class Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    Backprop backprop;
    bool requires_grad = false;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::vector<std::pair<const Parameter*, int>> param_nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Shapes follow the row-batch convention: a vector
// is 1 x D, a set of K vectors is K x D.
// ---------------------------------------------------------------------------

/// Same shape, or `b` a 1 x C row broadcast over the rows of `a`.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(double s, Var a);
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);
/// a * b^T.
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var relu(Var x);
Var sigmoid(Var x);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
/// Row-wise layer normalization; gain and shift are 1 x C.
Var layer_norm_rows(Var x, Var gain, Var shift, double eps);

Var hcat(std::span<const Var> parts);
Var vcat(std::span<const Var> parts);
inline Var hcat(std::initializer_list<Var> parts) { return hcat(std::span<const Var>(parts.begin(), parts.size())); }
inline Var vcat(std::initializer_list<Var> parts) { return vcat(std::span<const Var>(parts.begin(), parts.size())); }
Var slice_rows(Var x, Index start, Index count);
Var slice_cols(Var x, Index start, Index count);
Var gather_rows(Var x, std::span<const Index> rows);
/// Mean over consecutive groups of `group_size` rows; zero rows when the
/// group is empty.
Var segment_mean_rows(Var x, Index groups, Index group_size);
Var broadcast_rows(Var row, Index rows);

Var sum(Var x);
Var mean(Var x);
/// Sum over rows r of x(r, targets[r]); rows with target < 0 are skipped.
Var pick_sum(Var x, std::span<const Index> targets);
/// Sum of |a - b| entries.
Var l1_distance(Var a, Var b);

}  // namespace lrta::nn
