#include "lrta/nn/tape.hpp"

#include <algorithm>

namespace lrta::nn {

const Tensor& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("expected scalar node, got " + shape_string(v));
  }
  return v(0, 0);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::scalar(double v) {
  Tensor t(1, 1);
  t(0, 0) = v;
  return constant(std::move(t));
}

Var Tape::param(Parameter& p) {
  for (const auto& [ptr, id] : param_nodes_) {
    if (ptr == &p) return Var{this, id};
  }
  Node n;
  n.param = &p;
  n.requires_grad = grad_enabled_ && !p.frozen;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace_back(&p, id);
  return Var{this, id};
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backprop fn) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (v.tape != this) throw ContractError("operands recorded on different tapes");
      if (requires_grad(v.id)) n.requires_grad = true;
    }
    if (n.requires_grad) n.backprop = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backprop fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("loss recorded on a different tape");
  const Tensor& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward needs a scalar loss, got " + shape_string(lv));
  }
  if (!requires_grad(loss.id)) return;
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(loss.id)].grad = Tensor::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.param) {
      Parameter& p = *n.param;
      if (p.gradient.rows() != p.value.rows() || p.gradient.cols() != p.value.cols()) p.zero_grad();
      p.gradient += n.grad;
    } else if (n.backprop) {
      n.backprop(*this, id);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace

Var operator+(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return a.tape->record(av + bv, {a, b}, [a, b](Tape& t, int self) {
      t.accumulate(a.id, t.grad(self));
      t.accumulate(b.id, t.grad(self));
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Tensor out = av.rowwise() + bv.row(0);
    return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
      t.accumulate(a.id, t.grad(self));
      t.accumulate(b.id, t.grad(self).colwise().sum());
    });
  }
  throw DimensionError("add: shape mismatch " + shape_string(av) + " vs " + shape_string(bv));
}

Var operator-(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate(b.id, -t.grad(self));
  });
}

Var operator*(double s, Var a) {
  return a.tape->record(s * a.value(), {a}, [a, s](Tape& t, int self) { t.accumulate(a.id, s * t.grad(self)); });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a.value(), b.value());
  return a.tape->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self).cwiseProduct(t.value(b.id)));
    t.accumulate(b.id, t.grad(self).cwiseProduct(t.value(a.id)));
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(av) + " * " + shape_string(bv));
  }
  Tensor out = av * bv;
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
    if (t.requires_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ " + shape_string(av) + " * " + shape_string(bv) + "^T");
  }
  Tensor out = av * bv.transpose();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.transpose() * t.value(a.id));
  });
}

Var transpose(Var a) {
  Tensor out = a.value().transpose();
  return a.tape->record(std::move(out), {a}, [a](Tape& t, int self) { t.accumulate(a.id, t.grad(self).transpose()); });
}

Var relu(Var x) {
  Tensor out = x.value().cwiseMax(0.0);
  return x.tape->record(std::move(out), {x}, [x](Tape& t, int self) {
    t.accumulate(x.id, (t.value(x.id).array() > 0.0).cast<double>().matrix().cwiseProduct(t.grad(self)));
  });
}

Var sigmoid(Var x) {
  Tensor out = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return x.tape->record(std::move(out), {x}, [x](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.accumulate(x.id, (t.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var softmax_rows(Var x) {
  Tensor out = nn::softmax_rows(x.value());
  return x.tape->record(std::move(out), {x}, [x](Tape& t, int self) {
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    const ColVector dot = g.cwiseProduct(y).rowwise().sum();
    Tensor dx = y.cwiseProduct(g - dot.replicate(1, g.cols()));
    t.accumulate(x.id, dx);
  });
}

Var log_softmax_rows(Var x) {
  Tensor out = nn::log_softmax_rows(x.value());
  return x.tape->record(std::move(out), {x}, [x](Tape& t, int self) {
    const Tensor p = t.value(self).array().exp().matrix();
    const Tensor& g = t.grad(self);
    const ColVector gs = g.rowwise().sum();
    Tensor dx = g - p.cwiseProduct(gs.replicate(1, g.cols()));
    t.accumulate(x.id, dx);
  });
}

Var layer_norm_rows(Var x, Var gain, Var shift, double eps) {
  const Tensor& xv = x.value();
  if (xv.cols() < 1) throw DimensionError("layer_norm: zero-length vector");
  if (gain.rows() != 1 || gain.cols() != xv.cols() || shift.rows() != 1 || shift.cols() != xv.cols()) {
    throw DimensionError("layer_norm: input " + shape_string(xv) + " vs gain " + shape_string(gain.value()) +
                         " / shift " + shape_string(shift.value()));
  }
  ColVector inv_std;
  Tensor xhat = standardize_rows(xv, eps, &inv_std);
  Tensor out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += shift.value().row(0);
  return x.tape->record(std::move(out), {x, gain, shift},
                        [x, gain, shift, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, int self) {
                          const Tensor& g = t.grad(self);
                          if (t.requires_grad(gain.id)) t.accumulate(gain.id, g.cwiseProduct(xhat).colwise().sum());
                          if (t.requires_grad(shift.id)) t.accumulate(shift.id, g.colwise().sum());
                          if (!t.requires_grad(x.id)) return;
                          const double d = static_cast<double>(g.cols());
                          Tensor dxhat = (g.array().rowwise() * t.value(gain.id).row(0).array()).matrix();
                          Tensor dx(g.rows(), g.cols());
                          for (Index r = 0; r < g.rows(); ++r) {
                            const double m1 = dxhat.row(r).sum() / d;
                            const double m2 = dxhat.row(r).dot(xhat.row(r)) / d;
                            dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
                          }
                          t.accumulate(x.id, dx);
                        });
}

Var hcat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("hcat of nothing");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw DimensionError("hcat: row counts differ " + shape_string(parts[0].value()) + " vs " + shape_string(p.value()));
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<Index> offsets;
  Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    offsets.push_back(c);
    c += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [inputs, offsets](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      t.accumulate(inputs[k].id, g.middleCols(offsets[k], inputs[k].cols()));
    }
  });
}

Var vcat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("vcat of nothing");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw DimensionError("vcat: column counts differ " + shape_string(parts[0].value()) + " vs " + shape_string(p.value()));
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::vector<Index> offsets;
  Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    offsets.push_back(r);
    r += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [inputs, offsets](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      t.accumulate(inputs[k].id, g.middleRows(offsets[k], inputs[k].rows()));
    }
  });
}

Var slice_rows(Var x, Index start, Index count) {
  const Tensor& xv = x.value();
  if (start < 0 || count < 0 || start + count > xv.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " + shape_string(xv));
  }
  Tensor out = xv.middleRows(start, count);
  return x.tape->record(std::move(out), {x}, [x, start, count](Tape& t, int self) {
    Tensor g = Tensor::Zero(t.value(x.id).rows(), t.value(x.id).cols());
    g.middleRows(start, count) = t.grad(self);
    t.accumulate(x.id, g);
  });
}

Var slice_cols(Var x, Index start, Index count) {
  const Tensor& xv = x.value();
  if (start < 0 || count < 0 || start + count > xv.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " + shape_string(xv));
  }
  Tensor out = xv.middleCols(start, count);
  return x.tape->record(std::move(out), {x}, [x, start, count](Tape& t, int self) {
    Tensor g = Tensor::Zero(t.value(x.id).rows(), t.value(x.id).cols());
    g.middleCols(start, count) = t.grad(self);
    t.accumulate(x.id, g);
  });
}

Var gather_rows(Var x, std::span<const Index> rows) {
  const Tensor& xv = x.value();
  Tensor out(static_cast<Index>(rows.size()), xv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= xv.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[r]) + " out of " + shape_string(xv));
    }
    out.row(static_cast<Index>(r)) = xv.row(rows[r]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return x.tape->record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor dx = Tensor::Zero(t.value(x.id).rows(), t.value(x.id).cols());
    for (std::size_t r = 0; r < idx.size(); ++r) dx.row(idx[r]) += g.row(static_cast<Index>(r));
    t.accumulate(x.id, dx);
  });
}

Var segment_mean_rows(Var x, Index groups, Index group_size) {
  const Tensor& xv = x.value();
  if (xv.rows() != groups * group_size) {
    throw DimensionError("segment_mean_rows: " + shape_string(xv) + " is not " + std::to_string(groups) + " groups of " +
                         std::to_string(group_size));
  }
  Tensor out = Tensor::Zero(groups, xv.cols());
  if (group_size > 0) {
    for (Index g = 0; g < groups; ++g) {
      out.row(g) = xv.middleRows(g * group_size, group_size).colwise().sum() / static_cast<double>(group_size);
    }
  }
  return x.tape->record(std::move(out), {x}, [x, groups, group_size](Tape& t, int self) {
    if (group_size == 0) return;
    const Tensor& g = t.grad(self);
    Tensor dx(groups * group_size, g.cols());
    const double inv = 1.0 / static_cast<double>(group_size);
    for (Index k = 0; k < groups; ++k) {
      dx.middleRows(k * group_size, group_size) = (g.row(k) * inv).replicate(group_size, 1);
    }
    t.accumulate(x.id, dx);
  });
}

Var broadcast_rows(Var row, Index rows) {
  if (row.rows() != 1) throw DimensionError("broadcast_rows: expected a row, got " + shape_string(row.value()));
  Tensor out = row.value().replicate(rows, 1);
  return row.tape->record(std::move(out), {row}, [row](Tape& t, int self) {
    t.accumulate(row.id, t.grad(self).colwise().sum());
  });
}

Var sum(Var x) {
  Tensor out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape->record(std::move(out), {x}, [x](Tape& t, int self) {
    const Tensor& xv = t.value(x.id);
    t.accumulate(x.id, Tensor::Constant(xv.rows(), xv.cols(), t.grad(self)(0, 0)));
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return (1.0 / n) * sum(x);
}

Var pick_sum(Var x, std::span<const Index> targets) {
  const Tensor& xv = x.value();
  if (static_cast<Index>(targets.size()) != xv.rows()) {
    throw DimensionError("pick_sum: " + std::to_string(targets.size()) + " targets for " + shape_string(xv));
  }
  double total = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] < 0) continue;
    if (targets[r] >= xv.cols()) {
      throw VocabularyError("pick_sum: target " + std::to_string(targets[r]) + " out of " + std::to_string(xv.cols()) + " classes");
    }
    total += xv(static_cast<Index>(r), targets[r]);
  }
  Tensor out(1, 1);
  out(0, 0) = total;
  std::vector<Index> tg(targets.begin(), targets.end());
  return x.tape->record(std::move(out), {x}, [x, tg = std::move(tg)](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    Tensor dx = Tensor::Zero(t.value(x.id).rows(), t.value(x.id).cols());
    for (std::size_t r = 0; r < tg.size(); ++r) {
      if (tg[r] >= 0) dx(static_cast<Index>(r), tg[r]) = g;
    }
    t.accumulate(x.id, dx);
  });
}

Var l1_distance(Var a, Var b) {
  require_same_shape("l1_distance", a.value(), b.value());
  Tensor out(1, 1);
  out(0, 0) = (a.value() - b.value()).cwiseAbs().sum();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    Tensor s = (t.value(a.id) - t.value(b.id)).unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
    t.accumulate(a.id, g * s);
    t.accumulate(b.id, -g * s);
  });
}

}  // namespace lrta::nn
