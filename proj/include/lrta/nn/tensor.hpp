#pragma once

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <string>

#include "lrta/error.hpp"

namespace lrta::nn {

using Index = Eigen::Index;

template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <class Scalar>
using ColVectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Scalar = double;
using Matrix = MatrixT<Scalar>;
using RowVector = RowVectorT<Scalar>;
using ColVector = ColVectorT<Scalar>;

/// Dense 2-D row-major block. Vectors are 1 x D rows; a batch of vectors is
/// stacked row-wise. The flat storage order is the checkpoint payload order.
using Tensor = Matrix;

inline std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << "[" << rows << " x " << cols << "]";
  return os.str();
}

template <class Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// ---------------------------------------------------------------------------
// Row-wise kernels. Each row of the input is an independent vector.
// ---------------------------------------------------------------------------

template <class Derived>
MatrixT<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  MatrixT<S> y = x;
  for (Index r = 0; r < y.rows(); ++r) {
    const S m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

template <class Derived>
MatrixT<typename Derived::Scalar> log_softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  MatrixT<S> y = x;
  for (Index r = 0; r < y.rows(); ++r) {
    const S m = y.row(r).maxCoeff();
    const S lse = m + std::log((y.row(r).array() - m).exp().sum());
    y.row(r).array() -= lse;
  }
  return y;
}

/// Standardizes each row: (x - mean) / sqrt(var + eps), population variance.
/// `inv_std` receives the per-row 1/sqrt(var + eps).
template <class Derived>
MatrixT<typename Derived::Scalar> standardize_rows(const Eigen::MatrixBase<Derived>& x,
                                                   typename Derived::Scalar eps,
                                                   ColVectorT<typename Derived::Scalar>* inv_std = nullptr) {
  using S = typename Derived::Scalar;
  const Index d = x.cols();
  MatrixT<S> y(x.rows(), d);
  if (inv_std) inv_std->resize(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const S mean = x.row(r).sum() / S(d);
    const auto centered = (x.row(r).array() - mean).eval();
    const S var = centered.square().sum() / S(d);
    const S is = S(1) / std::sqrt(var + eps);
    y.row(r) = centered * is;
    if (inv_std) (*inv_std)(r) = is;
  }
  return y;
}

template <class Derived>
Index argmax_row(const Eigen::MatrixBase<Derived>& x, Index row) {
  Index best = 0;
  x.row(row).maxCoeff(&best);
  return best;
}

}  // namespace lrta::nn
