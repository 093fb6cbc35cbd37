#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace tweetbench {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename Derived>
typename Derived::Scalar logsumexp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  p /= p.sum();
  return p;
}

template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  return (logits.array() - logsumexp(logits)).matrix();
}

/// Column-wise softmax of a (classes x batch) logit matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_columns(const Eigen::MatrixBase<Derived>& logits) {
  Matrix<typename Derived::Scalar> p(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) p.col(j) = softmax(logits.col(j));
  return p;
}

/// Index of the maximum; the lowest index wins ties.
template <typename Derived>
Index argmax_first(const Eigen::MatrixBase<Derived>& x) {
  Index best = 0;
  for (Index i = 1; i < x.size(); ++i)
    if (x(i) > x(best)) best = i;
  return best;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace tweetbench
