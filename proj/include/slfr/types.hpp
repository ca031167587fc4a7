#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace slfr {

// Row-major storage throughout so checkpoints serialize parameter tensors
// in row-major order without copies.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = DenseMatrix<double>;
using Vectord = DenseVector<double>;

enum class FeedbackKind { Explicit, Implicit };

inline std::string to_string(FeedbackKind k) {
  return k == FeedbackKind::Explicit ? "explicit" : "implicit";
}

inline FeedbackKind feedback_kind_from_string(const std::string& s) {
  if (s == "explicit") return FeedbackKind::Explicit;
  if (s == "implicit") return FeedbackKind::Implicit;
  throw std::invalid_argument("unknown feedback kind: " + s);
}

// Bad user input (files, flags, configs). CLI maps this to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite losses, diverged training. CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename S>
inline S sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

// log(1 + exp(x)) without overflow.
template <typename S>
inline S softplus(S x) {
  if (x > S(0)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

template <typename S>
inline S log_sigmoid(S x) {
  return -softplus(-x);
}

template <typename Derived>
inline typename Derived::Scalar logsumexp(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const S m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace slfr
