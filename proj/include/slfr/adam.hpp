#pragma once

#include <cmath>
#include <vector>

#include "slfr/types.hpp"

namespace slfr {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over one dense parameter tensor (matrix or vector). Bias correction
// uses a caller-supplied global step so all parameter groups stay in phase.
template <typename Tensor>
class Adam {
 public:
  Adam() = default;
  explicit Adam(const Tensor& like, AdamConfig cfg = {})
      : cfg_(cfg), m_(Tensor::Zero(like.rows(), like.cols())),
        v_(Tensor::Zero(like.rows(), like.cols())) {}

  void step(Tensor& param, const Tensor& grad, long long t) {
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_.array() = cfg_.beta2 * v_.array() + (1.0 - cfg_.beta2) * grad.array().square();
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    param.array() -= cfg_.lr * (m_.array() / c1) /
                     ((v_.array() / c2).sqrt() + cfg_.eps);
  }

 private:
  AdamConfig cfg_;
  Tensor m_, v_;
};

using AdamDense = Adam<Matrixd>;
using AdamVector = Adam<Vectord>;

// Adam over an embedding table where each step touches only a few rows.
// Moments of untouched rows are left alone, the usual sparse-Adam
// convention for embedding tables.
class AdamSparseRows {
 public:
  AdamSparseRows() = default;
  AdamSparseRows(Eigen::Index rows, Eigen::Index cols, AdamConfig cfg = {})
      : cfg_(cfg), m_(Matrixd::Zero(rows, cols)), v_(Matrixd::Zero(rows, cols)) {}

  // `touched` lists the distinct row indices with nonzero gradient.
  void step(Matrixd& param, const Matrixd& grad,
            const std::vector<int>& touched, long long t) {
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    for (int r : touched) {
      m_.row(r) = cfg_.beta1 * m_.row(r) + (1.0 - cfg_.beta1) * grad.row(r);
      v_.row(r).array() =
          cfg_.beta2 * v_.row(r).array() + (1.0 - cfg_.beta2) * grad.row(r).array().square();
      param.row(r).array() -= cfg_.lr * (m_.row(r).array() / c1) /
                              ((v_.row(r).array() / c2).sqrt() + cfg_.eps);
    }
  }

 private:
  AdamConfig cfg_;
  Matrixd m_, v_;
};

}  // namespace slfr
