#pragma once

#include <span>
#include <vector>

#include "rkm/kernel.hpp"

namespace rkm {

struct LogisticConfig {
  int max_iters = 500;
  double learning_rate = 0.5;
  /// L2 penalty on the weights (not the bias).
  double l2 = 1e-4;
  /// Stop when the gradient's Frobenius norm falls below this.
  double tolerance = 1e-6;
};

/// Multiclass softmax regression with a bias, trained by full-batch gradient
/// descent from zero. Deterministic.
struct LogisticModel {
  Eigen::MatrixXd W;  // d x C
  Eigen::VectorXd b;  // C
  int iterations = 0;
  double train_loss = 0.0;

  Eigen::MatrixXd scores(const RowMatrix& X) const;
  std::vector<int> classify(const RowMatrix& X) const;
};

/// Labels in 0..C-1.
LogisticModel train_logistic(const RowMatrix& X, std::span<const int> labels, int num_classes,
                             const LogisticConfig& cfg = {});

double error_rate(std::span<const int> predicted, std::span<const int> truth);

}  // namespace rkm
