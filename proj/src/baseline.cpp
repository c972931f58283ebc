#include "rkm/baseline.hpp"

#include <cmath>

#include "rkm/error.hpp"
#include "rkm/solver.hpp"

namespace rkm {

namespace {

// Row-wise softmax in place; returns the mean cross-entropy for the labels.
double softmax_rows(Eigen::MatrixXd& S, std::span<const int> labels) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    const double m = S.row(i).maxCoeff();
    S.row(i).array() = (S.row(i).array() - m).exp();
    const double z = S.row(i).sum();
    S.row(i) /= z;
    loss -= std::log(std::max(S(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  }
  return S.rows() ? loss / static_cast<double>(S.rows()) : 0.0;
}

}  // namespace

Eigen::MatrixXd LogisticModel::scores(const RowMatrix& X) const {
  if (X.cols() != W.rows()) throw StructuralError("feature dimension does not match the model");
  Eigen::MatrixXd S = X * W;
  S.rowwise() += b.transpose();
  return S;
}

std::vector<int> LogisticModel::classify(const RowMatrix& X) const {
  const Eigen::MatrixXd S = scores(X);
  std::vector<int> out(static_cast<std::size_t>(S.rows()));
  std::vector<double> row(static_cast<std::size_t>(S.cols()));
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    for (Eigen::Index c = 0; c < S.cols(); ++c) row[static_cast<std::size_t>(c)] = S(i, c);
    out[static_cast<std::size_t>(i)] = argmax_first(row);
  }
  return out;
}

LogisticModel train_logistic(const RowMatrix& X, std::span<const int> labels, int num_classes,
                             const LogisticConfig& cfg) {
  if (num_classes < 2) throw InputError("need at least two classes");
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw StructuralError("label count mismatch");
  if (X.rows() == 0) throw InputError("empty training set");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw InputError("label " + std::to_string(y) + " out of range");
  }
  const double n = static_cast<double>(X.rows());
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(X.rows(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) Y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;

  LogisticModel m;
  m.W = Eigen::MatrixXd::Zero(X.cols(), num_classes);
  m.b = Eigen::VectorXd::Zero(num_classes);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    Eigen::MatrixXd P = m.scores(X);
    m.train_loss = softmax_rows(P, labels);
    P -= Y;
    const Eigen::MatrixXd gW = X.transpose() * P / n + cfg.l2 * m.W;
    const Eigen::VectorXd gb = P.colwise().sum().transpose() / n;
    m.iterations = t;
    if (std::sqrt(gW.squaredNorm() + gb.squaredNorm()) < cfg.tolerance) break;
    m.W -= cfg.learning_rate * gW;
    m.b -= cfg.learning_rate * gb;
  }
  return m;
}

double error_rate(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw StructuralError("prediction count mismatch");
  if (truth.empty()) throw InputError("empty evaluation set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace rkm
