#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rkm/kernel.hpp"

namespace rkm {

enum class LossKind { hinge, logistic, squared };

std::string_view to_string(LossKind kind);
/// Throws UsageError for unknown names.
LossKind parse_loss(std::string_view name);

/// Convex losses l(f, y) with labels y in {-1, +1}.
///
/// The squared loss is evaluated on predictions clipped to [-B, B]; its
/// constants below are the ones for that clipped range.
class Loss {
 public:
  explicit Loss(LossKind kind) : kind_(kind) {}

  LossKind kind() const noexcept { return kind_; }
  double value(double f, double y) const;
  /// An element of the subdifferential in f. Hinge at the kink returns 0.
  double subgradient(double f, double y) const;

  /// Lipschitz constant rho of f -> l(f, y) on [-B, B].
  double lipschitz(double B) const;
  /// Bound M on l(f, y) over f in [-B, B].
  double range_bound(double B) const;

 private:
  LossKind kind_;
};

struct TrainConfig {
  int depth = 1;
  double B = 1.0;
  LossKind loss = LossKind::hinge;
  int max_iters = 5000;
  /// eta_t = eta0 / sqrt(t); defaults to B / rho.
  std::optional<double> eta0;
  /// Stop when the best objective improves by less than this (relative)
  /// over `window` iterations.
  double tolerance = 1e-6;
  int window = 100;
  /// Keep every objective value (for metrics output).
  bool record_history = false;
};

void check_config(const TrainConfig& cfg);

/// Scales alpha onto the RKHS ball {alpha^T G alpha <= B^2}. Interior points
/// are returned unchanged. Throws NumericError if the quadratic form is below
/// -1e-8 (G not PSD).
Eigen::VectorXd project(const Eigen::VectorXd& alpha, const GramMatrix& G, double B);

/// (1/n) sum_j l((G alpha)_j, y_j).
double objective(const GramMatrix& G, std::span<const int> y, const Eigen::VectorXd& alpha,
                 const Loss& loss);

struct SolveResult {
  Eigen::VectorXd alpha;
  double objective = 0.0;
  int iterations = 0;
  int best_iteration = 0;
  std::vector<double> history;       // objective per iteration (if requested)
  std::vector<double> best_history;  // incumbent objective per iteration (if requested)
};

/// Projected subgradient descent in the RKHS on a precomputed Gram matrix.
/// Labels must be +-1. Returns the best iterate seen, projected.
SolveResult solve(const GramMatrix& G, std::span<const int> y, const TrainConfig& cfg);

/// Output of training: f(x) = sum_i alpha_i K^(k)(x_i, x).
struct KernelPredictor {
  std::shared_ptr<const RowMatrix> support;
  Eigen::VectorXd alpha;
  int depth = 1;
  double B = 0.0;
  LossKind loss = LossKind::hinge;
  double train_objective = 0.0;
  int iterations = 0;
  std::vector<double> history;
  std::vector<double> best_history;

  double predict(std::span<const double> x) const;
  /// Scores for every query row.
  Eigen::VectorXd predict(const RowMatrix& queries) const;
};

/// Binary training; rows of X must lie in the unit ball, labels in {-1, +1}.
KernelPredictor train(const RowMatrix& X, std::span<const int> y, const TrainConfig& cfg);
KernelPredictor train(std::shared_ptr<const RowMatrix> X, const GramMatrix& G,
                      std::span<const int> y, const TrainConfig& cfg);

/// One-vs-all bundle; argmax of class scores with ties to the smallest index.
struct OneVsAllPredictor {
  std::vector<int> classes;
  std::vector<KernelPredictor> per_class;

  std::shared_ptr<const RowMatrix> support() const;
  int depth() const;
  /// scores(i, c) for query i and class index c.
  Eigen::MatrixXd scores(const RowMatrix& queries) const;
  std::vector<int> classify(const RowMatrix& queries) const;
};

/// Index of the largest score; ties to the smallest index.
int argmax_first(std::span<const double> scores);

/// Labels in 0..C-1 with C = num_classes >= 2; every class must occur.
OneVsAllPredictor train_multiclass(const RowMatrix& X, std::span<const int> labels,
                                   int num_classes, const TrainConfig& cfg);

/// Real-valued sample size: ((2 rho B sqrt(2) + M sqrt(log(1/delta) / 2)) / eps)^2.
double sample_size_bound(double B, double eps, double delta, double rho, double M);
/// Smallest n with 2 rho B sqrt(2/n) + M sqrt(log(1/delta) / (2n)) <= eps.
std::uint64_t sample_size(double B, double eps, double delta, double rho, double M);
std::uint64_t sample_size(double B, double eps, double delta, const Loss& loss);

}  // namespace rkm
