#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace rkm {

/// Samples are stored one per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// Inputs may exceed unit norm by this much before they are rejected.
inline constexpr double kNormTolerance = 1e-9;

/// The depth-k recursive kernel: K0(x, y) = <x, y>, Kp = 1 / (2 - K(p-1)).
class KernelStack {
 public:
  explicit KernelStack(int depth);

  int depth() const noexcept { return depth_; }

  /// Applies the recursion to an inner product, clamped to [-1, 1] first.
  double from_inner(double inner) const noexcept;

  /// Throws InputError when either argument has norm above 1 + kNormTolerance.
  double operator()(std::span<const double> x, std::span<const double> y) const;

 private:
  int depth_;
};

double kernel_eval(const KernelStack& stack, std::span<const double> x, std::span<const double> y);

/// Symmetric matrix of kernel values over a dataset.
class GramMatrix {
 public:
  GramMatrix() = default;
  GramMatrix(Eigen::MatrixXd entries, int depth);

  Eigen::Index n() const noexcept { return entries_.rows(); }
  int depth() const noexcept { return depth_; }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  /// alpha^T G alpha.
  double quadratic_form(const Eigen::VectorXd& alpha) const;

 private:
  Eigen::MatrixXd entries_;
  int depth_ = 0;
};

/// Throws InputError (with the row index) when a row violates the norm bound.
void check_rows_in_unit_ball(const RowMatrix& X, const char* what);

/// Entries are computed once per unordered pair and mirrored.
GramMatrix gram(const KernelStack& stack, const RowMatrix& X);

/// K(x_i, q_j) for support rows x_i and query rows q_j; result is queries x support.
Eigen::MatrixXd cross_gram(const KernelStack& stack, const RowMatrix& support,
                           const RowMatrix& queries);

/// Explicit finite truncation psi_J of the feature map behind K1. Test oracle
/// only: the coordinate count grows like d^J.
///
/// Coordinates are ordered by degree j = 0..J and, within a degree,
/// lexicographically by the index tuple (k_1, ..., k_j).
class TruncatedFeatureMap {
 public:
  static constexpr std::size_t kDefaultCap = 1'000'000;

  /// Throws InputError with a capacity message when the count exceeds `cap`.
  TruncatedFeatureMap(std::size_t base_dim, std::size_t max_degree,
                      std::size_t cap = kDefaultCap);

  std::size_t base_dim() const noexcept { return d_; }
  std::size_t max_degree() const noexcept { return J_; }
  std::size_t size() const noexcept { return size_; }

  /// Position of tuple (k_1, ..., k_j) (0-based indices) in the output.
  std::size_t index_of(std::span<const std::size_t> tuple) const;

  std::vector<double> operator()(std::span<const double> x) const;

  /// Number of coordinates for (d, J), saturating at SIZE_MAX.
  static std::size_t coordinate_count(std::size_t d, std::size_t J);

 private:
  std::size_t d_;
  std::size_t J_;
  std::size_t size_;
};

}  // namespace rkm
