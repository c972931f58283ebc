#include "rkm/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rkm/error.hpp"

namespace rkm {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

void require_unit_ball(std::span<const double> v, const char* name) {
  const double nv = norm2(v);
  if (!(nv <= 1.0 + kNormTolerance)) {
    std::ostringstream msg;
    msg << std::setprecision(12) << "kernel input " << name << " has l2-norm " << nv << " > 1";
    throw InputError(msg.str());
  }
}

}  // namespace

KernelStack::KernelStack(int depth) : depth_(depth) {
  if (depth < 0) throw InputError("kernel depth must be nonnegative");
}

double KernelStack::from_inner(double inner) const noexcept {
  double t = std::clamp(inner, -1.0, 1.0);
  for (int p = 0; p < depth_; ++p) t = 1.0 / (2.0 - t);
  return t;
}

double KernelStack::operator()(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size()) throw StructuralError("kernel inputs differ in dimension");
  require_unit_ball(x, "x");
  require_unit_ball(y, "y");
  double inner = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) inner += x[i] * y[i];
  return from_inner(inner);
}

double kernel_eval(const KernelStack& stack, std::span<const double> x, std::span<const double> y) {
  return stack(x, y);
}

GramMatrix::GramMatrix(Eigen::MatrixXd entries, int depth)
    : entries_(std::move(entries)), depth_(depth) {
  if (entries_.rows() != entries_.cols()) throw StructuralError("Gram matrix must be square");
}

double GramMatrix::quadratic_form(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != n()) throw StructuralError("coefficient vector does not match Gram size");
  return alpha.dot(entries_ * alpha);
}

void check_rows_in_unit_ball(const RowMatrix& X, const char* what) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double nv = X.row(i).norm();
    if (!(nv <= 1.0 + kNormTolerance)) {
      std::ostringstream msg;
      msg << std::setprecision(12) << what << " row " << i << " has l2-norm " << nv << " > 1";
      throw InputError(msg.str());
    }
  }
}

GramMatrix gram(const KernelStack& stack, const RowMatrix& X) {
  check_rows_in_unit_ball(X, "gram input");
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  G.selfadjointView<Eigen::Lower>().rankUpdate(X);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = stack.from_inner(G(i, j));
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return GramMatrix(std::move(G), stack.depth());
}

Eigen::MatrixXd cross_gram(const KernelStack& stack, const RowMatrix& support,
                           const RowMatrix& queries) {
  if (support.cols() != queries.cols()) {
    throw StructuralError("query dimension " + std::to_string(queries.cols()) +
                          " does not match support dimension " + std::to_string(support.cols()));
  }
  check_rows_in_unit_ball(queries, "query");
  Eigen::MatrixXd K = queries * support.transpose();
  K = K.unaryExpr([&](double t) { return stack.from_inner(t); });
  return K;
}

// ---------------------------------------------------------------------------

std::size_t TruncatedFeatureMap::coordinate_count(std::size_t d, std::size_t J) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  std::size_t block = 1;
  for (std::size_t j = 0; j <= J; ++j) {
    if (total > kMax - block) return kMax;
    total += block;
    if (j < J) {
      if (d != 0 && block > kMax / d) return kMax;
      block *= d;
    }
  }
  return total;
}

TruncatedFeatureMap::TruncatedFeatureMap(std::size_t base_dim, std::size_t max_degree,
                                         std::size_t cap)
    : d_(base_dim), J_(max_degree), size_(coordinate_count(base_dim, max_degree)) {
  if (size_ > cap) {
    throw InputError("feature map with d = " + std::to_string(d_) + ", J = " + std::to_string(J_) +
                     " needs more than the coordinate cap of " + std::to_string(cap));
  }
}

std::size_t TruncatedFeatureMap::index_of(std::span<const std::size_t> tuple) const {
  if (tuple.size() > J_) throw InputError("tuple longer than the truncation degree");
  std::size_t offset = 0;
  std::size_t block = 1;
  for (std::size_t j = 0; j < tuple.size(); ++j) {
    offset += block;
    block *= d_;
  }
  std::size_t pos = 0;
  for (std::size_t k : tuple) {
    if (k >= d_) throw InputError("tuple index out of range");
    pos = pos * d_ + k;
  }
  return offset + pos;
}

std::vector<double> TruncatedFeatureMap::operator()(std::span<const double> x) const {
  if (x.size() != d_) throw StructuralError("feature map input has the wrong dimension");
  require_unit_ball(x, "x");
  const double scale = std::sqrt(0.5);
  std::vector<double> out;
  out.reserve(size_);
  out.push_back(scale);
  // Degree-j block = degree-(j-1) block (outer) x / sqrt(2), lexicographic.
  std::size_t prev_begin = 0;
  std::size_t prev_len = 1;
  for (std::size_t j = 1; j <= J_; ++j) {
    const std::size_t begin = out.size();
    for (std::size_t i = 0; i < prev_len; ++i) {
      const double head = out[prev_begin + i] * scale;
      for (std::size_t k = 0; k < d_; ++k) out.push_back(head * x[k]);
    }
    prev_begin = begin;
    prev_len = out.size() - begin;
  }
  return out;
}

}  // namespace rkm
