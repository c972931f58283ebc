#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rkm/error.hpp"
#include "rkm/log_value.hpp"

namespace rkm {

enum class ActivationKind { polynomial, sigmoid_like, relu_like };

std::string_view to_string(ActivationKind kind);

/// One Taylor coefficient beta_j, carried both as a signed log-magnitude
/// (never underflows) and as a double (underflows to 0 for large j).
struct TaylorCoefficient {
  int sign = 0;  // -1, 0 or +1
  LogValue magnitude;
  double value = 0.0;
};

/// Thrown when a truncated Taylor sum cannot be evaluated to double accuracy.
struct RangeError : NumericError {
  explicit RangeError(const std::string& what) : NumericError(what) {}
};

class Activation;

/// Sequential generator of beta_0, beta_1, ... built from ratio recurrences.
class CoefficientStream {
 public:
  TaylorCoefficient next();
  std::size_t index() const noexcept { return j_; }

 private:
  friend class Activation;
  explicit CoefficientStream(const Activation& act) : act_(&act) {}

  const Activation* act_;
  std::size_t j_ = 0;
  // Running pi^m / m! for the erf family, in log and in plain form.
  double log_pm_ = 0.0;
  double pm_ = 1.0;
  std::size_t m_ = 0;
};

/// An activation function described by its Taylor expansion sigma(x) = sum beta_j x^j.
class Activation {
 public:
  /// Finite polynomial with the given coefficients (beta_0 first).
  static Activation polynomial(std::string name, std::vector<double> coeffs,
                               ActivationKind kind = ActivationKind::polynomial);

  const std::string& name() const noexcept { return name_; }
  ActivationKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> max_degree() const noexcept { return max_degree_; }

  double coeff(std::size_t j) const { return term(j).value; }
  TaylorCoefficient term(std::size_t j) const;
  CoefficientStream coefficients() const { return CoefficientStream(*this); }

  /// Closed-form evaluation (Horner for polynomials).
  double operator()(double x) const;

  struct TaylorEvaluation {
    double value = 0.0;
    double error_bound = 0.0;  // absolute: rounding plus truncation
    std::size_t terms = 0;
  };

  /// Truncated Taylor sum evaluated in extended precision. Throws RangeError
  /// when cancellation would leave less than ~13 correct digits.
  TaylorEvaluation taylor(double x) const;
  double taylor_value(double x) const { return taylor(x).value; }

 private:
  enum class Series { finite, shifted_erf, smoothed_hinge };
  friend class CoefficientStream;
  friend Activation builtin_activation(std::string_view name);

  Activation(std::string name, ActivationKind kind, Series series)
      : name_(std::move(name)), kind_(kind), series_(series) {}

  std::string name_;
  ActivationKind kind_;
  Series series_;
  std::optional<std::size_t> max_degree_;
  std::vector<double> finite_;
};

/// quadratic, shifted_erf or smoothed_hinge. Unknown names throw UsageError.
Activation builtin_activation(std::string_view name);
std::vector<std::string> supported_activations();

// ---------------------------------------------------------------------------
// Capacity: H(lambda) = L * sqrt(sum_j 2^{j+1} beta_j^2 lambda^{2j}) and its
// k-fold composition F(k, L) = H^(k)(L).

struct SeriesOptions {
  double tol = 1e-12;
  std::size_t max_terms = 10'000;
  std::size_t quiet_run = 5;  // consecutive negligible terms before stopping
};

struct HValue {
  LogValue value;
  std::size_t terms_used = 0;
};

/// Thrown when the H series has not settled within max_terms.
struct SeriesDivergence : NumericError {
  SeriesDivergence(const std::string& what, LogValue partial, std::size_t terms)
      : NumericError(what), partial_sum(partial), terms_used(terms) {}
  LogValue partial_sum;  // of L * sqrt(partial series)
  std::size_t terms_used;
};

HValue compute_H(const Activation& act, double L, LogValue lambda, const SeriesOptions& opts = {});
HValue compute_H(const Activation& act, double L, double lambda, const SeriesOptions& opts = {});

struct CapacityReport {
  std::string activation;
  int k = 0;
  double L = 0.0;
  std::vector<LogValue> levels;  // H^(1)(L) ... H^(k)(L)
  bool converged = false;
  std::size_t terms_used = 0;  // summed over levels
  // Whether H(lambda) >= lambda held at every evaluated level.
  bool non_decreasing = true;

  LogValue F() const { return levels.empty() ? LogValue{} : levels.back(); }
};

struct CapacityDivergence : NumericError {
  CapacityDivergence(const std::string& what, int lvl, CapacityReport rep)
      : NumericError(what), level(lvl), partial(std::move(rep)) {}
  int level;  // 1-based level that failed
  CapacityReport partial;
};

CapacityReport compute_F(const Activation& act, int k, double L, const SeriesOptions& opts = {});

// ---------------------------------------------------------------------------
// Shape diagnostics on a finite grid (advisory; not a proof).

enum class ShapeCheck {
  monotone,             // sigma non-decreasing
  monotone_difference,  // sigma(x) - sigma(x - 1) non-decreasing
};

struct ShapeViolation {
  std::size_t index = 0;  // descent between grid[index] and grid[index + 1]
  double x0 = 0.0, x1 = 0.0;
  double v0 = 0.0, v1 = 0.0;
};

struct ShapeDiagnostic {
  ShapeCheck check = ShapeCheck::monotone;
  std::vector<double> values;
  std::vector<ShapeViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Evaluates the truncated Taylor sum on `grid` (ascending, >= 2 points).
/// The default check follows the activation kind: relu_like checks the
/// difference, everything else checks monotonicity.
ShapeDiagnostic check_shape(const Activation& act, std::span<const double> grid,
                            std::optional<ShapeCheck> check = std::nullopt);

}  // namespace rkm
