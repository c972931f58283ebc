#include "rkm/activation.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rkm {

namespace {

constexpr double kPi = std::numbers::pi;

// 200 decimal digits: enough headroom for the cancellation in the erf-type
// series up to |x| ~ 11.
using Big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;

TaylorCoefficient make_coefficient(int sign, double log_mag, double value) {
  TaylorCoefficient c;
  c.sign = sign;
  c.magnitude = LogValue::from_log(log_mag);
  c.value = sign * value;
  return c;
}

TaylorCoefficient from_double(double v) {
  TaylorCoefficient c;
  if (v == 0.0) return c;
  c.sign = v > 0 ? 1 : -1;
  c.magnitude = LogValue::from_value(std::abs(v));
  c.value = v;
  return c;
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::polynomial: return "polynomial";
    case ActivationKind::sigmoid_like: return "sigmoid_like";
    case ActivationKind::relu_like: return "relu_like";
  }
  return "?";
}

TaylorCoefficient CoefficientStream::next() {
  const std::size_t j = j_++;
  const Activation& a = *act_;
  using S = Activation::Series;

  // pi^m / m! advanced one step at a time; only the erf family uses it.
  auto advance_to = [this](std::size_t m) {
    while (m_ < m) {
      ++m_;
      log_pm_ += std::log(kPi) - std::log(static_cast<double>(m_));
      pm_ *= kPi / static_cast<double>(m_);
    }
  };

  switch (a.series_) {
    case S::finite:
      return j < a.finite_.size() ? from_double(a.finite_[j]) : TaylorCoefficient{};

    case S::shifted_erf: {
      // 1/2 + sum_m (-1)^m pi^m x^{2m+1} / (m! (2m+1))
      if (j == 0) return from_double(0.5);
      if (j % 2 == 0) return {};
      const std::size_t m = (j - 1) / 2;
      advance_to(m);
      const double odd = static_cast<double>(2 * m + 1);
      return make_coefficient(m % 2 == 0 ? 1 : -1, log_pm_ - std::log(odd), pm_ / odd);
    }

    case S::smoothed_hinge: {
      // 1/(2 pi) + x/2 + sum_m (-1)^m pi^m x^{2m+2} / (m! (2m+1)(2m+2))
      if (j == 0) return from_double(1.0 / (2.0 * kPi));
      if (j == 1) return from_double(0.5);
      if (j % 2 == 1) return {};
      const std::size_t m = (j - 2) / 2;
      advance_to(m);
      const double a1 = static_cast<double>(2 * m + 1);
      const double a2 = static_cast<double>(2 * m + 2);
      return make_coefficient(m % 2 == 0 ? 1 : -1, log_pm_ - std::log(a1) - std::log(a2),
                              pm_ / a1 / a2);
    }
  }
  return {};
}

Activation Activation::polynomial(std::string name, std::vector<double> coeffs,
                                  ActivationKind kind) {
  while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
  Activation a(std::move(name), kind, Series::finite);
  a.max_degree_ = coeffs.empty() ? 0 : coeffs.size() - 1;
  a.finite_ = std::move(coeffs);
  return a;
}

TaylorCoefficient Activation::term(std::size_t j) const {
  CoefficientStream s = coefficients();
  TaylorCoefficient c;
  for (std::size_t i = 0; i <= j; ++i) c = s.next();
  return c;
}

double Activation::operator()(double x) const {
  switch (series_) {
    case Series::finite: {
      double acc = 0.0;
      for (auto it = finite_.rbegin(); it != finite_.rend(); ++it) acc = acc * x + *it;
      return acc;
    }
    case Series::shifted_erf:
      return 0.5 * std::erfc(-std::sqrt(kPi) * x);
    case Series::smoothed_hinge:
      return x * 0.5 * std::erfc(-std::sqrt(kPi) * x) + std::exp(-kPi * x * x) / (2.0 * kPi);
  }
  return 0.0;
}

Activation::TaylorEvaluation Activation::taylor(double x) const {
  const Big X = x;
  Big sum = 0;
  Big abs_sum = 0;
  std::size_t terms = 0;
  constexpr std::size_t kMaxTerms = 200'000;

  if (series_ == Series::finite) {
    Big power = 1;
    for (double c : finite_) {
      const Big t = Big(c) * power;
      sum += t;
      abs_sum += boost::multiprecision::abs(t);
      power *= X;
      ++terms;
    }
  } else {
    const Big pi = boost::math::constants::pi<Big>();
    const Big q = -pi * X * X;
    const Big tiny = std::numeric_limits<Big>::epsilon();
    const double peak = kPi * x * x;
    Big p = X;  // (-pi x^2)^m / m! * x
    if (series_ == Series::shifted_erf) {
      sum = Big(1) / 2;
    } else {
      sum = X / 2 + 1 / (2 * pi);
      abs_sum = boost::multiprecision::abs(X / 2);
    }
    abs_sum += boost::multiprecision::abs(sum);
    for (std::size_t m = 0;; ++m) {
      if (m >= kMaxTerms) {
        throw RangeError("taylor series for " + name_ + " did not settle at x = " +
                         std::to_string(x));
      }
      Big t = p / (2 * m + 1);
      if (series_ == Series::smoothed_hinge) t = t * X / (2 * m + 2);
      sum += t;
      const Big at = boost::multiprecision::abs(t);
      abs_sum += at;
      ++terms;
      const Big asum = boost::multiprecision::abs(sum);
      const Big scale = asum > 1 ? asum : Big(1);
      if (static_cast<double>(m) > peak && at <= tiny * scale) break;
      p = p * q / (m + 1);
    }
  }

  TaylorEvaluation out;
  out.value = static_cast<double>(sum);
  out.terms = terms;
  const Big err = abs_sum * std::numeric_limits<Big>::epsilon() * Big(4 * (terms + 1));
  out.error_bound = static_cast<double>(err);
  const double scale = std::max(1.0, std::abs(out.value));
  if (!std::isfinite(out.error_bound) || out.error_bound > 1e-13 * scale) {
    std::ostringstream msg;
    msg << "taylor series for " << name_ << " is numerically unreliable at x = " << x
        << " (cancellation error bound " << out.error_bound << ")";
    throw RangeError(msg.str());
  }
  return out;
}

Activation builtin_activation(std::string_view name) {
  if (name == "quadratic") return Activation::polynomial("quadratic", {0.0, 0.0, 1.0});
  if (name == "shifted_erf") {
    return Activation("shifted_erf", ActivationKind::sigmoid_like, Activation::Series::shifted_erf);
  }
  if (name == "smoothed_hinge") {
    return Activation("smoothed_hinge", ActivationKind::relu_like,
                      Activation::Series::smoothed_hinge);
  }
  std::string msg = "unknown activation '" + std::string(name) + "'; supported:";
  for (const auto& s : supported_activations()) msg += " " + s;
  throw UsageError(msg);
}

std::vector<std::string> supported_activations() {
  return {"quadratic", "shifted_erf", "smoothed_hinge"};
}

// ---------------------------------------------------------------------------

HValue compute_H(const Activation& act, double L, LogValue lambda, const SeriesOptions& opts) {
  if (!(L > 0.0)) throw InputError("compute_H: L must be positive");
  if (!(opts.tol > 0.0)) throw InputError("compute_H: tol must be positive");

  const double ln2 = std::log(2.0);
  const double log_lambda = lambda.log();
  const std::optional<std::size_t> degree = act.max_degree();
  CoefficientStream stream = act.coefficients();

  LogValue series;
  std::size_t quiet = 0;
  std::size_t j = 0;
  for (;; ++j) {
    if (degree && j > *degree) break;
    if (j >= opts.max_terms) {
      throw SeriesDivergence("H series for " + act.name() + " did not converge within " +
                                 std::to_string(opts.max_terms) + " terms",
                             LogValue::from_value(L) * series.sqrt(), j);
    }
    const TaylorCoefficient c = stream.next();
    LogValue term;
    if (c.sign != 0 && (j == 0 || !lambda.is_zero())) {
      const double lambda_part = j == 0 ? 0.0 : 2.0 * static_cast<double>(j) * log_lambda;
      term = LogValue::from_log(static_cast<double>(j + 1) * ln2 + 2.0 * c.magnitude.log() +
                                lambda_part);
    }
    series += term;
    if (degree) continue;
    const bool negligible = term.is_zero() || (term / series).value() < opts.tol;
    quiet = negligible ? quiet + 1 : 0;
    if (quiet >= opts.quiet_run) {
      ++j;
      break;
    }
  }
  return {LogValue::from_value(L) * series.sqrt(), j};
}

HValue compute_H(const Activation& act, double L, double lambda, const SeriesOptions& opts) {
  if (!(lambda >= 0.0)) throw InputError("compute_H: lambda must be nonnegative");
  return compute_H(act, L, LogValue::from_value(lambda), opts);
}

CapacityReport compute_F(const Activation& act, int k, double L, const SeriesOptions& opts) {
  if (k < 1) throw InputError("compute_F: k must be at least 1");
  if (!(L > 0.0)) throw InputError("compute_F: L must be positive");
  CapacityReport rep;
  rep.activation = act.name();
  rep.k = k;
  rep.L = L;
  LogValue lambda = LogValue::from_value(L);
  for (int p = 1; p <= k; ++p) {
    HValue h;
    try {
      h = compute_H(act, L, lambda, opts);
    } catch (const SeriesDivergence& e) {
      rep.converged = false;
      rep.terms_used += e.terms_used;
      throw CapacityDivergence("F(k, L) diverged at level " + std::to_string(p) + ": " + e.what(),
                               p, rep);
    }
    rep.terms_used += h.terms_used;
    if (h.value < lambda) rep.non_decreasing = false;
    rep.levels.push_back(h.value);
    lambda = h.value;
  }
  rep.converged = true;
  return rep;
}

// ---------------------------------------------------------------------------

ShapeDiagnostic check_shape(const Activation& act, std::span<const double> grid,
                            std::optional<ShapeCheck> check) {
  if (grid.size() < 2) throw InputError("check_shape: grid needs at least 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InputError("check_shape: grid must be strictly ascending");
  }
  ShapeDiagnostic diag;
  diag.check = check.value_or(act.kind() == ActivationKind::relu_like
                                  ? ShapeCheck::monotone_difference
                                  : ShapeCheck::monotone);
  std::vector<double> err;
  for (double x : grid) {
    auto v = act.taylor(x);
    if (diag.check == ShapeCheck::monotone_difference) {
      const auto w = act.taylor(x - 1.0);
      v.value -= w.value;
      v.error_bound += w.error_bound;
    }
    diag.values.push_back(v.value);
    err.push_back(v.error_bound);
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (diag.values[i + 1] < diag.values[i] - (err[i] + err[i + 1])) {
      diag.violations.push_back({i, grid[i], grid[i + 1], diag.values[i], diag.values[i + 1]});
    }
  }
  return diag;
}

}  // namespace rkm
