#include "rkm/log_value.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "rkm/error.hpp"

namespace rkm {

LogValue LogValue::from_log(double log_magnitude) {
  if (std::isnan(log_magnitude) || log_magnitude == std::numeric_limits<double>::infinity()) {
    throw NumericError("LogValue: non-finite log magnitude");
  }
  LogValue v;
  if (log_magnitude == -std::numeric_limits<double>::infinity()) return v;
  v.log_ = log_magnitude;
  v.is_zero_ = false;
  return v;
}

LogValue LogValue::from_value(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InputError("LogValue: value must be finite and nonnegative");
  }
  if (v == 0.0) return {};
  return from_log(std::log(v));
}

double LogValue::log() const noexcept {
  return is_zero_ ? -std::numeric_limits<double>::infinity() : log_;
}

double LogValue::log10() const noexcept {
  return is_zero_ ? -std::numeric_limits<double>::infinity() : log_ / std::log(10.0);
}

double LogValue::value() const noexcept { return is_zero_ ? 0.0 : std::exp(log_); }

LogValue LogValue::sqrt() const { return pow(0.5); }

LogValue LogValue::pow(double exponent) const {
  if (is_zero_) {
    if (exponent == 0.0) return from_log(0.0);
    if (exponent < 0.0) throw NumericError("LogValue: zero raised to a negative power");
    return {};
  }
  return from_log(log_ * exponent);
}

LogValue operator+(LogValue a, LogValue b) {
  if (a.is_zero_) return b;
  if (b.is_zero_) return a;
  if (a.log_ < b.log_) std::swap(a, b);
  return LogValue::from_log(a.log_ + std::log1p(std::exp(b.log_ - a.log_)));
}

LogValue operator*(LogValue a, LogValue b) {
  if (a.is_zero_ || b.is_zero_) return {};
  return LogValue::from_log(a.log_ + b.log_);
}

LogValue operator/(LogValue a, LogValue b) {
  if (b.is_zero_) throw NumericError("LogValue: division by zero");
  if (a.is_zero_) return {};
  return LogValue::from_log(a.log_ - b.log_);
}

std::partial_ordering operator<=>(LogValue a, LogValue b) noexcept {
  return a.log() <=> b.log();
}

bool operator==(LogValue a, LogValue b) noexcept { return a.log() == b.log(); }

std::string LogValue::to_string() const {
  char buf[64];
  if (is_zero_) return "0";
  const double l10 = log10();
  if (std::abs(l10) < 15.0) {
    std::snprintf(buf, sizeof buf, "%.10g", value());
  } else {
    std::snprintf(buf, sizeof buf, "10^%.6f", l10);
  }
  return buf;
}

}  // namespace rkm
