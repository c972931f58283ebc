#pragma once

#include <compare>
#include <limits>
#include <string>

namespace rkm {

/// A nonnegative real stored as its natural logarithm.
///
/// Capacity quantities grow doubly exponentially in depth, so they are kept
/// as log-magnitudes. Each sum or product is accurate to a relative error of
/// about |log| * 2^-52 in the represented value, i.e. below 1e-12 for
/// magnitudes up to e^4000.
class LogValue {
 public:
  constexpr LogValue() = default;  // zero

  static constexpr LogValue zero() { return {}; }
  static LogValue from_log(double log_magnitude);
  /// Throws InputError for negative or non-finite `v`.
  static LogValue from_value(double v);

  bool is_zero() const noexcept { return is_zero_; }
  /// Natural log; -inf for zero.
  double log() const noexcept;
  double log10() const noexcept;
  /// The plain value; overflows to +inf when the magnitude exceeds double range.
  double value() const noexcept;

  LogValue sqrt() const;
  LogValue pow(double exponent) const;

  friend LogValue operator+(LogValue a, LogValue b);
  friend LogValue operator*(LogValue a, LogValue b);
  /// a / b; throws NumericError when b is zero.
  friend LogValue operator/(LogValue a, LogValue b);
  LogValue& operator+=(LogValue other) { return *this = *this + other; }
  LogValue& operator*=(LogValue other) { return *this = *this * other; }

  friend std::partial_ordering operator<=>(LogValue a, LogValue b) noexcept;
  friend bool operator==(LogValue a, LogValue b) noexcept;

  /// Human-readable form: plain decimal when it fits, otherwise "10^x".
  std::string to_string() const;

 private:
  double log_ = -std::numeric_limits<double>::infinity();
  bool is_zero_ = true;
};

}  // namespace rkm
