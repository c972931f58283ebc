#pragma once

#include <stdexcept>
#include <string>

namespace rkm {

// Coarse failure categories; the CLI maps them onto exit codes.
enum class ErrorCategory {
  usage,    // bad arguments, unknown names
  input,    // precondition violations on numeric inputs (norms, shapes)
  format,   // malformed files
  numeric,  // divergence, non-finite values, range failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

/// Shape or layering mistakes in a network or dataset.
struct StructuralError : Error {
  explicit StructuralError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorCategory::format, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

}  // namespace rkm
