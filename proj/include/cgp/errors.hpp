#pragma once

#include <stdexcept>
#include <string>

namespace cgp {

// Broad classes used by the CLI to pick an exit status.
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  // Short machine-parsable identifier, e.g. "range_error".
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

#define CGP_DEFINE_ERROR(Name, kind, code_str)                               \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& message)                                \
        : Error(ErrorKind::kind, code_str, message) {}                       \
  };

CGP_DEFINE_ERROR(RangeError, numerical, "range_error")
CGP_DEFINE_ERROR(DomainError, numerical, "domain_error")
CGP_DEFINE_ERROR(ShapeError, numerical, "shape_error")
CGP_DEFINE_ERROR(NumericalError, numerical, "numerical_error")
CGP_DEFINE_ERROR(TrainingError, numerical, "training_error")
CGP_DEFINE_ERROR(ForecastError, numerical, "forecast_error")
CGP_DEFINE_ERROR(FitError, numerical, "fit_error")
CGP_DEFINE_ERROR(InsufficientVariationError, numerical, "insufficient_variation")
CGP_DEFINE_ERROR(ParseError, data, "parse_error")
CGP_DEFINE_ERROR(JoinError, data, "join_error")
CGP_DEFINE_ERROR(AlignmentError, data, "alignment_error")
CGP_DEFINE_ERROR(LookupError, data, "lookup_error")
CGP_DEFINE_ERROR(ConfigError, usage, "config_error")

#undef CGP_DEFINE_ERROR

// Raised when a forward-Euler solve leaves the admissible region.
class IntegrationError : public Error {
 public:
  IntegrationError(int day, const std::string& message)
      : Error(ErrorKind::numerical, "integration_error", message), day_(day) {}
  int day() const { return day_; }

 private:
  int day_;
};

}  // namespace cgp
