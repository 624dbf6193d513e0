#pragma once

#include <stdexcept>
#include <string>

namespace chicap {

/// Whether a failure came from bad input or from the numerics. The CLI maps
/// these to exit codes 1 and 2.
enum class ErrorClass { validation, numerical };

class Error : public std::runtime_error {
 public:
  Error(std::string code, ErrorClass cls, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)), class_(cls) {}

  [[nodiscard]] const std::string& code() const noexcept { return code_; }
  [[nodiscard]] ErrorClass error_class() const noexcept { return class_; }

 private:
  std::string code_;
  ErrorClass class_;
};

#define CHICAP_DEFINE_ERROR(Name, Class)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(#Name, Class, what) {}  \
  };

CHICAP_DEFINE_ERROR(NotPositive, ErrorClass::validation)
CHICAP_DEFINE_ERROR(NotHermitian, ErrorClass::validation)
CHICAP_DEFINE_ERROR(NonState, ErrorClass::validation)
CHICAP_DEFINE_ERROR(DimensionMismatch, ErrorClass::validation)
CHICAP_DEFINE_ERROR(NotStochastic, ErrorClass::validation)
CHICAP_DEFINE_ERROR(NotProjector, ErrorClass::validation)
CHICAP_DEFINE_ERROR(EmptyEnsemble, ErrorClass::validation)
CHICAP_DEFINE_ERROR(InvalidEnsemble, ErrorClass::validation)
CHICAP_DEFINE_ERROR(InvalidResolution, ErrorClass::validation)
CHICAP_DEFINE_ERROR(InvalidConstraint, ErrorClass::validation)
CHICAP_DEFINE_ERROR(DegenerateTemperature, ErrorClass::validation)
CHICAP_DEFINE_ERROR(ScheduleInfeasible, ErrorClass::validation)
CHICAP_DEFINE_ERROR(InvalidArgument, ErrorClass::validation)
CHICAP_DEFINE_ERROR(ParseError, ErrorClass::validation)
CHICAP_DEFINE_ERROR(Infeasible, ErrorClass::validation)
CHICAP_DEFINE_ERROR(NoRoot, ErrorClass::numerical)
CHICAP_DEFINE_ERROR(NumericalInconsistency, ErrorClass::numerical)

#undef CHICAP_DEFINE_ERROR

class NotTracePreserving : public Error {
 public:
  NotTracePreserving(const std::string& what, double deviation)
      : Error("NotTracePreserving", ErrorClass::validation, what), deviation_(deviation) {}

  /// Operator norm of sum_k K_k^dagger K_k - I.
  [[nodiscard]] double deviation() const noexcept { return deviation_; }

 private:
  double deviation_;
};

}  // namespace chicap
