#pragma once

#include <stdexcept>
#include <string>

namespace gkdv {

// Base of every error raised by the library. Each subclass names the
// failure class so callers (and the CLI exit-code mapping) can dispatch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define GKDV_DEFINE_ERROR(Name, tag)                      \
  class Name : public Error {                             \
   public:                                                \
    using Error::Error;                                   \
    const char* kind() const noexcept override { return tag; } \
  };

GKDV_DEFINE_ERROR(DomainError, "domain")
GKDV_DEFINE_ERROR(ResolutionError, "resolution")
GKDV_DEFINE_ERROR(ModelError, "model")
GKDV_DEFINE_ERROR(ConfigurationError, "configuration")
GKDV_DEFINE_ERROR(ValidationError, "validation")
GKDV_DEFINE_ERROR(InsufficientDataError, "insufficient-data")
GKDV_DEFINE_ERROR(DegenerateInputError, "degenerate-input")
GKDV_DEFINE_ERROR(ConsistencyError, "internal-consistency")
GKDV_DEFINE_ERROR(UnsupportedError, "unsupported")
GKDV_DEFINE_ERROR(IoError, "io")

#undef GKDV_DEFINE_ERROR

// Raised when a time integration produces NaN/Inf or exceeds the growth cap.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  const char* kind() const noexcept override { return "blow-up"; }
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace gkdv
