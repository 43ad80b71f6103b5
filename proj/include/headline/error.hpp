#pragma once

#include <stdexcept>
#include <string>

namespace headline {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kValidation = 1,
  kIo = 2,
  kDivergence = 3,
};

/// Base class of every error raised by the toolkit. The exit code tells the
/// CLI how to terminate when the error escapes a command.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}

  ExitCode exit_code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

#define HEADLINE_DEFINE_ERROR(Name, Code)                          \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(what, Code) {}  \
  };

// Input and contract violations.
HEADLINE_DEFINE_ERROR(SchemaError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(ValidationError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(DecodeError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(SizeError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(ParameterError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(EmptyCorpusError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(EmptyInputError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(RangeError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(ConfigError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(LengthError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(StateError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(DataError, ExitCode::kValidation)
HEADLINE_DEFINE_ERROR(PairingError, ExitCode::kValidation)

HEADLINE_DEFINE_ERROR(IoError, ExitCode::kIo)
HEADLINE_DEFINE_ERROR(DivergenceError, ExitCode::kDivergence)

#undef HEADLINE_DEFINE_ERROR

}  // namespace headline
