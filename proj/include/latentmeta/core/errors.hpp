#pragma once

#include <stdexcept>
#include <string>

namespace latentmeta {

/// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kNumericFault = 2,
  kDivergence = 3,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const { return ExitCode::kValidation; }
};

/// Bad or unknown configuration key/value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse (step after done, mismatched batch lengths, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to a pure math routine (non-positive variance, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced by a network or a numerical routine.
class NumericFault : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kNumericFault; }
};

/// Training loss blew past the divergence guard.
class DivergenceAbort : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kDivergence; }
};

}  // namespace latentmeta
