#pragma once

#include <stdexcept>
#include <string>

namespace csparts {

/// Invalid argument or shape passed to an operation.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable file content. The message names the offending field.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operation invoked on an object that does not support it (e.g. channel
/// selection on an L2 model).
class MisuseError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Non-finite values or divergence during optimization.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Failure inside a named pipeline stage; wraps the original message.
class StageError : public std::runtime_error {
public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

private:
  std::string stage_;
  int exit_code_;
};

}  // namespace csparts
