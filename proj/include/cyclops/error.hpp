#pragma once

#include <stdexcept>
#include <string>

namespace cyclops {

enum class ErrorCode {
  InvalidArgument,
  OutOfBounds,
  AtInfinity,
  BadMagic,
  Truncated,
  Parse,
  MissingKey,
  DimensionMismatch,
  DegenerateSlice,
  InstanceTooLarge,
  Io,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cyclops
