#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slotcast {

enum class ErrorKind {
  EmptyCorpus,
  DegenerateInput,
  DimensionMismatch,
  StateNotFitted,
  TooFewSamples,
  NonFiniteTarget,
  NegativeTarget,
  BundleVersionMismatch,
  CorruptBundle,
  IoError,
  LengthMismatch,
  EmptyInput,
  InvalidConfig,
  OverlappingEnvironments,
  MalformedRecord,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this one exception type; callers
// branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace slotcast
