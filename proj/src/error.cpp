#include "slotcast/error.hpp"

namespace slotcast {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::StateNotFitted: return "StateNotFitted";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NonFiniteTarget: return "NonFiniteTarget";
    case ErrorKind::NegativeTarget: return "NegativeTarget";
    case ErrorKind::BundleVersionMismatch: return "BundleVersionMismatch";
    case ErrorKind::CorruptBundle: return "CorruptBundle";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::OverlappingEnvironments: return "OverlappingEnvironments";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace slotcast
