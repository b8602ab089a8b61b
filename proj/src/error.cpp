#include "gaitmag/error.hpp"

namespace gaitmag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegeneratePosition: return "DegeneratePosition";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UnknownRxId: return "UnknownRxId";
    case ErrorCode::TooSparse: return "TooSparse";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::LabelMissing: return "LabelMissing";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::MismatchedCohort: return "MismatchedCohort";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace gaitmag
