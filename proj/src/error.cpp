#include "pwsml/error.hpp"

namespace pwsml {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteState:
      return "NonFiniteState";
    case ErrorCode::DegenerateSlope:
      return "DegenerateSlope";
    case ErrorCode::InvalidArgument:
      return "InvalidArgument";
    case ErrorCode::ParseError:
      return "ParseError";
    case ErrorCode::EmptyImage:
      return "EmptyImage";
    case ErrorCode::TooFewRows:
      return "TooFewRows";
    case ErrorCode::EmptyDataset:
      return "EmptyDataset";
    case ErrorCode::ShapeMismatch:
      return "ShapeMismatch";
    case ErrorCode::DivergedTraining:
      return "DivergedTraining";
    case ErrorCode::IncompatibleModel:
      return "IncompatibleModel";
    case ErrorCode::IoError:
      return "IoError";
  }
  return "Unknown";
}

}  // namespace pwsml
