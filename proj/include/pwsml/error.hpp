#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pwsml {

enum class ErrorCode {
  NonFiniteState,
  DegenerateSlope,
  InvalidArgument,
  ParseError,
  EmptyImage,
  TooFewRows,
  EmptyDataset,
  ShapeMismatch,
  DivergedTraining,
  IncompatibleModel,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to a structured error line and a distinct exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when an orbit leaves the finite reals. `iteration` is the index of
/// the step whose output was non-finite (0 means the input itself).
class NonFiniteStateError : public Error {
 public:
  NonFiniteStateError(std::size_t iteration, const std::string& message)
      : Error(ErrorCode::NonFiniteState, message), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Malformed input file; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace pwsml
