#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchpersp {

enum class ErrorKind {
  DegenerateInput,
  ProjectionSingularity,
  ZeroTangent,
  OutOfDomain,
  EmptyContour,
  UndefinedLoss,
  Checkpoint,
  Parse,
  Domain,
  NumericalFailure,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers map
/// failures onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sketchpersp
