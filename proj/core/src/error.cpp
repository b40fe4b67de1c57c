#include "sketchpersp/error.hpp"

namespace sketchpersp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::ProjectionSingularity: return "projection singularity";
    case ErrorKind::ZeroTangent: return "zero tangent";
    case ErrorKind::OutOfDomain: return "out of domain";
    case ErrorKind::EmptyContour: return "empty contour";
    case ErrorKind::UndefinedLoss: return "undefined loss";
    case ErrorKind::Checkpoint: return "checkpoint";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NumericalFailure: return "numerical failure";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace sketchpersp
