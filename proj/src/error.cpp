#include "dvarimax/error.hpp"

namespace dvarimax {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::RankDeficient: return "rank-deficient";
    case ErrorKind::CorrectionInfeasible: return "correction-infeasible";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::DegenerateSolutions: return "degenerate-solutions";
    case ErrorKind::DegenerateProjector: return "degenerate-projector";
    case ErrorKind::DegenerateSlicing: return "degenerate-slicing";
    case ErrorKind::NoSignal: return "no-signal";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<long> index)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
      kind_(kind),
      index_(index) {}

}  // namespace dvarimax
