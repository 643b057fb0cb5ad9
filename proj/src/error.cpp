#include "pegp/error.hpp"

namespace pegp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::NumericalRange: return "numerical range";
    case ErrorKind::NotPositiveDefinite: return "not positive definite";
    case ErrorKind::Causality: return "causality";
    case ErrorKind::InvalidGrid: return "invalid grid";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Divergence: return "training divergence";
    case ErrorKind::Io: return "i/o";
    case ErrorKind::NotFound: return "not found";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

NotPositiveDefinite::NotPositiveDefinite(std::size_t pivot, double value)
    : Error(ErrorKind::NotPositiveDefinite,
            "non-positive pivot " + std::to_string(value) + " at index " + std::to_string(pivot)),
      pivot_(pivot) {}

TrainingDivergence::TrainingDivergence(long long iteration, const std::string& what)
    : Error(ErrorKind::Divergence, "iteration " + std::to_string(iteration) + ": " + what),
      iteration_(iteration),
      reason_(what) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace pegp
