#include "graml/error.hpp"

namespace graml {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ContractViolation: return "contract_violation";
    case ErrorKind::Dimension: return "dimension_mismatch";
    case ErrorKind::Encoding: return "encoding_error";
    case ErrorKind::TrainingFailure: return "training_failure";
    case ErrorKind::GenerationFailure: return "generation_failure";
    case ErrorKind::PlanningFailure: return "planning_failure";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Config: return "config_error";
    case ErrorKind::Io: return "io_error";
    case ErrorKind::Parse: return "parse_error";
  }
  return "unknown";
}

}  // namespace graml
