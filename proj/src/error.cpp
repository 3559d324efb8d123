#include "carleman/error.hpp"

namespace carleman {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::OutsideDomain: return "OutsideDomain";
    case ErrorKind::NotDissipative: return "NotDissipative";
    case ErrorKind::InvalidBeta: return "InvalidBeta";
    case ErrorKind::EmptyPlateau: return "EmptyPlateau";
    case ErrorKind::CflViolation: return "CflViolation";
    case ErrorKind::CharacteristicLost: return "CharacteristicLost";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::FinalTimeNotZero: return "FinalTimeNotZero";
    case ErrorKind::InadmissibleWeight: return "InadmissibleWeight";
    case ErrorKind::ViolatesR0: return "ViolatesR0";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::GeometricConditionViolated: return "GeometricConditionViolated";
    case ErrorKind::DegenerateSamples: return "DegenerateSamples";
    case ErrorKind::NonpositiveData: return "NonpositiveData";
    case ErrorKind::EnsembleSizeMismatch: return "EnsembleSizeMismatch";
    case ErrorKind::MembershipViolated: return "MembershipViolated";
    case ErrorKind::DeterminantConditionViolated: return "DeterminantConditionViolated";
    case ErrorKind::UnknownScenario: return "UnknownScenario";
    case ErrorKind::BadOverride: return "BadOverride";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_hypothesis_violation(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotDissipative:
    case ErrorKind::InvalidBeta:
    case ErrorKind::EmptyPlateau:
    case ErrorKind::CflViolation:
    case ErrorKind::InadmissibleWeight:
    case ErrorKind::ViolatesR0:
    case ErrorKind::GeometricConditionViolated:
    case ErrorKind::MembershipViolated:
    case ErrorKind::DeterminantConditionViolated:
      return true;
    default:
      return false;
  }
}

}  // namespace carleman
