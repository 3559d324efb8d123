#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace carleman {

enum class ErrorKind {
  StepTooLarge,
  OutsideDomain,
  NotDissipative,
  InvalidBeta,
  EmptyPlateau,
  CflViolation,
  CharacteristicLost,
  EmptyMask,
  FinalTimeNotZero,
  InadmissibleWeight,
  ViolatesR0,
  NoConvergence,
  GeometricConditionViolated,
  DegenerateSamples,
  NonpositiveData,
  EnsembleSizeMismatch,
  MembershipViolated,
  DeterminantConditionViolated,
  UnknownScenario,
  BadOverride,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// True for errors that signal a violated hypothesis of the underlying
/// estimates (as opposed to usage or internal failures). The CLI maps these
/// to exit code 2.
bool is_hypothesis_violation(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace carleman
