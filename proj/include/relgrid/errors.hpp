#pragma once

#include <stdexcept>
#include <string>

namespace relgrid {

// Base for all input/model validation failures. The CLI maps these to
// exit code 2 (invalid input); solver failures map to exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CycleDetected : InputError {
  using InputError::InputError;
};
struct Disconnected : InputError {
  using InputError::InputError;
};
struct DuplicateLineToBus : InputError {
  using InputError::InputError;
};
struct MissingSubstation : InputError {
  using InputError::InputError;
};
struct UnknownBus : InputError {
  using InputError::InputError;
};
struct UnknownComponent : InputError {
  using InputError::InputError;
};
struct UnknownDerBus : InputError {
  using InputError::InputError;
};
struct DimensionMismatch : InputError {
  using InputError::InputError;
};
struct EmptyProfile : InputError {
  using InputError::InputError;
};
struct NonPositiveMax : InputError {
  using InputError::InputError;
};
struct TemperatureOutOfRange : InputError {
  using InputError::InputError;
};
struct DegenerateCovariate : InputError {
  using InputError::InputError;
};
struct AllOneClass : InputError {
  using InputError::InputError;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Infeasible : SolverError {
  using SolverError::SolverError;
};
struct NumericalFailure : SolverError {
  using SolverError::SolverError;
};
struct NodeLimitNoIncumbent : SolverError {
  using SolverError::SolverError;
};
struct SubproblemInfeasible : SolverError {
  using SolverError::SolverError;
};
struct AlreadyReformulated : SolverError {
  using SolverError::SolverError;
};

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Separation : EstimationError {
  using EstimationError::EstimationError;
};
struct NoConvergence : EstimationError {
  using EstimationError::EstimationError;
};
struct DivergentTrajectories : EstimationError {
  using EstimationError::EstimationError;
};

}  // namespace relgrid
