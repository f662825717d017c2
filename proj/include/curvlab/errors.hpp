#pragma once

#include <stdexcept>
#include <string>

namespace curvlab {

enum class Errc {
  InvalidArgument,
  PointTooCloseToBoundary,
  MetricNotPositiveDefinite,
  NonPositiveMass,
  PotentialNotPositive,
  PotentialZeroAtPoint,
  InsufficientSamples,
  PointOnSupport,
  PathCrossesSupport,
  DomainTouchesSupport,
  ToleranceNotMet,
  NonPhysicalParameter,
  OutOfRange,
  NonConstantScalarCurvature,
  NewtonDiverged,
  InconsistentSign,
  GridTooCoarse,
  KerLStarNonTrivial,
  TrialNotMeanZero,
  TrialNotMeanOne,
  OutOfChart,
  ChartTooSmall,
  OscillationViolated,
  NoDescent,
  ConfigInvalid,
  ScenarioFailed,
};

const char* to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (CLI, bindings, tests) can branch on the condition, not the text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace curvlab
