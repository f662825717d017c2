#include "curvlab/errors.hpp"

namespace curvlab {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::PointTooCloseToBoundary: return "PointTooCloseToBoundary";
    case Errc::MetricNotPositiveDefinite: return "MetricNotPositiveDefinite";
    case Errc::NonPositiveMass: return "NonPositiveMass";
    case Errc::PotentialNotPositive: return "PotentialNotPositive";
    case Errc::PotentialZeroAtPoint: return "PotentialZeroAtPoint";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::PointOnSupport: return "PointOnSupport";
    case Errc::PathCrossesSupport: return "PathCrossesSupport";
    case Errc::DomainTouchesSupport: return "DomainTouchesSupport";
    case Errc::ToleranceNotMet: return "ToleranceNotMet";
    case Errc::NonPhysicalParameter: return "NonPhysicalParameter";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonConstantScalarCurvature: return "NonConstantScalarCurvature";
    case Errc::NewtonDiverged: return "NewtonDiverged";
    case Errc::InconsistentSign: return "InconsistentSign";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::KerLStarNonTrivial: return "KerLStarNonTrivial";
    case Errc::TrialNotMeanZero: return "TrialNotMeanZero";
    case Errc::TrialNotMeanOne: return "TrialNotMeanOne";
    case Errc::OutOfChart: return "OutOfChart";
    case Errc::ChartTooSmall: return "ChartTooSmall";
    case Errc::OscillationViolated: return "OscillationViolated";
    case Errc::NoDescent: return "NoDescent";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::ScenarioFailed: return "ScenarioFailed";
  }
  return "Unknown";
}

}  // namespace curvlab
