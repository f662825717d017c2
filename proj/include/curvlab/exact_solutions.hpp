#pragma once

// Closed-form static metrics and the checks that go with them: residuals of
// the static vacuum system h r = D^2 h, Lap h = 0; the conformal companion
// u^2 g; the Ricci curvature of the warped 4-manifold; asymptotic mass.

#include <functional>
#include <string>
#include <vector>

#include "curvlab/chart_geometry.hpp"

namespace curvlab {

/// A metric together with a potential function, plus a map from a radial
/// parameter to chart points used for asymptotic fits.
struct StaticPair {
  MetricField metric;
  ScalarField potential;
  std::function<ChartPoint(double)> ray;
  std::string label;
};

struct ResidualReport {
  double sup_tensor_residual = 0.0;     // sup |h r - D^2 h|_g
  double sup_laplacian_residual = 0.0;  // sup |Lap h|
  double rms_tensor_residual = 0.0;
  double rms_laplacian_residual = 0.0;
  int sample_count = 0;
};

/// Schwarzschild in areal coordinates (t, theta, phi), t in
/// [2m(1 + eps_horizon), t_max]. With analytic = false the metric and
/// potential carry no derivative maps and everything goes through finite
/// differences.
StaticPair schwarzschild(double m, bool analytic = true, double eps_horizon = 1e-3,
                         double t_max = 1e7);

/// Proper radial distance from the horizon t = 2m out to areal radius t,
/// by Gauss-Kronrod quadrature of (1 - 2m/tau)^(-1/2).
double schwarzschild_radial_distance(double m, double t);

/// Flat metric with the given potential (Cartesian chart).
StaticPair flat_pair(const ScalarField& potential);

/// Tensor-product grid of chart points, counts[k] >= 1 samples per axis
/// (one sample sits at the midpoint).
std::vector<ChartPoint> product_grid(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& counts);

ResidualReport static_residual(const StaticPair& pair, const std::vector<ChartPoint>& grid,
                               const DiffScheme& scheme = {});

struct CompanionReport {
  MetricField metric;                // u^2 g
  double sup_ricci_residual = 0.0;   // sup |r~ - 2 (d log u)^2|, tilde norm
  double sup_log_laplacian = 0.0;    // sup |Lap~ log u|
  int sample_count = 0;
};

CompanionReport conformal_companion(const StaticPair& pair, const std::vector<ChartPoint>& grid,
                                    const DiffScheme& scheme = {});

struct Warped4Ricci {
  double horizontal = 0.0;  // Ric_X(H, H)
  double vertical = 0.0;    // Ric_X(V, V) for the unit fibre vector V
};

Warped4Ricci warped4_ricci(const StaticPair& pair, const ChartPoint& p, const Vec3& H,
                           const DiffScheme& scheme = {});

/// Scalar curvature of the warped 4-manifold, s - 2 Lap u / u.
double scalar4(const StaticPair& pair, const ChartPoint& p, const DiffScheme& scheme = {});

struct MassFit {
  double m = 0.0;
  double b = 0.0;         // coefficient of t^-2
  double residual = 0.0;  // RMS misfit
};

/// Least-squares fit of h(t) = 1 - m/t + b/t^2 along pair.ray.
MassFit asymptotic_mass_fit(const StaticPair& pair, const std::vector<double>& radii);

/// |grad h|_g at p.
double potential_gradient_norm(const StaticPair& pair, const ChartPoint& p,
                               const DiffScheme& scheme = {});

}  // namespace curvlab
