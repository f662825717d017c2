#pragma once

// Rotationally symmetric metrics  a(t)^2 dt^2 + f(t)^2 g_{S^2}, the
// hyperbolic black-hole profile ODE, and the Yamabe equation reduced to
// SO(3)-invariant conformal factors on a circle.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "curvlab/exact_solutions.hpp"
#include "curvlab/spectral.hpp"

namespace curvlab {

/// Value and first four derivatives of a function of t.
struct ProfileJet {
  double v = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0;
};

struct WarpedProfile {
  std::string kind;
  bool closed = false;    // periodic in t with the given period
  double period = 0.0;
  double t_max = 0.0;     // interval profiles live on [-t_max, t_max]
  double parameter = 0.0; // black-hole parameter a, when relevant

  std::vector<double> t, f, fp;  // samples (t >= 0 for interval profiles)

  std::function<ProfileJet(double)> radius;
  std::function<ProfileJet(double)> lapse;  // empty means a = 1

  ProfileJet radius_at(double t) const;
  ProfileJet lapse_at(double t) const;
  bool geodesic() const { return !lapse; }

  /// The 3-metric in chart (t, theta, phi) with closed-form derivatives.
  MetricField metric() const;
};

/// Hyperbolic black-hole profile: (f')^2 = 1 + f^2 - (a^3 + a)/f, f(0) = a.
/// Integrated in the regular form f'' = f + (a^3 + a)/(2 f^2) after a series
/// start, tol bounds the first-integral residual relative to 1 + f^2.
WarpedProfile solve_bh_profile(double a, double t_max, double tol = 1e-10);

/// f = b, periodic with the given period.
WarpedProfile constant_profile(double b, double period);
/// f = b (1 + eps cos(2 pi t / period)).
WarpedProfile cosine_profile(double b, double eps, double period);
/// f = sinh t on t > 0.
WarpedProfile sinh_profile(double t_max);
/// Periodic profile from samples of the lapse a and radius f on the uniform
/// grid, interpolated spectrally.
WarpedProfile periodic_samples_profile(const Eigen::VectorXd& lapse, const Eigen::VectorXd& radius,
                                       double period, const std::string& kind = "samples");

/// Two-column "t,f" CSV of the stored samples.
void write_profile_csv(const WarpedProfile& p, std::ostream& out);

/// 2 (1 - f_s^2)/f^2 - 4 f_ss / f with s the arclength parameter.
double profile_scalar_curvature(const WarpedProfile& p, double t);

/// Metric paired with the potential f' (black-hole profiles), for the
/// warped 4-manifold checks.
StaticPair bh_pair(const WarpedProfile& p);

/// Sup over interior samples of |L*(f')|_g computed on the assembled
/// 3-metric. Requires constant scalar curvature.
double kernel_residual(const WarpedProfile& p, int samples = 40);

/// Scalar-curvature spread used as the constant-s gate.
double scalar_curvature_spread(const WarpedProfile& p, int samples = 64);

struct YamabeResult {
  Eigen::VectorXd t;
  Eigen::VectorXd psi;
  double sbar = 0.0;
  double residual = 0.0;     // sup |s(psi^4 g) - sbar|
  double lowest_eigenvalue = 0.0;
  int iterations = 0;
  WarpedProfile conformal;   // psi^4 g as a lapse/radius profile
};

struct YamabeOptions {
  int n = 256;
  double tol = 1e-11;
  int max_iter = 60;
  std::optional<Eigen::VectorXd> initial_psi;
};

/// target_sign in {-1, 0, +1}; empty means take the sign of the lowest
/// eigenvalue of the conformal Laplacian.
YamabeResult yamabe_reduce(const WarpedProfile& p, std::optional<int> target_sign,
                           const YamabeOptions& opt = {});

}  // namespace curvlab
