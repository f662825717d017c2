#pragma once

// Axisymmetric static vacuum metrics generated by a positive measure on the
// symmetry axis.
//
// Cylindrical coordinates (r, z, theta). The potential nu is the Newtonian
// potential of the measure; lambda is recovered by integrating
//   lambda_r = r (nu_r^2 - nu_z^2),   lambda_z = 2 r nu_r nu_z
// from a reference point on the outer axis, where lambda = 0. The metric is
//   g = e^{-2 nu} (e^{2 lambda} (dr^2 + dz^2) + r^2 dtheta^2),  h = e^nu.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "curvlab/exact_solutions.hpp"

namespace curvlab {

struct Atom {
  double z = 0.0;
  double mass = 0.0;
};

struct Rod {
  double z_lo = 0.0;
  double z_hi = 0.0;
  std::function<double(double)> density;
  bool uniform = false;        // density is the constant `level`
  double level = 0.0;
  std::vector<double> kinks;   // points where density is not smooth
  std::string name;

  static Rod constant(double z_lo, double z_hi, double level);
  /// Density c / (1 + |zeta|).
  static Rod inverse_one_plus_abs(double z_lo, double z_hi, double c = 1.0);
  /// Catalog lookup used by config files: "constant" or "inverse_one_plus_abs".
  static Rod from_catalog(const std::string& name, double z_lo, double z_hi, double param);
};

struct RieszMeasure {
  std::vector<Atom> atoms;
  std::vector<Rod> rods;

  double total_mass() const;
  bool empty() const { return atoms.empty() && rods.empty(); }
  /// Lowest and highest z of the support; (0, 0) for the empty measure.
  std::pair<double, double> support_extent() const;
  /// Throws InvalidArgument on malformed atoms or rods.
  void validate() const;
};

RieszMeasure superpose(const std::vector<RieszMeasure>& measures);

/// nu and its first and second partials in (r, z).
struct PotentialJet {
  double nu = 0.0;
  double nu_r = 0.0, nu_z = 0.0;
  double nu_rr = 0.0, nu_rz = 0.0, nu_zz = 0.0;
};

double potential(const RieszMeasure& mu, double r, double z);
PotentialJet potential_jet(const RieszMeasure& mu, double r, double z);

/// Default reference height: above the support by max(1, support length).
double default_reference_height(const RieszMeasure& mu);

/// lambda at (r, z), normalised to 0 at (0, z_ref). The path is the outer
/// axis then a horizontal leg when the axis leg avoids the support,
/// otherwise a horizontal leg at z_ref followed by a vertical leg.
double lambda_field(const RieszMeasure& mu, double r, double z, double z_ref);
double lambda_field(const RieszMeasure& mu, double r, double z);

/// Line integral of d(lambda) along a polyline of (r, z) vertices.
double lambda_along(const RieszMeasure& mu, const std::vector<std::pair<double, double>>& path);

/// Closed forms used as oracles.
double curzon_lambda(double m, double r, double z);
double schwarzschild_rod_potential(double m, double r, double z);
double schwarzschild_rod_lambda(double m, double r, double z);

struct WeylBox {
  double r_lo = 0.5, r_hi = 3.0;
  double z_lo = -2.0, z_hi = 2.0;
};

struct WeylSolution {
  RieszMeasure measure;
  WeylBox box;
  double z_ref = 0.0;
  std::function<double(double, double)> nu;
  std::function<double(double, double)> lambda;
  StaticPair pair;  // chart (r, z, theta), potential e^nu
};

/// Assemble the metric on the box. The box must keep away from the axis
/// by at least 1e-3 of its size.
WeylSolution build(const RieszMeasure& mu, const WeylBox& box);

}  // namespace curvlab
