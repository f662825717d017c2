#pragma once

// Curvature and volume radii on rotationally symmetric 3-manifolds.
//
// Every model is a metric  a(x)^2 dx^2 + f(x)^2 g_{S^2}  written in the
// meridian half-plane (x, phi), phi the polar angle on S^2. A point on the
// axis phi = 0 can be moved anywhere in its x-slice by a rotation, so the
// distance from it to (x', phi') is a function on the half-plane and balls
// about it are sets of revolution. Distances come from fast marching on the
// half-plane, volumes from dV = 2 pi a f^2 sin(phi) dx dphi.

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "curvlab/warped_profiles.hpp"

namespace curvlab {

struct SymmetricSpaceModel {
  std::string kind;
  double parameter = 0.0;  // mass for schwarzschild
  bool periodic = false;   // x lives on a circle of length x_max - x_min
  bool lower_boundary = true, upper_boundary = true;  // chart edges, not centers
  double x_min = 0.0, x_max = 1.0;

  std::function<double(double)> lapse;       // a
  std::function<double(double)> radius;      // f
  std::function<double(double)> curvature2;  // |Ric|^2
  std::function<double(double)> scalar;      // scalar curvature
  std::function<double(double)> potential;   // u, 1 when there is none
  std::function<double(double)> area_radius; // t reported in traces
  std::function<double(double)> coordinate_of;  // x for a given t

  double weight(double x, double phi) const;
};

/// Euclidean R^3 in polar coordinates, x = distance to the origin <= extent.
SymmetricSpaceModel flat_model(double extent);
/// S^2(b) x S^1(period).
SymmetricSpaceModel round_cylinder_model(double sphere_radius = 1.0, double period = 1.0);
/// Both sheets of the spatial Schwarzschild slice in the signed distance to the
/// horizon; the outer sheet reaches area radius t_max, the other one
/// inner_fraction of that distance. Potential sign(x) sqrt(1 - 2m/t).
SymmetricSpaceModel schwarzschild_model(double m, double t_max, double inner_fraction = 0.5);
/// Closed warped profile on its period.
SymmetricSpaceModel warped_model(const WarpedProfile& p);
/// The same space with metric tau^2 g.
SymmetricSpaceModel scale_model(const SymmetricSpaceModel& m, double tau);

struct RadiusConfig {
  double c_o = 1e-3;
  double mu = 1e-2;
  int grid_x = 512;
  int grid_phi = 512;
  double rel_tol = 1e-3;       // bisection stops at this relative width
  int ladder = 12;             // sub-radii s from r down to r * ladder_min
  double ladder_min = 1.0 / 32.0;
  int centers_per_side = 9;    // axis centers on each side of the base point
  int station_stride = 0;      // axis nodes usable as centers; 0 picks grid_x / 64

  void validate() const;
};

struct MeridianPoint {
  double x = 0.0;
  double phi = 0.0;
};

struct RadiusResult {
  double value = 0.0;
  bool capped = false;  // condition held up to the chart extent
};

struct BufferReport {
  double rho = 0.0;
  double value = 0.0;      // rho^4 / vol B(rho) * int_{B((1 - c) rho)} |Ric|^2
  double threshold = 0.0;  // c * c_o
  bool buffered = false;
};

struct StrongBufferReport {
  double rho = 0.0;
  double min_ratio = 0.0;  // min rho(z) / rho(y) over sampled boundary points
  int samples = 0;
  bool strongly_buffered = false;
};

struct LipschitzSample {
  double x = 0.0;           // axis point inside B_x(rho(x))
  double rho = 0.0;
  double boundary_distance = 0.0;
  double tolerance = 0.0;
  bool ok = true;
};

struct LemmaCheck {
  double lhs = 0.0;     // int |z|^2
  double rhs = 0.0;     // C * N * c_o * vol / rho0^4
  double rho0 = 0.0;
  double C = 1.0;
  double N = 0.0;       // overlap of the explicit cover
  int balls = 0;
  bool holds = false;
};

/// Grid, cached distance fields and memoized radii for one model. Not
/// thread-safe; share the model across threads, not the engine.
class RadiusEngine {
 public:
  RadiusEngine(SymmetricSpaceModel model, RadiusConfig cfg = {});
  ~RadiusEngine();
  RadiusEngine(RadiusEngine&&) noexcept;
  RadiusEngine& operator=(RadiusEngine&&) noexcept;

  const SymmetricSpaceModel& model() const;
  const RadiusConfig& config() const;
  int nx() const;
  int nphi() const;
  double node_x(int i) const;
  double grid_h(int i) const;  // largest cell side at axis node i
  double node_radius(int i) const;
  double node_lapse(int i) const;
  double node_potential(int i) const;
  double node_area_radius(int i) const;
  double total_volume() const;
  /// int |Ric - s g / 3|^2 over the chart.
  double traceless_ricci_mass() const;
  double max_curvature2() const;
  /// Nearest axis node; OutOfChart if x is outside the chart.
  int axis_node(double x) const;

  /// Distance from the axis node i to every grid node, phi-major per x.
  const std::vector<float>& field(int i);
  double distance(const MeridianPoint& p, const MeridianPoint& q);

  double ball_volume(int i, double r);
  double ball_curvature_mass(int i, double r);
  /// Largest r < inf with B_i(r) inside the chart (diameter bound when closed).
  double cap(int i);

  RadiusResult curvature_radius(int i);
  RadiusResult volume_radius(int i);

  BufferReport buffered(int i, double c);
  StrongBufferReport strongly_buffered(int i, double d);
  std::vector<LipschitzSample> lipschitz_check(int i, int samples = 8);

  /// Grid nodes with r_lo <= dist(i, .) <= r_hi as (x index, phi index).
  std::vector<std::pair<int, int>> shell(int i, double r_lo, double r_hi);
  /// sup over B_i(r) of |u - u(i)|.
  double oscillation(int i, double r);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double geodesic_distance(const SymmetricSpaceModel& m, const MeridianPoint& x, const MeridianPoint& y,
                         const RadiusConfig& cfg = {});
RadiusResult volume_radius(const SymmetricSpaceModel& m, double x, const RadiusConfig& cfg = {});
RadiusResult l2_curvature_radius(const SymmetricSpaceModel& m, double x, const RadiusConfig& cfg = {});
BufferReport buffered(const SymmetricSpaceModel& m, double y, double c, const RadiusConfig& cfg = {});
StrongBufferReport strongly_buffered(const SymmetricSpaceModel& m, double y, double d,
                                     const RadiusConfig& cfg = {});
/// Requires a closed model or one with vanishing curvature.
LemmaCheck lemma_1_4_check(const SymmetricSpaceModel& m, const RadiusConfig& cfg = {});

struct DescentFamily {
  std::string kind;
  double parameter = 0.0;
  double curvature_scale = 0.0;  // descent stops once rho reaches it
  /// Model whose chart comfortably contains balls around area radius t.
  std::function<SymmetricSpaceModel(double t)> window;
};

DescentFamily schwarzschild_family(double m);
DescentFamily flat_family();

struct DescentPoint {
  int step = 0;
  double x = 0.0;  // chart coordinate
  double t = 0.0;  // area radius
  double rho = 0.0;
  double u = 0.0;
  bool buffered = false;
  bool strongly_buffered = false;
};

struct DescentTrace {
  std::vector<DescentPoint> points;
  double c = 0.0, d = 0.0, d1 = 0.0, parameter = 0.0;
  std::string stop_reason;  // "buffered" or "curvature_scale"
  int steps() const { return points.empty() ? 0 : static_cast<int>(points.size()) - 1; }
};

/// Throws OscillationViolated or NoDescent.
DescentTrace descend(const DescentFamily& family, double t_start, double c, double d,
                     const RadiusConfig& cfg = {}, int max_steps = 20);

void write_trace_csv(const DescentTrace& tr, std::ostream& out);

}  // namespace curvlab
