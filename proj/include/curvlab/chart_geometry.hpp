#pragma once

// Curvature and the linearized scalar-curvature operators of a Riemannian
// 3-metric given in a single coordinate chart.
//
// A metric is a callable returning the component matrix g_ij at a chart
// point. First and second coordinate derivatives may be supplied in closed
// form; whatever is missing is filled in by central finite differences
// controlled by a DiffScheme.
//
// Conventions: Laplacian is the trace of the Hessian (non-positive
// spectrum); the divergence of a symmetric 2-tensor is
// (delta alpha)_j = -(D_i alpha)_{ij}; Christoffel symbols are indexed as
// gamma[k](i, j) = Gamma^k_{ij}.

#include <array>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace curvlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using ChartPoint = Vec3;

/// Rank-3 array with a symmetric matrix in the last two slots: t[k](i, j).
struct Tensor3 {
  std::array<Mat3, 3> c;

  static Tensor3 zero();
  Mat3& operator[](int k) { return c[static_cast<std::size_t>(k)]; }
  const Mat3& operator[](int k) const { return c[static_cast<std::size_t>(k)]; }
};

/// Rank-4 array t[k][l](i, j), used for second partials of the metric.
struct Tensor4 {
  std::array<Tensor3, 3> c;

  static Tensor4 zero();
  Tensor3& operator[](int k) { return c[static_cast<std::size_t>(k)]; }
  const Tensor3& operator[](int k) const { return c[static_cast<std::size_t>(k)]; }
};

Tensor3 operator+(const Tensor3& a, const Tensor3& b);
Tensor3 operator-(const Tensor3& a, const Tensor3& b);
Tensor3 operator*(double s, const Tensor3& a);

/// Axis-aligned chart box. Infinite bounds are allowed for periodic or
/// unbounded coordinates.
struct ChartDomain {
  Vec3 lo = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::infinity());

  static ChartDomain unbounded() { return {}; }
  static ChartDomain box(const Vec3& lo, const Vec3& hi) { return {lo, hi}; }
  bool contains(const ChartPoint& p) const;
};

struct MetricField {
  ChartDomain domain;
  std::function<Mat3(const ChartPoint&)> eval;
  std::function<Tensor3(const ChartPoint&)> d1;  // d1(p)[k](i,j) = d_k g_ij
  std::function<Tensor4(const ChartPoint&)> d2;  // d2(p)[k][l](i,j) = d_k d_l g_ij
};

struct ScalarField {
  std::function<double(const ChartPoint&)> eval;
  std::function<Vec3(const ChartPoint&)> grad;  // coordinate partials
  std::function<Mat3(const ChartPoint&)> hess;  // coordinate second partials
};

struct SymTensorField {
  std::function<Mat3(const ChartPoint&)> eval;
  std::function<Tensor3(const ChartPoint&)> d1;  // d1(p)[k] = d_k alpha
};

struct DiffScheme {
  double step = 1e-4;  // relative to max(1, |coordinate|)
  int order = 2;       // 2 or 4
  bool richardson = false;

  /// Default used for the fourth-order operator LL*.
  static DiffScheme for_fourth_order() { return {1e-3, 4, false}; }
};

/// Metric, inverse and first/second coordinate derivatives at a point.
struct MetricJet {
  Mat3 g;
  Mat3 ginv;
  Tensor3 dg;
  Tensor4 ddg;
};

/// Everything curvature-related that only depends on the metric at a point.
struct PointGeometry {
  MetricJet jet;
  Tensor3 gamma;  // gamma[k](i,j) = Gamma^k_ij
  Mat3 ric;
  double scal = 0.0;
};

// -- algebra with respect to g ----------------------------------------------

double g_trace(const Mat3& ginv, const Mat3& a);
double g_inner(const Mat3& ginv, const Mat3& a, const Mat3& b);
double g_norm(const Mat3& ginv, const Mat3& a);
double g_inner_vec(const Mat3& ginv, const Vec3& a, const Vec3& b);

// -- simple fields ------------------------------------------------------------

MetricField flat_metric(const ChartDomain& domain = ChartDomain::unbounded());
ScalarField constant_field(double c);
SymTensorField constant_tensor(const Mat3& value);
/// Field that evaluates a tensor built from the metric itself, alpha = c * g.
SymTensorField metric_multiple(const MetricField& g, double c);

/// Metric tau^2 * g (same chart).
MetricField scaled_metric(const MetricField& g, double tau);

// -- operations ---------------------------------------------------------------

MetricJet metric_jet(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme);
PointGeometry geometry_at(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme);

Tensor3 christoffel(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme = {});
Mat3 ricci(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme = {});

struct ScalarAndTraceless {
  double s = 0.0;
  Mat3 z;
};
ScalarAndTraceless scalar_and_traceless(const MetricField& g, const ChartPoint& p,
                                        const DiffScheme& scheme = {});

Mat3 hessian(const MetricField& g, const ScalarField& phi, const ChartPoint& p,
             const DiffScheme& scheme = {});
double laplacian(const MetricField& g, const ScalarField& phi, const ChartPoint& p,
                 const DiffScheme& scheme = {});
Vec3 gradient_partials(const ScalarField& phi, const ChartPoint& p, const DiffScheme& scheme = {});

/// (delta alpha)_j as a covector in chart components.
Vec3 divergence(const MetricField& g, const SymTensorField& alpha, const ChartPoint& p,
                const DiffScheme& scheme = {});

/// L(alpha) = -Lap tr(alpha) + delta delta alpha - <r, alpha>.
double L_apply(const MetricField& g, const SymTensorField& alpha, const ChartPoint& p,
               const DiffScheme& scheme = {});

/// L*(h) = D^2 h - (Lap h) g - h r.
Mat3 L_star(const MetricField& g, const ScalarField& h, const ChartPoint& p,
            const DiffScheme& scheme = {});

/// LL*(v), by the closed form
///   2 Lap Lap v + 2 s Lap v - <D^2 v, r> + v |r|^2 + 3/2 <ds, dv> + 1/2 v Lap s,
/// which reduces to the classical constant-s expression when ds = 0.
double LL_star(const MetricField& g, const ScalarField& v, const ChartPoint& p,
               const DiffScheme& scheme = DiffScheme::for_fourth_order());

/// Tensor field p -> L*(h)(p), usable as input to L_apply.
SymTensorField L_star_field(const MetricField& g, const ScalarField& h, const DiffScheme& scheme);

}  // namespace curvlab
