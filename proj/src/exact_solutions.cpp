#include "curvlab/exact_solutions.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "curvlab/errors.hpp"

namespace curvlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat3 diag3(double a, double b, double c) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

Vec3 potential_grad(const ScalarField& u, const ChartPoint& p, const DiffScheme& s) {
  return gradient_partials(u, p, s);
}

}  // namespace

StaticPair schwarzschild(double m, bool analytic, double eps_horizon, double t_max) {
  if (!(m > 0.0)) throw Error(Errc::NonPositiveMass, "Schwarzschild mass must be positive");
  if (!(eps_horizon > 0.0) || !(t_max > 2.0 * m * (1.0 + eps_horizon)))
    throw Error(Errc::InvalidArgument, "need eps_horizon > 0 and t_max beyond the horizon");

  StaticPair pair;
  pair.label = "schwarzschild";
  pair.metric.domain = ChartDomain::box(Vec3(2.0 * m * (1.0 + eps_horizon), 0.0, -1e300),
                                        Vec3(t_max, kPi, 1e300));
  pair.metric.eval = [m](const ChartPoint& p) {
    const double t = p[0];
    const double s = std::sin(p[1]);
    return diag3(t / (t - 2.0 * m), t * t, t * t * s * s);
  };
  pair.potential.eval = [m](const ChartPoint& p) { return std::sqrt(1.0 - 2.0 * m / p[0]); };
  pair.ray = [](double t) { return ChartPoint(t, kPi / 2.0, 0.0); };

  if (analytic) {
    pair.metric.d1 = [m](const ChartPoint& p) {
      const double t = p[0];
      const double s = std::sin(p[1]);
      const double c = std::cos(p[1]);
      const double q = t - 2.0 * m;
      Tensor3 d = Tensor3::zero();
      d[0] = diag3(-2.0 * m / (q * q), 2.0 * t, 2.0 * t * s * s);
      d[1] = diag3(0.0, 0.0, 2.0 * t * t * s * c);
      return d;
    };
    pair.metric.d2 = [m](const ChartPoint& p) {
      const double t = p[0];
      const double s = std::sin(p[1]);
      const double c = std::cos(p[1]);
      const double q = t - 2.0 * m;
      Tensor4 d = Tensor4::zero();
      d[0][0] = diag3(4.0 * m / (q * q * q), 2.0, 2.0 * s * s);
      d[0][1] = diag3(0.0, 0.0, 4.0 * t * s * c);
      d[1][0] = d[0][1];
      d[1][1] = diag3(0.0, 0.0, 2.0 * t * t * (c * c - s * s));
      return d;
    };
    pair.potential.grad = [m](const ChartPoint& p) {
      const double t = p[0];
      const double h = std::sqrt(1.0 - 2.0 * m / t);
      return Vec3((m / (t * t)) / h, 0.0, 0.0);
    };
    pair.potential.hess = [m](const ChartPoint& p) {
      const double t = p[0];
      const double h = std::sqrt(1.0 - 2.0 * m / t);
      const double htt = -2.0 * m / (t * t * t * h) - m * m / (std::pow(t, 4) * h * h * h);
      return diag3(htt, 0.0, 0.0);
    };
  }
  return pair;
}

double schwarzschild_radial_distance(double m, double t) {
  if (!(m > 0.0)) throw Error(Errc::NonPositiveMass, "Schwarzschild mass must be positive");
  if (t < 2.0 * m) throw Error(Errc::OutOfRange, "areal radius inside the horizon");
  // tau = 2m + w^2 removes the inverse square-root singularity at the horizon.
  auto integrand = [m](double w) { return 2.0 * std::sqrt(2.0 * m + w * w); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0,
                                                                       std::sqrt(t - 2.0 * m), 15, 1e-13);
}

StaticPair flat_pair(const ScalarField& potential) {
  StaticPair pair;
  pair.label = "flat";
  pair.metric = flat_metric();
  pair.potential = potential;
  pair.ray = [](double t) { return ChartPoint(t, 0.0, 0.0); };
  return pair;
}

std::vector<ChartPoint> product_grid(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& counts) {
  std::vector<ChartPoint> out;
  auto coord = [&](int axis, int i) {
    const int n = counts[static_cast<std::size_t>(axis)];
    if (n <= 1) return 0.5 * (lo[axis] + hi[axis]);
    return lo[axis] + (hi[axis] - lo[axis]) * i / (n - 1);
  };
  for (int i = 0; i < std::max(1, counts[0]); ++i)
    for (int j = 0; j < std::max(1, counts[1]); ++j)
      for (int k = 0; k < std::max(1, counts[2]); ++k)
        out.emplace_back(coord(0, i), coord(1, j), coord(2, k));
  return out;
}

ResidualReport static_residual(const StaticPair& pair, const std::vector<ChartPoint>& grid,
                               const DiffScheme& scheme) {
  ResidualReport rep;
  double acc_t = 0.0, acc_l = 0.0;
  for (const auto& p : grid) {
    const PointGeometry pg = geometry_at(pair.metric, p, scheme);
    const Mat3 h2 = hessian(pair.metric, pair.potential, p, scheme);
    const double h = pair.potential.eval(p);
    const double rt = g_norm(pg.jet.ginv, h * pg.ric - h2);
    const double rl = std::abs(g_trace(pg.jet.ginv, h2));
    rep.sup_tensor_residual = std::max(rep.sup_tensor_residual, rt);
    rep.sup_laplacian_residual = std::max(rep.sup_laplacian_residual, rl);
    acc_t += rt * rt;
    acc_l += rl * rl;
    ++rep.sample_count;
  }
  if (rep.sample_count > 0) {
    rep.rms_tensor_residual = std::sqrt(acc_t / rep.sample_count);
    rep.rms_laplacian_residual = std::sqrt(acc_l / rep.sample_count);
  }
  return rep;
}

CompanionReport conformal_companion(const StaticPair& pair, const std::vector<ChartPoint>& grid,
                                    const DiffScheme& scheme) {
  for (const auto& p : grid)
    if (!(pair.potential.eval(p) > 0.0))
      throw Error(Errc::PotentialNotPositive, "conformal companion needs u > 0 on the sample grid");

  const MetricField g = pair.metric;
  const ScalarField u = pair.potential;
  CompanionReport rep;
  rep.metric.domain = g.domain;
  rep.metric.eval = [g, u](const ChartPoint& p) {
    const double w = u.eval(p);
    return (w * w * g.eval(p)).eval();
  };
  if (g.d1 && u.grad) {
    rep.metric.d1 = [g, u](const ChartPoint& p) {
      const double w = u.eval(p);
      const Vec3 dw = u.grad(p);
      const Mat3 gm = g.eval(p);
      const Tensor3 dg = g.d1(p);
      Tensor3 out;
      for (int k = 0; k < 3; ++k) out[k] = 2.0 * w * dw[k] * gm + w * w * dg[k];
      return out;
    };
    if (g.d2 && u.hess) {
      rep.metric.d2 = [g, u](const ChartPoint& p) {
        const double w = u.eval(p);
        const Vec3 dw = u.grad(p);
        const Mat3 hw = u.hess(p);
        const Mat3 gm = g.eval(p);
        const Tensor3 dg = g.d1(p);
        const Tensor4 ddg = g.d2(p);
        Tensor4 out;
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            out[k][l] = 2.0 * (dw[k] * dw[l] + w * hw(k, l)) * gm + 2.0 * w * dw[k] * dg[l] +
                        2.0 * w * dw[l] * dg[k] + w * w * ddg[k][l];
        return out;
      };
    }
  }

  ScalarField logu;
  logu.eval = [u](const ChartPoint& p) { return std::log(u.eval(p)); };
  if (u.grad) logu.grad = [u](const ChartPoint& p) { return (u.grad(p) / u.eval(p)).eval(); };
  if (u.grad && u.hess)
    logu.hess = [u](const ChartPoint& p) {
      const double w = u.eval(p);
      const Vec3 dw = u.grad(p);
      return (u.hess(p) / w - dw * dw.transpose() / (w * w)).eval();
    };

  for (const auto& p : grid) {
    const PointGeometry pg = geometry_at(rep.metric, p, scheme);
    const Vec3 dl = gradient_partials(logu, p, scheme);
    const Mat3 target = 2.0 * dl * dl.transpose();
    rep.sup_ricci_residual = std::max(rep.sup_ricci_residual, g_norm(pg.jet.ginv, pg.ric - target));
    rep.sup_log_laplacian =
        std::max(rep.sup_log_laplacian, std::abs(laplacian(rep.metric, logu, p, scheme)));
    ++rep.sample_count;
  }
  return rep;
}

Warped4Ricci warped4_ricci(const StaticPair& pair, const ChartPoint& p, const Vec3& H,
                           const DiffScheme& scheme) {
  const double h = pair.potential.eval(p);
  if (h == 0.0 || !std::isfinite(h))
    throw Error(Errc::PotentialZeroAtPoint, "warped 4-metric degenerates where the potential vanishes");
  const PointGeometry pg = geometry_at(pair.metric, p, scheme);
  const Mat3 h2 = hessian(pair.metric, pair.potential, p, scheme);
  Warped4Ricci out;
  out.horizontal = H.dot(pg.ric * H) - H.dot(h2 * H) / h;
  out.vertical = -g_trace(pg.jet.ginv, h2) / h;
  return out;
}

double scalar4(const StaticPair& pair, const ChartPoint& p, const DiffScheme& scheme) {
  const double u = pair.potential.eval(p);
  if (u == 0.0 || !std::isfinite(u))
    throw Error(Errc::PotentialZeroAtPoint, "warped 4-metric degenerates where the potential vanishes");
  const PointGeometry pg = geometry_at(pair.metric, p, scheme);
  return pg.scal - 2.0 * laplacian(pair.metric, pair.potential, p, scheme) / u;
}

MassFit asymptotic_mass_fit(const StaticPair& pair, const std::vector<double>& radii) {
  if (radii.size() < 3) throw Error(Errc::InsufficientSamples, "mass fit needs at least 3 radii");
  if (!pair.ray) throw Error(Errc::InvalidArgument, "pair has no radial ray");
  const auto n = static_cast<Eigen::Index>(radii.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = radii[static_cast<std::size_t>(i)];
    A(i, 0) = -1.0 / t;
    A(i, 1) = 1.0 / (t * t);
    y(i) = pair.potential.eval(pair.ray(t)) - 1.0;
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
  MassFit fit;
  fit.m = c[0];
  fit.b = c[1];
  fit.residual = std::sqrt((A * c - y).squaredNorm() / static_cast<double>(n));
  return fit;
}

double potential_gradient_norm(const StaticPair& pair, const ChartPoint& p, const DiffScheme& scheme) {
  const Mat3 ginv = pair.metric.eval(p).inverse();
  const Vec3 d = potential_grad(pair.potential, p, scheme);
  return std::sqrt(std::max(0.0, g_inner_vec(ginv, d, d)));
}

}  // namespace curvlab
