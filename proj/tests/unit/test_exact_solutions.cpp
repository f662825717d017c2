#include <doctest.h>

#include <cmath>

#include "curvlab/errors.hpp"
#include "curvlab/exact_solutions.hpp"
#include "test_metrics.hpp"

using namespace curvlab;
using testmetrics::kPi;

namespace {

std::vector<ChartPoint> schw_grid(double lo, double hi, int n) {
  return product_grid(Vec3(lo, 0.4, 0.0), Vec3(hi, kPi - 0.4, 0.0), {n, n, 1});
}

ScalarField affine_x1() {
  ScalarField h;
  h.eval = [](const ChartPoint& p) { return 1.0 + p[0]; };
  h.grad = [](const ChartPoint&) { return Vec3(1, 0, 0); };
  h.hess = [](const ChartPoint&) { return Mat3::Zero().eval(); };
  return h;
}

}  // namespace

TEST_CASE("schwarzschild: potential values and horizon area") {
  const auto pair = schwarzschild(1.0);
  const double t = 2.0 * (1.0 + 1e-3);
  const auto p = ChartPoint(t, 1.0, 0.0);
  CHECK(pair.potential.eval(p) == doctest::Approx(std::sqrt(1e-3 / (1.0 + 1e-3))));
  CHECK(pair.potential.eval(p) == doctest::Approx(0.0316).epsilon(1e-3));

  const auto far = ChartPoint(1e6, 1.0, 0.0);
  CHECK(pair.potential.eval(far) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(pair.metric.eval(far)(0, 0) == doctest::Approx(1.0).epsilon(1e-5));

  // Area of the horizon sphere: 4 pi t^2 at t = 2m.
  const double m = 1.5;
  const auto pm = schwarzschild(m, true, 1e-12);
  const Mat3 g = pm.metric.eval(ChartPoint(2 * m, kPi / 2, 0));
  CHECK(4 * kPi * g(1, 1) == doctest::Approx(16 * kPi * m * m).epsilon(1e-9));

  CHECK_THROWS_AS(schwarzschild(0.0), Error);
  try {
    schwarzschild(-1.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonPositiveMass);
  }
}

TEST_CASE("schwarzschild: analytic derivatives agree with finite differences") {
  const auto pair = schwarzschild(1.0);
  const ChartPoint p(3.7, 1.1, 0.4);
  const Tensor3 d = pair.metric.d1(p);
  const double h = 1e-5;
  for (int k = 0; k < 3; ++k) {
    ChartPoint e = ChartPoint::Zero();
    e[k] = h;
    const Mat3 fd = (pair.metric.eval(p + e) - pair.metric.eval(p - e)) / (2 * h);
    CHECK((fd - d[k]).cwiseAbs().maxCoeff() < 1e-7);
  }
  const Tensor4 dd = pair.metric.d2(p);
  for (int k = 0; k < 3; ++k) {
    ChartPoint e = ChartPoint::Zero();
    e[k] = h;
    const Tensor3 a = pair.metric.d1(p + e), b = pair.metric.d1(p - e);
    for (int l = 0; l < 3; ++l) CHECK(((a[l] - b[l]) / (2 * h) - dd[k][l]).cwiseAbs().maxCoeff() < 1e-6);
  }
  const double fd_h = (pair.potential.eval(p + Vec3(h, 0, 0)) - pair.potential.eval(p - Vec3(h, 0, 0))) / (2 * h);
  CHECK(pair.potential.grad(p)[0] == doctest::Approx(fd_h).epsilon(1e-8));
  const double fd_hh = (pair.potential.grad(p + Vec3(h, 0, 0))[0] - pair.potential.grad(p - Vec3(h, 0, 0))[0]) / (2 * h);
  CHECK(pair.potential.hess(p)(0, 0) == doctest::Approx(fd_hh).epsilon(1e-7));
}

TEST_CASE("schwarzschild: radial distance against the closed-form antiderivative") {
  const double m = 1.0;
  auto oracle = [m](double t) {
    return std::sqrt(t * (t - 2 * m)) +
           2 * m * std::log((std::sqrt(t) + std::sqrt(t - 2 * m)) / std::sqrt(2 * m));
  };
  for (double t : {2.0, 2.5, 3.0, 5.0, 20.0, 100.0})
    CHECK(schwarzschild_radial_distance(m, t) == doctest::Approx(oracle(t)).epsilon(1e-11));
}

TEST_CASE("static_residual: Schwarzschild, flat affine, flat quadratic") {
  const auto rep = static_residual(schwarzschild(1.0), schw_grid(2.5, 10.0, 8));
  CHECK(rep.sup_tensor_residual < 1e-6);
  CHECK(rep.sup_laplacian_residual < 1e-6);
  CHECK(rep.sample_count == 64);

  const auto flat = static_residual(flat_pair(affine_x1()), product_grid(Vec3(-1, -1, -1), Vec3(1, 1, 1), {3, 3, 3}));
  CHECK(flat.sup_tensor_residual == 0.0);
  CHECK(flat.sup_laplacian_residual == 0.0);

  ScalarField q;
  q.eval = [](const ChartPoint& p) { return p[0] * p[0]; };
  const auto rq = static_residual(flat_pair(q), product_grid(Vec3(-1, -1, -1), Vec3(1, 1, 1), {3, 3, 3}));
  CHECK(rq.sup_tensor_residual == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rq.sup_laplacian_residual == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("property: static residual of Schwarzschild decreases at second order in the step") {
  const auto pair = schwarzschild(1.0, false);
  const auto grid = schw_grid(3.0, 6.0, 3);
  const auto a = static_residual(pair, grid, DiffScheme{4e-3, 2, false});
  const auto b = static_residual(pair, grid, DiffScheme{2e-3, 2, false});
  CHECK(a.sup_tensor_residual / b.sup_tensor_residual > 3.0);
}

TEST_CASE("conformal_companion") {
  // u = 1: the check reduces to the Ricci tensor of g itself.
  const auto s = schwarzschild(1.0);
  StaticPair unit = s;
  unit.potential = constant_field(1.0);
  const auto grid = schw_grid(3.0, 10.0, 4);
  const auto ru = conformal_companion(unit, grid);
  double sup_r = 0.0;
  for (const auto& p : grid) {
    const auto pg = geometry_at(s.metric, p, {});
    sup_r = std::max(sup_r, g_norm(pg.jet.ginv, pg.ric));
  }
  CHECK(ru.sup_ricci_residual == doctest::Approx(sup_r).epsilon(1e-6));

  const auto rs = conformal_companion(s, grid);
  CHECK(rs.sup_ricci_residual < 1e-5);
  CHECK(rs.sup_log_laplacian < 1e-5);
  const auto base = static_residual(s, grid);
  CHECK(rs.sup_ricci_residual < 10.0 * std::max(base.sup_tensor_residual, 1e-9) + 1e-9);

  // Flat g, u = 1 + x1: r~ = 2 u^-2 dx1^2.
  const auto rf = conformal_companion(flat_pair(affine_x1()), {ChartPoint(0.3, 0.1, 0.2)});
  CHECK(rf.sup_ricci_residual < 1e-6);
  const auto pg = geometry_at(rf.metric, ChartPoint(0.3, 0.1, 0.2), {});
  CHECK(pg.ric(0, 0) == doctest::Approx(2.0 / (1.3 * 1.3)).epsilon(1e-6));

  ScalarField neg;
  neg.eval = [](const ChartPoint& p) { return p[0]; };
  try {
    conformal_companion(flat_pair(neg), {ChartPoint(-1, 0, 0)});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PotentialNotPositive);
  }
}

TEST_CASE("warped4_ricci and scalar4 on Schwarzschild and flat") {
  const auto s = schwarzschild(1.0);
  for (const Vec3 H : {Vec3(1, 0, 0), Vec3(0.3, 0.2, -0.5)}) {
    const auto w = warped4_ricci(s, ChartPoint(4.0, 1.0, 0.0), H);
    CHECK(std::abs(w.horizontal) < 1e-7);
    CHECK(std::abs(w.vertical) < 1e-7);
  }
  CHECK(std::abs(scalar4(s, ChartPoint(4.0, 1.0, 0.0))) < 1e-7);

  const auto f = flat_pair(constant_field(1.0));
  const auto wf = warped4_ricci(f, ChartPoint(0, 0, 0), Vec3(1, 2, 3));
  CHECK(wf.horizontal == 0.0);
  CHECK(wf.vertical == 0.0);
  CHECK(scalar4(f, ChartPoint(0, 0, 0)) == 0.0);

  ScalarField x;
  x.eval = [](const ChartPoint& p) { return p[0]; };
  try {
    scalar4(flat_pair(x), ChartPoint(0, 0, 0));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PotentialZeroAtPoint);
  }
}

TEST_CASE("asymptotic_mass_fit") {
  const auto fit = asymptotic_mass_fit(schwarzschild(1.0), {20, 40, 80});
  CHECK(fit.m == doctest::Approx(1.0).epsilon(0.01));
  // Taylor oracle: h = 1 - 1/t - 1/(2 t^2) + ...
  CHECK(fit.b == doctest::Approx(-0.5).epsilon(0.1));

  const auto flat = asymptotic_mass_fit(flat_pair(constant_field(1.0)), {20, 40, 80});
  CHECK(std::abs(flat.m) < 1e-14);

  try {
    asymptotic_mass_fit(schwarzschild(1.0), {20, 40});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientSamples);
  }
}

TEST_CASE("property: mass fit recovers the mass for a range of masses") {
  for (double m : {0.25, 0.5, 1.0, 2.0}) {
    const auto fit = asymptotic_mass_fit(schwarzschild(m), {40 * m, 80 * m, 160 * m, 320 * m});
    CHECK(fit.m == doctest::Approx(m).epsilon(0.01));
    CHECK(fit.m > 0.0);
  }
}

TEST_CASE("horizon shells: |grad h| tends to the surface gravity 1/(4m)") {
  const auto s = schwarzschild(1.0, true, 1e-9);
  double prev = 1e9;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double v = potential_gradient_norm(s, ChartPoint(2 * (1 + eps), 1.0, 0.0));
    const double err = std::abs(v - 0.25);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}
