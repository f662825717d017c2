#include <doctest.h>

#include <cmath>
#include <random>

#include "curvlab/chart_geometry.hpp"
#include "curvlab/errors.hpp"
#include "test_metrics.hpp"

using namespace curvlab;
using testmetrics::diag;
using testmetrics::kPi;

namespace {

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

ScalarField scalar_from(std::function<double(const ChartPoint&)> f) {
  ScalarField s;
  s.eval = std::move(f);
  return s;
}

testmetrics::Profile bumpy_profile(double amp) {
  return {[amp](double t) { return 1.0 + amp * std::cos(t); },
          [amp](double t) { return -amp * std::sin(t); },
          [amp](double t) { return -amp * std::cos(t); }};
}

}  // namespace

TEST_CASE("christoffel: flat metric has vanishing symbols") {
  const auto g = flat_metric();
  const Tensor3 gam = christoffel(g, ChartPoint(0.3, -1.2, 4.0));
  for (int k = 0; k < 3; ++k) CHECK(max_abs(gam[k]) == 0.0);
}

TEST_CASE("christoffel: sphere block is symmetric at the equator") {
  const auto g = testmetrics::sphere3();
  const Tensor3 gam = christoffel(g, ChartPoint(1.0, kPi / 2, 0.2));
  CHECK(std::abs(gam[1](2, 2)) < 1e-8);
  for (int k = 0; k < 3; ++k) CHECK(max_abs(gam[k] - gam[k].transpose()) == 0.0);
}

TEST_CASE("christoffel: Schwarzschild radial symbol") {
  const double m = 1.0, t = 4.0;
  const Tensor3 gam = christoffel(testmetrics::schwarzschild_fd(m), ChartPoint(t, 1.0, 0.0));
  const double oracle = -(m / (t * t)) / (1.0 - 2.0 * m / t);
  CHECK(gam[0](0, 0) == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(oracle == doctest::Approx(-0.125));
}

TEST_CASE("christoffel: boundary margin and positive definiteness are enforced") {
  const auto g = testmetrics::sphere3();
  CHECK_THROWS_AS(christoffel(g, ChartPoint(1e-5, 1.0, 0.0)), Error);
  try {
    christoffel(g, ChartPoint(1e-5, 1.0, 0.0));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PointTooCloseToBoundary);
  }
  MetricField bad;
  bad.eval = [](const ChartPoint&) { return diag(1.0, -1.0, 1.0); };
  try {
    christoffel(bad, ChartPoint(0, 0, 0));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MetricNotPositiveDefinite);
  }
}

TEST_CASE("ricci: constant curvature models") {
  CHECK(max_abs(ricci(flat_metric(), ChartPoint(1, 2, 3))) == 0.0);

  const DiffScheme sc{1e-3, 2, false};
  const auto s3 = testmetrics::sphere3();
  const ChartPoint p(1.1, 0.8, 0.3);
  const Mat3 r = ricci(s3, p, sc);
  const Mat3 g = s3.eval(p);
  CHECK(max_abs(r - 2.0 * g) / max_abs(g) < 10.0 * sc.step * sc.step);

  const auto h3 = testmetrics::poincare_ball();
  const ChartPoint q(0.1, -0.2, 0.15);
  const Mat3 rh = ricci(h3, q, sc);
  const Mat3 gh = h3.eval(q);
  CHECK(max_abs(rh + 2.0 * gh) / max_abs(gh) < 1e-5);
}

TEST_CASE("scalar_and_traceless: models") {
  const auto flat = scalar_and_traceless(flat_metric(), ChartPoint(0, 0, 0));
  CHECK(flat.s == 0.0);
  CHECK(max_abs(flat.z) == 0.0);

  const auto s3 = scalar_and_traceless(testmetrics::sphere3(), ChartPoint(1.1, 0.8, 0.3),
                                       DiffScheme{1e-3, 2, false});
  CHECK(s3.s == doctest::Approx(6.0).epsilon(1e-5));
  CHECK(max_abs(s3.z) < 1e-5);

  const auto schw = scalar_and_traceless(testmetrics::schwarzschild_fd(1.0), ChartPoint(5.0, 1.2, 0),
                                         DiffScheme{1e-3, 4, false});
  CHECK(std::abs(schw.s) < 1e-6);
}

TEST_CASE("hessian and laplacian") {
  const auto flat = flat_metric();
  CHECK(max_abs(hessian(flat, constant_field(3.0), ChartPoint(1, 1, 1))) == 0.0);

  auto q = scalar_from([](const ChartPoint& p) { return 0.5 * p.squaredNorm(); });
  const Mat3 h = hessian(flat, q, ChartPoint(0.4, -0.3, 2.0));
  CHECK(max_abs(h - Mat3::Identity()) < 1e-6);
  CHECK(laplacian(flat, q, ChartPoint(0.4, -0.3, 2.0)) == doctest::Approx(3.0).epsilon(1e-6));

  auto pot = scalar_from([](const ChartPoint& p) { return std::sqrt(1.0 - 2.0 / p[0]); });
  const double lap = laplacian(testmetrics::schwarzschild_fd(1.0), pot, ChartPoint(4.0, 1.0, 0.0),
                               DiffScheme{1e-3, 4, false});
  CHECK(std::abs(lap) < 1e-8);
}

TEST_CASE("divergence") {
  const auto flat = flat_metric();
  CHECK(divergence(flat, constant_tensor(diag(1, 2, 3)), ChartPoint(0, 0, 0)).norm() == 0.0);

  // Ricci of the product cylinder is parallel: diag(1, sin^2 theta, 0).
  const auto cyl = testmetrics::cylinder();
  SymTensorField ric;
  ric.eval = [](const ChartPoint& p) {
    const double s = std::sin(p[0]);
    return diag(1.0, s * s, 0.0);
  };
  CHECK(divergence(cyl, ric, ChartPoint(1.0, 0.5, 0.2)).norm() < 1e-7);

  // alpha = x1 * I: delta(alpha)_j = -d_j x1.
  SymTensorField lin;
  lin.eval = [](const ChartPoint& p) { return (p[0] * Mat3::Identity()).eval(); };
  const Vec3 d = divergence(flat, lin, ChartPoint(0.7, 0.1, -0.2));
  CHECK((d - Vec3(-1.0, 0.0, 0.0)).norm() < 1e-9);
}

TEST_CASE("L_apply") {
  CHECK(L_apply(flat_metric(), constant_tensor(Mat3::Identity()), ChartPoint(0, 0, 0)) == 0.0);

  const auto cyl = testmetrics::cylinder();
  const double v = L_apply(cyl, metric_multiple(cyl, 1.0), ChartPoint(1.0, 0.3, 0.0),
                           DiffScheme{1e-3, 4, false});
  CHECK(v == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("L_star") {
  CHECK(max_abs(L_star(flat_metric(), constant_field(1.0), ChartPoint(0, 0, 0))) == 0.0);

  auto pot = scalar_from([](const ChartPoint& p) { return std::sqrt(1.0 - 2.0 / p[0]); });
  const Mat3 ls = L_star(testmetrics::schwarzschild_fd(1.0), pot, ChartPoint(3.5, 1.1, 0.0),
                         DiffScheme{1e-3, 4, false});
  CHECK(max_abs(ls) < 1e-7);

  const auto cyl = testmetrics::cylinder();
  const ChartPoint p(1.0, 0.0, 0.0);
  const Mat3 lc = L_star(cyl, constant_field(2.5), p, DiffScheme{1e-3, 4, false});
  CHECK(max_abs(lc + 2.5 * diag(1.0, std::pow(std::sin(1.0), 2), 0.0)) < 1e-6);
}

TEST_CASE("LL_star: constant fields and composition") {
  CHECK(LL_star(flat_metric(), constant_field(4.0), ChartPoint(0, 0, 0)) == 0.0);

  const auto cyl = testmetrics::cylinder();
  // Finite differences only: the Laplacian of s is a nested second
  // difference, so rounding noise is about eps / step^4.
  CHECK(LL_star(cyl, constant_field(1.5), ChartPoint(1.2, 0.0, 0.0)) ==
        doctest::Approx(3.0).epsilon(5e-4));

  // v = 1 on a closed warped metric: closed form versus L(L*(1)).
  const auto w = testmetrics::warped(bumpy_profile(0.3));
  const DiffScheme sc{1e-3, 4, false};
  const ChartPoint p(0.7, 1.3, 0.0);
  const double direct = LL_star(w, constant_field(1.0), p, sc);
  const double composed = L_apply(w, L_star_field(w, constant_field(1.0), sc), p, sc);
  CHECK(direct == doctest::Approx(composed).epsilon(1e-5));
}

TEST_CASE("LL_star: non-constant v agrees with L(L*v)") {
  const auto w = testmetrics::warped(bumpy_profile(0.2));
  ScalarField v;
  v.eval = [](const ChartPoint& p) { return std::cos(p[0]) + 0.3 * std::cos(p[1]); };
  v.grad = [](const ChartPoint& p) { return Vec3(-std::sin(p[0]), -0.3 * std::sin(p[1]), 0.0); };
  v.hess = [](const ChartPoint& p) { return diag(-std::cos(p[0]), -0.3 * std::cos(p[1]), 0.0); };
  const ChartPoint p(0.4, 1.1, 0.0);
  const DiffScheme sc{2e-3, 4, false};
  const double direct = LL_star(w, v, p, sc);
  const double composed = L_apply(w, L_star_field(w, v, sc), p, sc);
  CHECK(direct == doctest::Approx(composed).epsilon(1e-4));
}

TEST_CASE("property: trace identity tr L*h = -2 Lap h - s h") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto w = testmetrics::warped(bumpy_profile(0.25));
  for (int trial = 0; trial < 10; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng);
    ScalarField h;
    h.eval = [=](const ChartPoint& p) {
      return a + b * std::sin(p[0]) + c * std::cos(2 * p[1]);
    };
    const ChartPoint p(2.0 * U(rng), 1.5 + 0.5 * U(rng), U(rng));
    const DiffScheme sc{1e-3, 4, false};
    const Mat3 ls = L_star(w, h, p, sc);
    const auto geo = geometry_at(w, p, sc);
    const double lhs = g_trace(geo.jet.ginv, ls);
    const double rhs = -2.0 * laplacian(w, h, p, sc) - geo.scal * h.eval(p);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-7));
  }
}

TEST_CASE("property: adjointness of L and L* on a periodic warped product") {
  // Closed manifold S^1(length 2 pi) x S^2 with SO(3)-invariant data; the
  // t-integral is a periodic trapezoid sum, the sphere factor contributes
  // its area 4 pi f^2 at theta = pi/2.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto prof = bumpy_profile(0.2);
  const auto w = testmetrics::warped(prof);
  const DiffScheme sc{1e-3, 4, false};
  for (int trial = 0; trial < 3; ++trial) {
    const double h1 = U(rng), h2 = U(rng), a1 = U(rng), b1 = U(rng), a0 = U(rng);
    ScalarField h;
    h.eval = [=](const ChartPoint& p) { return 1.0 + h1 * std::cos(p[0]) + h2 * std::sin(2 * p[0]); };
    h.grad = [=](const ChartPoint& p) {
      return Vec3(-h1 * std::sin(p[0]) + 2 * h2 * std::cos(2 * p[0]), 0, 0);
    };
    h.hess = [=](const ChartPoint& p) {
      return diag(-h1 * std::cos(p[0]) - 4 * h2 * std::sin(2 * p[0]), 0, 0);
    };
    // alpha = A(t) dt^2 + B(t) f^2 g_S2
    auto A = [=](double t) { return a0 + a1 * std::cos(t); };
    auto dA = [=](double t) { return -a1 * std::sin(t); };
    auto B = [=](double t) { return 0.5 + b1 * std::sin(t); };
    auto dB = [=](double t) { return b1 * std::cos(t); };
    SymTensorField alpha;
    alpha.eval = [=](const ChartPoint& p) {
      const Mat3 g = w.eval(p);
      return diag(A(p[0]), B(p[0]) * g(1, 1), B(p[0]) * g(2, 2));
    };
    alpha.d1 = [=](const ChartPoint& p) {
      const Mat3 g = w.eval(p);
      const Tensor3 dg = w.d1(p);
      Tensor3 t = Tensor3::zero();
      t[0] = diag(dA(p[0]), dB(p[0]) * g(1, 1) + B(p[0]) * dg[0](1, 1),
                  dB(p[0]) * g(2, 2) + B(p[0]) * dg[0](2, 2));
      t[1] = diag(0.0, 0.0, B(p[0]) * dg[1](2, 2));
      return t;
    };
    const int n = 48;
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < n; ++i) {
      const ChartPoint p(2 * kPi * i / n, kPi / 2, 0.0);
      const double f = prof.f(p[0]);
      const double dv = 4 * kPi * f * f * (2 * kPi / n);
      const Mat3 gi = w.eval(p).inverse();
      lhs += g_inner(gi, L_star(w, h, p, sc), alpha.eval(p)) * dv;
      rhs += h.eval(p) * L_apply(w, alpha, p, sc) * dv;
    }
    CHECK(std::abs(lhs - rhs) < 1e-6 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("property: halving the step reduces curvature error by at least 3") {
  const auto s3 = testmetrics::sphere3();
  const ChartPoint p(1.0, 1.2, 0.0);
  auto err = [&](double step) {
    const auto st = scalar_and_traceless(s3, p, DiffScheme{step, 2, false});
    return std::abs(st.s - 6.0);
  };
  CHECK(err(1e-2) / err(5e-3) >= 3.0);
  CHECK(err(2e-2) / err(1e-2) >= 3.0);
}

TEST_CASE("property: scaling covariance") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0.5, 3.0);
  const auto w = testmetrics::warped(bumpy_profile(0.3));
  const ChartPoint p(0.9, 1.0, 0.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double tau = U(rng);
    const auto a = scalar_and_traceless(w, p);
    const auto b = scalar_and_traceless(scaled_metric(w, tau), p);
    CHECK(b.s == doctest::Approx(a.s / (tau * tau)).epsilon(1e-7));
    CHECK(max_abs(b.z - a.z) < 1e-7);
  }
}
