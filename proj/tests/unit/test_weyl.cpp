#include <doctest.h>

#include <cmath>
#include <array>
#include <random>

#include "curvlab/errors.hpp"
#include "curvlab/weyl.hpp"

using namespace curvlab;

namespace {

RieszMeasure atom(double z, double m) {
  RieszMeasure mu;
  mu.atoms.push_back({z, m});
  return mu;
}

RieszMeasure rod(double lo, double hi, double level) {
  RieszMeasure mu;
  mu.rods.push_back(Rod::constant(lo, hi, level));
  return mu;
}

std::vector<ChartPoint> off_axis_grid(const WeylBox& b, int n) {
  const double e = 0.02;
  return product_grid(Vec3(b.r_lo + e, b.z_lo + e, 0), Vec3(b.r_hi - e, b.z_hi - e, 0), {n, n, 1});
}

}  // namespace

TEST_CASE("potential: Curzon atom and Schwarzschild rod closed forms") {
  const double m = 1.3;
  for (double r : {0.2, 1.0, 3.0})
    for (double z : {-2.0, 0.0, 0.7})
      CHECK(potential(atom(0.0, m), r, z) == doctest::Approx(-m / std::hypot(r, z)).epsilon(1e-13));

  for (double r : {0.01, 0.5, 2.0})
    for (double z : {-3.0, -0.5, 0.0, 0.9, 4.0})
      CHECK(potential(rod(-1, 1, 0.5), r, z) ==
            doctest::Approx(schwarzschild_rod_potential(1.0, r, z)).epsilon(1e-11));
}

TEST_CASE("potential: quadrature path agrees with the uniform closed form") {
  Rod q = Rod::constant(-1, 1, 0.5);
  q.uniform = false;  // force the graded Gauss-Legendre route
  RieszMeasure mq;
  mq.rods.push_back(q);
  for (double r : {0.01, 0.3, 2.0})
    for (double z : {-1.5, -0.2, 0.99, 3.0}) {
      const auto a = potential_jet(mq, r, z);
      const auto b = potential_jet(rod(-1, 1, 0.5), r, z);
      CHECK(a.nu == doctest::Approx(b.nu).epsilon(1e-8));
      CHECK(a.nu_r == doctest::Approx(b.nu_r).epsilon(1e-6));
      CHECK(a.nu_z == doctest::Approx(b.nu_z).epsilon(1e-6));
    }
}

TEST_CASE("potential: superposition is linear and the empty measure is neutral") {
  const auto a = rod(-3, -1, 0.5);
  const auto b = rod(1, 2, 0.3);
  const auto both = superpose({a, b});
  const auto two_atoms = superpose({atom(-1, 0.5), atom(2, 0.7)});
  for (double r : {0.1, 1.0})
    for (double z : {-2.0, 0.0, 1.5}) {
      CHECK(potential(both, r, z) == doctest::Approx(potential(a, r, z) + potential(b, r, z)));
      CHECK(potential(two_atoms, r, z) ==
            doctest::Approx(-0.5 / std::hypot(r, z + 1) - 0.7 / std::hypot(r, z - 2)));
      CHECK(potential(superpose({a, RieszMeasure{}}), r, z) == potential(a, r, z));
    }
}

TEST_CASE("potential: on-support points are rejected") {
  try {
    potential(rod(-1, 1, 0.5), 0.0, 0.2);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PointOnSupport);
  }
  CHECK_THROWS_AS(potential(atom(0.5, 1.0), 0.0, 0.5), Error);
}

TEST_CASE("potential jet matches finite differences of nu") {
  const auto mu = superpose({rod(-1, 1, 0.5), atom(2.5, 0.4)});
  const double h = 1e-5;
  for (double r : {0.3, 1.2})
    for (double z : {-0.5, 1.7}) {
      const auto j = potential_jet(mu, r, z);
      CHECK(j.nu_r == doctest::Approx((potential(mu, r + h, z) - potential(mu, r - h, z)) / (2 * h)).epsilon(1e-7));
      CHECK(j.nu_z == doctest::Approx((potential(mu, r, z + h) - potential(mu, r, z - h)) / (2 * h)).epsilon(1e-7));
      const auto jr = potential_jet(mu, r + h, z), jl = potential_jet(mu, r - h, z);
      const auto ju = potential_jet(mu, r, z + h), jd = potential_jet(mu, r, z - h);
      CHECK(j.nu_rr == doctest::Approx((jr.nu_r - jl.nu_r) / (2 * h)).epsilon(1e-6));
      CHECK(j.nu_rz == doctest::Approx((ju.nu_r - jd.nu_r) / (2 * h)).epsilon(1e-6));
      CHECK(j.nu_zz == doctest::Approx((ju.nu_z - jd.nu_z) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("property: nu is harmonic in flat 3-space off the support") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> R(0.2, 3.0), Z(-3.0, 3.0);
  const auto mu = superpose({rod(-1, 1, 0.5), atom(2.0, 0.3)});
  RieszMeasure nonuni;
  nonuni.rods.push_back(Rod::inverse_one_plus_abs(-2, 2));
  for (int i = 0; i < 20; ++i) {
    const double r = R(rng), z = Z(rng);
    const double h = 1e-3;
    for (const RieszMeasure* m : std::array<const RieszMeasure*, 2>{&mu, &nonuni}) {
      auto nu = [&](double rr, double zz) { return potential(*m, rr, zz); };
      const double nrr = (nu(r + h, z) - 2 * nu(r, z) + nu(r - h, z)) / (h * h);
      const double nzz = (nu(r, z + h) - 2 * nu(r, z) + nu(r, z - h)) / (h * h);
      const double nr = (nu(r + h, z) - nu(r - h, z)) / (2 * h);
      CHECK(std::abs(nrr + nr / r + nzz) < 1e-4);
    }
  }
}

TEST_CASE("property: nu < 0 off the support and tends to 0 along rays") {
  const auto mu = superpose({rod(-1, 1, 0.5), atom(3.0, 0.2)});
  for (double ang : {0.1, 0.8, 1.5, 2.4, 3.0}) {
    double prev = -1e9;
    for (double t : {5.0, 10.0, 100.0, 1e4}) {
      const double v = potential(mu, t * std::sin(ang), t * std::cos(ang));
      CHECK(v < 0.0);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(prev > -1e-3);
  }
}

TEST_CASE("lambda: Curzon closed form and the outer axis") {
  const double m = 1.0;
  const auto mu = atom(0.0, m);
  for (double r : {0.3, 1.0, 2.5})
    for (double z : {-2.0, -0.4, 0.0, 1.1}) {
      const double lam = lambda_field(mu, r, z);
      CHECK(lam == doctest::Approx(curzon_lambda(m, r, z)).epsilon(1e-8));
    }
  CHECK(lambda_field(rod(-1, 1, 0.5), 0.0, 3.0) == 0.0);
  CHECK(std::abs(lambda_field(rod(-1, 1, 0.5), 1e-9, 2.0)) < 1e-15);
}

TEST_CASE("lambda: Schwarzschild rod closed form") {
  const auto mu = rod(-1, 1, 0.5);
  for (double r : {0.1, 0.8, 2.0})
    for (double z : {-2.5, -0.3, 0.5, 1.8})
      CHECK(lambda_field(mu, r, z) == doctest::Approx(schwarzschild_rod_lambda(1.0, r, z)).epsilon(1e-8));
}

TEST_CASE("lambda: loop integral around an off-support rectangle vanishes") {
  const auto mu = rod(-1, 1, 0.5);
  const double v = lambda_along(mu, {{0.2, -1.5}, {2.0, -1.5}, {2.0, 1.5}, {0.2, 1.5}, {0.2, -1.5}});
  CHECK(std::abs(v) < 1e-10);
  try {
    lambda_along(mu, {{0.0, 3.0}, {0.0, -3.0}});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PathCrossesSupport);
  }
}

TEST_CASE("property: lambda is path independent") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> R(0.1, 3.0), Z(-3.0, 3.0), W(0.5, 4.0);
  const auto mu = superpose({rod(-1, 0.5, 0.5), atom(1.5, 0.3)});
  const double zr = default_reference_height(mu);
  for (int i = 0; i < 20; ++i) {
    const double r = R(rng), z = Z(rng), rw = W(rng);
    const double a = lambda_field(mu, r, z, zr);
    const double b = lambda_along(mu, {{0.0, zr}, {rw, zr}, {rw, z}, {r, z}});
    CHECK(std::abs(a - b) < 1e-6);
  }
}

TEST_CASE("build: Curzon residual, rod mass, zero-mass limit") {
  const WeylBox box{0.5, 3.0, -2.0, 2.0};
  const auto curzon = build(atom(0.0, 1.0), box);
  const auto rc = static_residual(curzon.pair, off_axis_grid(box, 5));
  CHECK(rc.sup_tensor_residual < 1e-4);
  CHECK(rc.sup_laplacian_residual < 1e-4);

  const auto rodsol = build(rod(-1, 1, 0.5), box);
  const auto fit = asymptotic_mass_fit(rodsol.pair, {20, 40, 80});
  CHECK(fit.m == doctest::Approx(1.0).epsilon(0.02));
  const auto half = build(rod(-0.5, 0.5, 0.5), box);
  CHECK(asymptotic_mass_fit(half.pair, {20, 40, 80}).m == doctest::Approx(0.5).epsilon(0.02));

  const auto tiny = build(atom(0.0, 1e-9), box);
  const Mat3 g = tiny.pair.metric.eval(ChartPoint(1.0, 0.5, 0.0));
  CHECK(std::abs(g(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(g(2, 2) - 1.0) < 1e-8);
  CHECK(std::abs(tiny.nu(1.0, 0.5)) < 1e-8);
  CHECK(std::abs(tiny.lambda(1.0, 0.5)) < 1e-15);
}

TEST_CASE("build: analytic metric derivatives agree with finite differences") {
  const WeylBox box{0.5, 3.0, -2.0, 2.0};
  const auto sol = build(superpose({rod(-1, 1, 0.5), atom(2.5, 0.2)}), box);
  const auto& g = sol.pair.metric;
  const ChartPoint p(1.1, 0.3, 0.0);
  const double h = 1e-5;
  const Tensor3 d = g.d1(p);
  const Tensor4 dd = g.d2(p);
  for (int k = 0; k < 2; ++k) {
    ChartPoint e = ChartPoint::Zero();
    e[k] = h;
    const Mat3 fd = (g.eval(p + e) - g.eval(p - e)) / (2 * h);
    CHECK((fd - d[k]).cwiseAbs().maxCoeff() < 1e-6);
    const Tensor3 a = g.d1(p + e), b = g.d1(p - e);
    for (int l = 0; l < 3; ++l) CHECK(((a[l] - b[l]) / (2 * h) - dd[k][l]).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("build: rejects boxes touching the axis; two rods have bounded curvature") {
  try {
    build(rod(-1, 1, 0.5), WeylBox{0.0, 2.0, -1.0, 1.0});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DomainTouchesSupport);
  }
  const WeylBox box{0.3, 3.0, -4.0, 4.0};
  const auto sol = build(superpose({rod(-3, -1, 0.5), rod(1, 3, 0.5)}), box);
  const auto grid = off_axis_grid(box, 4);
  double sup = 0.0;
  for (const auto& p : grid) {
    const auto pg = geometry_at(sol.pair.metric, p, {});
    sup = std::max(sup, g_norm(pg.jet.ginv, pg.ric));
  }
  CHECK(std::isfinite(sup));
  CHECK(sup < 1e3);
  const auto rr = static_residual(sol.pair, grid);
  CHECK(rr.sup_tensor_residual < 1e-4);
}

TEST_CASE("property: positive measures have positive fitted mass") {
  RieszMeasure nonuni;
  nonuni.rods.push_back(Rod::inverse_one_plus_abs(-1, 1));
  for (const auto& mu : {atom(0, 0.5), rod(-1, 1, 0.5), superpose({rod(-3, -1, 0.5), rod(1, 3, 0.5)}), nonuni}) {
    const auto sol = build(mu, WeylBox{});
    const auto fit = asymptotic_mass_fit(sol.pair, {50, 100, 200, 400});
    CHECK(fit.m > -1e-6);
    CHECK(fit.m == doctest::Approx(mu.total_mass()).epsilon(0.02));
  }
}
