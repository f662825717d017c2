#include "curvlab/weyl.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "curvlab/errors.hpp"

namespace curvlab {

namespace {

constexpr double kSupportTol = 1e-12;

using Moments = std::array<double, 6>;  // nu, nu_r, nu_z, nu_rr, nu_rz, nu_zz

// Contribution of a unit point mass at height zeta to the potential jet.
Moments point_kernel(double r, double dz) {
  const double d2 = r * r + dz * dz;
  const double d = std::sqrt(d2);
  const double d3 = d2 * d;
  const double d5 = d3 * d2;
  return {-1.0 / d, r / d3, dz / d3, 1.0 / d3 - 3.0 * r * r / d5, -3.0 * r * dz / d5,
          1.0 / d3 - 3.0 * dz * dz / d5};
}

void add_scaled(Moments& acc, const Moments& v, double w) {
  for (std::size_t i = 0; i < 6; ++i) acc[i] += w * v[i];
}

// Closed form for a rod of constant density on [a, b].
Moments uniform_rod(double a, double b, double level, double r, double z) {
  const double da = std::hypot(r, z - a);
  const double db = std::hypot(r, z - b);
  double I;
  if (z > b)
    I = std::log((z - a + da) / (z - b + db));
  else
    I = std::log((b - z + db) / (a - z + da));
  const double Iz = 1.0 / da - 1.0 / db;
  const double Ir = -((b - z) / db - (a - z) / da) / r;
  const double Izz = -(z - a) / (da * da * da) + (z - b) / (db * db * db);
  const double Irz = -r / (da * da * da) + r / (db * db * db);
  const double Irr = -Ir / r - Izz;
  // nu = -level * I
  return {-level * I, -level * Ir, -level * Iz, -level * Irr, -level * Irz, -level * Izz};
}

// Composite Gauss-Legendre on [lo, hi] with panels graded geometrically
// away from the nearest point `near` (scale r), each panel bisected
// `refine` times.
Moments graded_rod(const Rod& rod, double lo, double hi, double near, double r, double z, int refine) {
  using G = boost::math::quadrature::gauss<double, 20>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  Moments acc{};
  auto panel = [&](double a, double b) {
    const int pieces = 1 << refine;
    const double hstep = (b - a) / pieces;
    for (int q = 0; q < pieces; ++q) {
      const double pa = a + q * hstep;
      const double mid = pa + 0.5 * hstep;
      const double half = 0.5 * hstep;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (int sgn : {-1, 1}) {
          if (x[i] == 0.0 && sgn < 0) continue;
          const double zeta = mid + sgn * half * x[i];
          const double sigma = rod.density(zeta);
          add_scaled(acc, point_kernel(r, z - zeta), sigma * w[i] * half);
        }
      }
    }
  };
  auto sweep = [&](double from, double to) {
    const double len = std::abs(to - from);
    if (len <= 0.0) return;
    const double dir = to > from ? 1.0 : -1.0;
    double edge = 0.0;
    double width = std::max(r, 1e-3 * len);
    while (edge < len) {
      const double next = std::min(len, edge + width);
      const double pa = from + dir * edge, pb = from + dir * next;
      panel(std::min(pa, pb), std::max(pa, pb));
      edge = next;
      width *= 2.0;
    }
  };
  const double c = std::clamp(near, lo, hi);
  sweep(c, lo);
  sweep(c, hi);
  return acc;
}

Moments rod_moments(const Rod& rod, double r, double z) {
  if (rod.uniform) return uniform_rod(rod.z_lo, rod.z_hi, rod.level, r, z);
  std::vector<double> cuts{rod.z_lo};
  for (double k : rod.kinks)
    if (k > rod.z_lo && k < rod.z_hi) cuts.push_back(k);
  cuts.push_back(rod.z_hi);
  std::sort(cuts.begin(), cuts.end());
  auto eval = [&](int refine) {
    Moments acc{};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      add_scaled(acc, graded_rod(rod, cuts[i], cuts[i + 1], z, r, z, refine), 1.0);
    return acc;
  };
  Moments prev = eval(0);
  for (int refine = 1; refine <= 6; ++refine) {
    Moments cur = eval(refine);
    if (std::abs(cur[0] - prev[0]) <= 1e-8 * std::max(1.0, std::abs(cur[0]))) return cur;
    prev = cur;
  }
  throw Error(Errc::ToleranceNotMet, "rod quadrature did not converge");
}

void check_off_support(const RieszMeasure& mu, double r, double z) {
  if (!(r >= 0.0) || !std::isfinite(z)) throw Error(Errc::InvalidArgument, "need r >= 0 and finite z");
  if (r > kSupportTol) return;
  for (const auto& a : mu.atoms)
    if (std::abs(z - a.z) <= kSupportTol) throw Error(Errc::PointOnSupport, "point coincides with an atom");
  for (const auto& rod : mu.rods)
    if (z >= rod.z_lo - kSupportTol && z <= rod.z_hi + kSupportTol)
      throw Error(Errc::PointOnSupport, "point lies on a rod");
}

// True if the closed axis segment [z0, z1] at r = 0 meets the support.
bool axis_segment_hits_support(const RieszMeasure& mu, double z0, double z1) {
  const double lo = std::min(z0, z1), hi = std::max(z0, z1);
  for (const auto& a : mu.atoms)
    if (a.z >= lo && a.z <= hi) return true;
  for (const auto& rod : mu.rods)
    if (rod.z_hi >= lo && rod.z_lo <= hi) return true;
  return false;
}

double integrate_leg(const RieszMeasure& mu, double r0, double z0, double r1, double z1) {
  const double len = std::hypot(r1 - r0, z1 - z0);
  if (len == 0.0) return 0.0;
  const double er = (r1 - r0) / len, ez = (z1 - z0) / len;
  auto integrand = [&](double s) {
    const double r = r0 + er * s;
    const double z = z0 + ez * s;
    if (r <= 0.0) return 0.0;  // nu_r vanishes on the axis
    const PotentialJet j = potential_jet(mu, r, z);
    return er * r * (j.nu_r * j.nu_r - j.nu_z * j.nu_z) + ez * 2.0 * r * j.nu_r * j.nu_z;
  };
  // Break the leg where it passes support features to keep panels smooth.
  std::vector<double> cuts{0.0, len};
  if (ez != 0.0) {
    auto add_cut = [&](double zf) {
      const double s = (zf - z0) / ez;
      if (s > 0.0 && s < len) cuts.push_back(s);
    };
    for (const auto& a : mu.atoms) add_cut(a.z);
    for (const auto& rod : mu.rods) {
      add_cut(rod.z_lo);
      add_cut(rod.z_hi);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1],
                                                                            15, 1e-11, &err);
  }
  return total;
}

}  // namespace

Rod Rod::constant(double z_lo, double z_hi, double level) {
  Rod rod;
  rod.z_lo = z_lo;
  rod.z_hi = z_hi;
  rod.uniform = true;
  rod.level = level;
  rod.density = [level](double) { return level; };
  rod.name = "constant";
  return rod;
}

Rod Rod::inverse_one_plus_abs(double z_lo, double z_hi, double c) {
  Rod rod;
  rod.z_lo = z_lo;
  rod.z_hi = z_hi;
  rod.density = [c](double zeta) { return c / (1.0 + std::abs(zeta)); };
  rod.kinks = {0.0};
  rod.name = "inverse_one_plus_abs";
  return rod;
}

Rod Rod::from_catalog(const std::string& name, double z_lo, double z_hi, double param) {
  if (name == "constant") return constant(z_lo, z_hi, param);
  if (name == "inverse_one_plus_abs") return inverse_one_plus_abs(z_lo, z_hi, param);
  throw Error(Errc::InvalidArgument, "unknown rod density '" + name + "'");
}

double RieszMeasure::total_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  for (const auto& rod : rods) {
    if (rod.uniform) {
      m += rod.level * (rod.z_hi - rod.z_lo);
    } else {
      m += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(rod.density, rod.z_lo, rod.z_hi, 15,
                                                                         1e-12);
    }
  }
  return m;
}

std::pair<double, double> RieszMeasure::support_extent() const {
  if (empty()) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& a : atoms) {
    lo = std::min(lo, a.z);
    hi = std::max(hi, a.z);
  }
  for (const auto& rod : rods) {
    lo = std::min(lo, rod.z_lo);
    hi = std::max(hi, rod.z_hi);
  }
  return {lo, hi};
}

void RieszMeasure::validate() const {
  for (const auto& a : atoms)
    if (!(a.mass > 0.0) || !std::isfinite(a.z))
      throw Error(Errc::InvalidArgument, "atoms need positive mass and finite position");
  for (const auto& rod : rods) {
    if (!(rod.z_lo < rod.z_hi)) throw Error(Errc::InvalidArgument, "rod needs z_lo < z_hi");
    if (!rod.density) throw Error(Errc::InvalidArgument, "rod has no density");
    for (int i = 0; i <= 16; ++i) {
      const double zeta = rod.z_lo + (rod.z_hi - rod.z_lo) * i / 16.0;
      if (!(rod.density(zeta) >= 0.0)) throw Error(Errc::InvalidArgument, "rod density must be nonnegative");
    }
  }
}

RieszMeasure superpose(const std::vector<RieszMeasure>& measures) {
  RieszMeasure out;
  for (const auto& m : measures) {
    out.atoms.insert(out.atoms.end(), m.atoms.begin(), m.atoms.end());
    out.rods.insert(out.rods.end(), m.rods.begin(), m.rods.end());
  }
  return out;
}

PotentialJet potential_jet(const RieszMeasure& mu, double r, double z) {
  check_off_support(mu, r, z);
  Moments acc{};
  for (const auto& a : mu.atoms) add_scaled(acc, point_kernel(r, z - a.z), a.mass);
  for (const auto& rod : mu.rods) {
    if (r <= kSupportTol) {
      // On the axis off the support: only nu and nu_z survive.
      const double a = rod.z_lo, b = rod.z_hi;
      if (rod.uniform) {
        const double I = z > b ? std::log((z - a) / (z - b)) : std::log((b - z) / (a - z));
        const double Iz = 1.0 / std::abs(z - a) - 1.0 / std::abs(z - b);
        acc[0] -= rod.level * I;
        acc[2] -= rod.level * Iz;
      } else {
        auto f0 = [&](double zeta) { return rod.density(zeta) / std::abs(z - zeta); };
        auto f1 = [&](double zeta) {
          const double dz = z - zeta;
          return rod.density(zeta) * dz / std::pow(std::abs(dz), 3);
        };
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        acc[0] -= GK::integrate(f0, a, b, 20, 1e-12);
        acc[2] += GK::integrate(f1, a, b, 20, 1e-12);
      }
      continue;
    }
    add_scaled(acc, rod_moments(rod, r, z), 1.0);
  }
  return {acc[0], acc[1], acc[2], acc[3], acc[4], acc[5]};
}

double potential(const RieszMeasure& mu, double r, double z) { return potential_jet(mu, r, z).nu; }

double default_reference_height(const RieszMeasure& mu) {
  const auto [lo, hi] = mu.support_extent();
  return hi + std::max(1.0, hi - lo);
}

double lambda_along(const RieszMeasure& mu, const std::vector<std::pair<double, double>>& path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto [r0, z0] = path[i];
    const auto [r1, z1] = path[i + 1];
    if (r0 <= 0.0 && r1 <= 0.0) {
      if (axis_segment_hits_support(mu, z0, z1))
        throw Error(Errc::PathCrossesSupport, "axis leg passes through the support");
      continue;  // integrand vanishes on the axis
    }
    total += integrate_leg(mu, r0, z0, r1, z1);
  }
  return total;
}

double lambda_field(const RieszMeasure& mu, double r, double z, double z_ref) {
  check_off_support(mu, r, z);
  if (axis_segment_hits_support(mu, z_ref, z_ref))
    throw Error(Errc::PathCrossesSupport, "reference point lies on the support");
  if (r <= kSupportTol) {
    if (axis_segment_hits_support(mu, z, z_ref))
      throw Error(Errc::PathCrossesSupport, "axis path to the reference crosses the support");
    return 0.0;
  }
  if (!axis_segment_hits_support(mu, z, z_ref)) return lambda_along(mu, {{0.0, z_ref}, {0.0, z}, {r, z}});
  return lambda_along(mu, {{0.0, z_ref}, {r, z_ref}, {r, z}});
}

double lambda_field(const RieszMeasure& mu, double r, double z) {
  return lambda_field(mu, r, z, default_reference_height(mu));
}

double curzon_lambda(double m, double r, double z) {
  const double t2 = r * r + z * z;
  return -m * m * r * r / (2.0 * t2 * t2);
}

double schwarzschild_rod_potential(double m, double r, double z) {
  const double rp = std::hypot(r, z + m);
  const double rm = std::hypot(r, z - m);
  return 0.5 * std::log((rp + rm - 2.0 * m) / (rp + rm + 2.0 * m));
}

double schwarzschild_rod_lambda(double m, double r, double z) {
  const double rp = std::hypot(r, z + m);
  const double rm = std::hypot(r, z - m);
  const double s = rp + rm;
  return 0.5 * std::log((s * s - 4.0 * m * m) / (4.0 * rp * rm));
}

WeylSolution build(const RieszMeasure& mu, const WeylBox& box) {
  mu.validate();
  if (!(box.r_lo < box.r_hi) || !(box.z_lo < box.z_hi))
    throw Error(Errc::InvalidArgument, "Weyl box needs r_lo < r_hi and z_lo < z_hi");
  const double scale = std::max(box.r_hi, box.z_hi - box.z_lo);
  if (box.r_lo < 1e-3 * scale)
    throw Error(Errc::DomainTouchesSupport, "Weyl box must keep away from the axis (r_lo >= 1e-3 scale)");

  WeylSolution sol;
  sol.measure = mu;
  sol.box = box;
  sol.z_ref = default_reference_height(mu);
  const RieszMeasure m = mu;
  const double zr = sol.z_ref;
  sol.nu = [m](double r, double z) { return potential(m, r, z); };
  sol.lambda = [m, zr](double r, double z) { return lambda_field(m, r, z, zr); };

  auto& g = sol.pair.metric;
  g.domain = ChartDomain::box(Vec3(box.r_lo, box.z_lo, -1e300), Vec3(box.r_hi, box.z_hi, 1e300));
  g.eval = [m, zr](const ChartPoint& p) {
    const double r = p[0], z = p[1];
    const double nu = potential(m, r, z);
    const double lam = lambda_field(m, r, z, zr);
    const double E = std::exp(2.0 * (lam - nu));
    Mat3 out = Mat3::Zero();
    out(0, 0) = E;
    out(1, 1) = E;
    out(2, 2) = std::exp(-2.0 * nu) * r * r;
    return out;
  };
  // First and second partials from the potential jet; lambda's partials
  // follow from the integrability equations.
  struct Local {
    double E, F;
    std::array<double, 2> a, b;        // first partials of log E and log F
    std::array<double, 3> aa, bb;      // second partials (rr, rz, zz)
  };
  auto local = [m, zr](double r, double z) {
    const PotentialJet j = potential_jet(m, r, z);
    const double lam = lambda_field(m, r, z, zr);
    const double lr = r * (j.nu_r * j.nu_r - j.nu_z * j.nu_z);
    const double lz = 2.0 * r * j.nu_r * j.nu_z;
    const double lrr = (j.nu_r * j.nu_r - j.nu_z * j.nu_z) + 2.0 * r * (j.nu_r * j.nu_rr - j.nu_z * j.nu_rz);
    const double lrz = 2.0 * r * (j.nu_r * j.nu_rz - j.nu_z * j.nu_zz);
    const double lzz = 2.0 * r * (j.nu_rz * j.nu_z + j.nu_r * j.nu_zz);
    Local L;
    L.E = std::exp(2.0 * (lam - j.nu));
    L.F = std::exp(-2.0 * j.nu) * r * r;
    L.a = {2.0 * (lr - j.nu_r), 2.0 * (lz - j.nu_z)};
    L.aa = {2.0 * (lrr - j.nu_rr), 2.0 * (lrz - j.nu_rz), 2.0 * (lzz - j.nu_zz)};
    L.b = {-2.0 * j.nu_r + 2.0 / r, -2.0 * j.nu_z};
    L.bb = {-2.0 * j.nu_rr - 2.0 / (r * r), -2.0 * j.nu_rz, -2.0 * j.nu_zz};
    return L;
  };
  g.d1 = [local](const ChartPoint& p) {
    const Local L = local(p[0], p[1]);
    Tensor3 d = Tensor3::zero();
    for (int k = 0; k < 2; ++k) {
      d[k](0, 0) = L.E * L.a[static_cast<std::size_t>(k)];
      d[k](1, 1) = d[k](0, 0);
      d[k](2, 2) = L.F * L.b[static_cast<std::size_t>(k)];
    }
    return d;
  };
  g.d2 = [local](const ChartPoint& p) {
    const Local L = local(p[0], p[1]);
    Tensor4 d = Tensor4::zero();
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        const auto kk = static_cast<std::size_t>(k), ll = static_cast<std::size_t>(l);
        const std::size_t idx = kk + ll;  // rr -> 0, rz -> 1, zz -> 2
        d[k][l](0, 0) = L.E * (L.a[kk] * L.a[ll] + L.aa[idx]);
        d[k][l](1, 1) = d[k][l](0, 0);
        d[k][l](2, 2) = L.F * (L.b[kk] * L.b[ll] + L.bb[idx]);
      }
    return d;
  };

  auto& h = sol.pair.potential;
  h.eval = [m](const ChartPoint& p) { return std::exp(potential(m, p[0], p[1])); };
  h.grad = [m](const ChartPoint& p) {
    const PotentialJet j = potential_jet(m, p[0], p[1]);
    const double e = std::exp(j.nu);
    return Vec3(e * j.nu_r, e * j.nu_z, 0.0);
  };
  h.hess = [m](const ChartPoint& p) {
    const PotentialJet j = potential_jet(m, p[0], p[1]);
    const double e = std::exp(j.nu);
    Mat3 out = Mat3::Zero();
    out(0, 0) = e * (j.nu_r * j.nu_r + j.nu_rr);
    out(0, 1) = e * (j.nu_r * j.nu_z + j.nu_rz);
    out(1, 0) = out(0, 1);
    out(1, 1) = e * (j.nu_z * j.nu_z + j.nu_zz);
    return out;
  };
  sol.pair.ray = [](double t) { return ChartPoint(t, 0.0, 0.0); };
  sol.pair.label = "weyl";
  return sol;
}

}  // namespace curvlab
