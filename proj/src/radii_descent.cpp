#include "curvlab/radii_descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>
#include <string>
#include <unordered_map>

#include "curvlab/errors.hpp"

namespace curvlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOmega3 = 4.0 * kPi / 3.0;

// Signed-free distance to the horizon along a radial line, area radius t >= 2m.
double horizon_distance(double m, double t) {
  if (t <= 2.0 * m) return 0.0;
  return std::sqrt(t * (t - 2.0 * m)) +
         2.0 * m * std::log((std::sqrt(t) + std::sqrt(t - 2.0 * m)) / std::sqrt(2.0 * m));
}

double area_from_distance(double m, double sigma) {
  sigma = std::abs(sigma);
  if (sigma == 0.0) return 2.0 * m;
  // horizon_distance(t) >= t - 2m brackets the root
  double lo = 2.0 * m, hi = 2.0 * m + sigma;
  double t = std::min(hi, 2.0 * m + sigma * sigma / (8.0 * m));
  for (int it = 0; it < 100; ++it) {
    double g = horizon_distance(m, t) - sigma;
    if (g > 0) hi = t; else lo = t;
    double dg = 1.0 / std::sqrt(std::max(1e-300, 1.0 - 2.0 * m / t));
    double tn = t - g / dg;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (std::abs(tn - t) <= 1e-15 * std::max(1.0, t)) { t = tn; break; }
    t = tn;
  }
  return t;
}

}  // namespace

double SymmetricSpaceModel::weight(double x, double phi) const {
  double a = lapse(x), f = radius(x);
  return 2.0 * kPi * a * f * f * std::sin(phi);
}

SymmetricSpaceModel flat_model(double extent) {
  if (!(extent > 0)) throw Error(Errc::InvalidArgument, "flat extent must be positive");
  SymmetricSpaceModel m;
  m.kind = "flat";
  m.lower_boundary = false;
  m.x_min = 0.0;
  m.x_max = extent;
  m.lapse = [](double) { return 1.0; };
  m.radius = [](double x) { return x; };
  m.curvature2 = [](double) { return 0.0; };
  m.scalar = [](double) { return 0.0; };
  m.potential = [](double) { return 1.0; };
  m.area_radius = [](double x) { return x; };
  m.coordinate_of = [](double t) { return t; };
  return m;
}

SymmetricSpaceModel round_cylinder_model(double b, double period) {
  if (!(b > 0) || !(period > 0)) throw Error(Errc::InvalidArgument, "cylinder radii must be positive");
  SymmetricSpaceModel m;
  m.kind = "round_cylinder";
  m.parameter = b;
  m.periodic = true;
  m.lower_boundary = m.upper_boundary = false;
  m.x_min = 0.0;
  m.x_max = period;
  m.lapse = [](double) { return 1.0; };
  m.radius = [b](double) { return b; };
  m.curvature2 = [b](double) { return 2.0 / std::pow(b, 4); };
  m.scalar = [b](double) { return 2.0 / (b * b); };
  m.potential = [](double) { return 1.0; };
  m.area_radius = [](double x) { return x; };
  m.coordinate_of = [](double t) { return t; };
  return m;
}

SymmetricSpaceModel schwarzschild_model(double mass, double t_max, double inner_fraction) {
  if (!(mass > 0)) throw Error(Errc::NonPositiveMass, "schwarzschild mass must be positive");
  if (!(t_max > 2.0 * mass)) throw Error(Errc::InvalidArgument, "t_max must exceed 2m");
  if (!(inner_fraction > 0 && inner_fraction <= 1))
    throw Error(Errc::InvalidArgument, "inner_fraction must lie in (0, 1]");
  SymmetricSpaceModel m;
  m.kind = "schwarzschild";
  m.parameter = mass;
  double smax = horizon_distance(mass, t_max);
  m.x_min = -inner_fraction * smax;
  m.x_max = smax;
  m.lapse = [](double) { return 1.0; };
  m.radius = [mass](double x) { return area_from_distance(mass, x); };
  m.curvature2 = [mass](double x) {
    double t = area_from_distance(mass, x);
    return 6.0 * mass * mass / std::pow(t, 6);
  };
  m.scalar = [](double) { return 0.0; };
  m.potential = [mass](double x) {
    double t = area_from_distance(mass, x);
    double h = std::sqrt(std::max(0.0, 1.0 - 2.0 * mass / t));
    return x < 0 ? -h : h;
  };
  m.area_radius = [mass](double x) { return area_from_distance(mass, x); };
  m.coordinate_of = [mass](double t) {
    if (t < 2.0 * mass) throw Error(Errc::OutOfChart, "area radius inside the horizon");
    return horizon_distance(mass, t);
  };
  return m;
}

SymmetricSpaceModel warped_model(const WarpedProfile& p) {
  if (!p.closed) throw Error(Errc::InvalidArgument, "warped model needs a closed profile");
  SymmetricSpaceModel m;
  m.kind = "warped:" + p.kind;
  m.periodic = true;
  m.lower_boundary = m.upper_boundary = false;
  m.x_min = 0.0;
  m.x_max = p.period;
  auto prof = std::make_shared<WarpedProfile>(p);
  m.lapse = [prof](double x) { return prof->lapse_at(x).v; };
  m.radius = [prof](double x) { return prof->radius_at(x).v; };
  auto ric = [prof](double x) {
    ProfileJet a = prof->lapse_at(x), f = prof->radius_at(x);
    double bs = f.d1 / a.v;
    double bss = f.d2 / (a.v * a.v) - a.d1 * f.d1 / std::pow(a.v, 3);
    double r0 = -2.0 * bss / f.v;
    double r1 = -bss / f.v + (1.0 - bs * bs) / (f.v * f.v);
    return std::pair{r0, r1};
  };
  m.curvature2 = [ric](double x) {
    auto [r0, r1] = ric(x);
    return r0 * r0 + 2.0 * r1 * r1;
  };
  m.scalar = [ric](double x) {
    auto [r0, r1] = ric(x);
    return r0 + 2.0 * r1;
  };
  m.potential = [](double) { return 1.0; };
  m.area_radius = [](double x) { return x; };
  m.coordinate_of = [](double t) { return t; };
  return m;
}

SymmetricSpaceModel scale_model(const SymmetricSpaceModel& m0, double tau) {
  if (!(tau > 0)) throw Error(Errc::InvalidArgument, "scale factor must be positive");
  SymmetricSpaceModel m = m0;
  m.x_min = tau * m0.x_min;
  m.x_max = tau * m0.x_max;
  m.parameter = m0.kind == "schwarzschild" ? tau * m0.parameter : m0.parameter;
  m.lapse = [g = m0.lapse, tau](double x) { return g(x / tau); };
  m.radius = [g = m0.radius, tau](double x) { return tau * g(x / tau); };
  m.curvature2 = [g = m0.curvature2, tau](double x) { return g(x / tau) / std::pow(tau, 4); };
  m.scalar = [g = m0.scalar, tau](double x) { return g(x / tau) / (tau * tau); };
  m.potential = [g = m0.potential, tau](double x) { return g(x / tau); };
  m.area_radius = [g = m0.area_radius, tau](double x) { return tau * g(x / tau); };
  m.coordinate_of = [g = m0.coordinate_of, tau](double t) { return tau * g(t / tau); };
  return m;
}

void RadiusConfig::validate() const {
  if (!(c_o > 0 && c_o < 1)) throw Error(Errc::InvalidArgument, "c_o must lie in (0, 1)");
  if (!(mu > 0 && mu < 1)) throw Error(Errc::InvalidArgument, "mu must lie in (0, 1)");
  if (grid_x < 16 || grid_phi < 16) throw Error(Errc::GridTooCoarse, "radius grids need at least 16 nodes");
  if (!(rel_tol > 0 && rel_tol < 0.5)) throw Error(Errc::InvalidArgument, "rel_tol must lie in (0, 0.5)");
  if (ladder < 1) throw Error(Errc::InvalidArgument, "ladder needs at least one radius");
  if (!(ladder_min > 0 && ladder_min <= 1)) throw Error(Errc::InvalidArgument, "ladder_min must lie in (0, 1]");
  if (centers_per_side < 1) throw Error(Errc::InvalidArgument, "centers_per_side must be positive");
  if (station_stride < 0) throw Error(Errc::InvalidArgument, "station_stride must be non-negative");
}

// ---------------------------------------------------------------------------

struct RadiusEngine::Impl {
  SymmetricSpaceModel model;
  RadiusConfig cfg;
  int nx = 0, np = 0, stride = 1;
  double dx = 0.0, dphi = 0.0;
  std::vector<double> xs, a, f, curv2, scal, u, hx, hp;
  std::vector<double> w, cell;  // per node, k = i * np + j
  double total_volume = 0.0;

  std::unordered_map<int, std::vector<float>> fields;
  std::map<int, RadiusResult> rho_memo, nu_memo;

  int idx(int i, int j) const { return i * np + j; }

  int wrap(int i) const {
    if (!model.periodic) return i;
    i %= nx;
    return i < 0 ? i + nx : i;
  }
  bool valid_i(int i) const { return model.periodic || (i >= 0 && i < nx); }

  double x_offset(int i, int i0) const {
    double d = xs[i] - xs[i0];
    if (model.periodic) {
      double L = model.x_max - model.x_min;
      d -= L * std::round(d / L);
    }
    return d;
  }

  void build() {
    cfg.validate();
    if (!(model.x_max > model.x_min)) throw Error(Errc::InvalidArgument, "empty chart");
    nx = cfg.grid_x;
    np = cfg.grid_phi;
    stride = cfg.station_stride > 0 ? cfg.station_stride : std::max(1, nx / 64);
    double L = model.x_max - model.x_min;
    dx = model.periodic ? L / nx : L / (nx - 1);
    dphi = kPi / (np - 1);
    xs.resize(nx);
    a.resize(nx); f.resize(nx); curv2.resize(nx); scal.resize(nx); u.resize(nx);
    hx.resize(nx); hp.resize(nx);
    for (int i = 0; i < nx; ++i) {
      double x = model.x_min + i * dx;
      xs[i] = x;
      a[i] = model.lapse(x);
      f[i] = model.radius(x);
      curv2[i] = model.curvature2(x);
      scal[i] = model.scalar(x);
      u[i] = model.potential(x);
      if (!(a[i] > 0) || f[i] < 0) throw Error(Errc::InvalidArgument, "model lapse/radius not admissible");
      hx[i] = a[i] * dx;
      hp[i] = f[i] * dphi;
    }
    w.assign(static_cast<size_t>(nx) * np, 0.0);
    cell.assign(w.size(), 0.0);
    for (int i = 0; i < nx; ++i) {
      double qx = (!model.periodic && (i == 0 || i == nx - 1)) ? 0.5 : 1.0;
      for (int j = 0; j < np; ++j) {
        double qp = (j == 0 || j == np - 1) ? 0.5 : 1.0;
        double phi = j * dphi;
        w[idx(i, j)] = qx * qp * dx * dphi * 2.0 * kPi * a[i] * f[i] * f[i] * std::sin(phi);
        cell[idx(i, j)] = std::max(hx[i], f[i] * dphi);
      }
    }
    total_volume = 0.0;
    for (double v : w) total_volume += v;
  }

  // Second-order fast marching from the axis node (i0, 0).
  std::vector<float> march(int i0) const {
    const size_t N = w.size();
    std::vector<double> T(N, kInf);
    std::vector<char> known(N, 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

    // local Euclidean start near the source
    for (int di = -2; di <= 2; ++di) {
      int i = i0 + di;
      if (!valid_i(i)) continue;
      i = wrap(i);
      for (int j = 0; j <= 2 && j < np; ++j) {
        double ex = 0.5 * (a[i] + a[i0]) * x_offset(i, i0);
        double d2 = ex * ex + 2.0 * f[i0] * f[i] * (1.0 - std::cos(j * dphi));
        int k = idx(i, j);
        T[k] = std::sqrt(std::max(0.0, d2));
        known[k] = 1;
      }
    }

    auto value = [&](int i, int j) -> double {
      if (!valid_i(i) || j < 0 || j >= np) return kInf;
      int k = idx(wrap(i), j);
      return known[k] ? T[k] : kInf;
    };

    auto solve = [&](int i, int j) -> double {
      // x direction
      double tx1 = kInf, tx2 = kInf;
      for (int s : {-1, 1}) {
        double t1 = value(i + s, j);
        if (t1 < tx1) {
          tx1 = t1;
          double t2 = value(i + 2 * s, j);
          tx2 = t2 <= t1 ? t2 : kInf;
        }
      }
      double tp1 = kInf, tp2 = kInf;
      for (int s : {-1, 1}) {
        double t1 = value(i, j + s);
        if (t1 < tp1) {
          tp1 = t1;
          double t2 = value(i, j + 2 * s);
          tp2 = t2 <= t1 ? t2 : kInf;
        }
      }
      double best = kInf;
      if (tx1 < kInf) best = tx1 + hx[i];
      if (hp[i] <= 1e-12 * hx[i]) return std::min(best, tp1);  // collapsed slice
      if (tp1 < kInf) best = std::min(best, tp1 + hp[i]);
      if (tx1 == kInf || tp1 == kInf) {
        // one-sided second order where available
        if (tx1 < kInf && tx2 < kInf) best = std::min(best, (4 * tx1 - tx2) / 3 + 2 * hx[i] / 3);
        if (tp1 < kInf && tp2 < kInf) best = std::min(best, (4 * tp1 - tp2) / 3 + 2 * hp[i] / 3);
        return best;
      }
      for (int order = 2; order >= 1; --order) {
        double ax, sx, ap, sp;
        if (order == 2 && tx2 < kInf) { ax = 1.5 / hx[i]; sx = (4 * tx1 - tx2) / 3; }
        else { ax = 1.0 / hx[i]; sx = tx1; }
        if (order == 2 && tp2 < kInf) { ap = 1.5 / hp[i]; sp = (4 * tp1 - tp2) / 3; }
        else { ap = 1.0 / hp[i]; sp = tp1; }
        double A = ax * ax + ap * ap;
        double B = -2.0 * (ax * ax * sx + ap * ap * sp);
        double C = ax * ax * sx * sx + ap * ap * sp * sp - 1.0;
        double disc = B * B - 4 * A * C;
        if (disc >= 0) {
          double t = (-B + std::sqrt(disc)) / (2 * A);
          if (t >= std::max(sx, sp)) return std::min(best, t);
        }
        if (order == 2) continue;
        return std::min({best, sx + 1.0 / ax, sp + 1.0 / ap});
      }
      return best;
    };

    auto relax_neighbors = [&](int i, int j) {
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (auto& q : nb) {
        int ii = q[0], jj = q[1];
        if (!valid_i(ii) || jj < 0 || jj >= np) continue;
        ii = wrap(ii);
        int k = idx(ii, jj);
        if (known[k]) continue;
        double t = solve(ii, jj);
        if (t < T[k]) {
          T[k] = t;
          heap.emplace(t, k);
        }
      }
    };

    for (size_t k = 0; k < N; ++k)
      if (known[k]) relax_neighbors(static_cast<int>(k) / np, static_cast<int>(k) % np);

    while (!heap.empty()) {
      auto [t, k] = heap.top();
      heap.pop();
      if (known[k] || t > T[k]) continue;
      known[k] = 1;
      relax_neighbors(k / np, k % np);
    }
    return std::vector<float>(T.begin(), T.end());
  }

  const std::vector<float>& field(int i) {
    auto it = fields.find(i);
    if (it != fields.end()) return it->second;
    if (fields.size() >= 96) fields.clear();
    return fields.emplace(i, march(i)).first->second;
  }

  // distance from center (c, side) to node k; side 1 is the axis point at phi = pi
  static double from_center(const std::vector<float>& F, int np, int k, int side) {
    if (side == 0) return F[k];
    int i = k / np, j = k % np;
    return F[i * np + (np - 1 - j)];
  }

  double cap(int i) {
    const auto& F = field(i);
    if (model.periodic) {
      double mx = 0.0;
      for (float v : F) mx = std::max(mx, static_cast<double>(v));
      double vol_bound = std::cbrt(total_volume / (cfg.mu * kOmega3));
      return std::max(2.0 * mx, 1.05 * vol_bound);
    }
    double c = kInf;
    for (int j = 0; j < np; ++j) {
      if (model.lower_boundary) c = std::min(c, static_cast<double>(F[idx(0, j)]));
      if (model.upper_boundary) c = std::min(c, static_cast<double>(F[idx(nx - 1, j)]));
    }
    return c;
  }

  std::vector<double> membership(const std::vector<float>& F, double r) const {
    std::vector<double> m(w.size(), 0.0);
    for (size_t k = 0; k < w.size(); ++k) {
      double h = std::clamp(0.5 + (r - F[k]) / cell[k], 0.0, 1.0);
      m[k] = h * w[k];
    }
    return m;
  }

  double ball_integral(int i, double r, bool mass) {
    const auto& F = field(i);
    double s = 0.0;
    for (size_t k = 0; k < w.size(); ++k) {
      double h = std::clamp(0.5 + (r - F[k]) / cell[k], 0.0, 1.0);
      if (h > 0) s += h * w[k] * (mass ? curv2[k / np] : 1.0);
    }
    return s;
  }

  // axis centers (node, side) inside B_i(r)
  std::vector<std::pair<int, int>> centers(int i, double r) {
    const auto& F = field(i);
    std::vector<std::pair<int, int>> out{{i, 0}};
    for (int side = 0; side < 2; ++side) {
      std::vector<int> in;
      int j = side == 0 ? 0 : np - 1;
      for (int k = 0; k < nx; k += stride)
        if (F[idx(k, j)] < r && !(side == 0 && k == i)) in.push_back(k);
      int n = static_cast<int>(in.size());
      int take = std::min(n, cfg.centers_per_side);
      for (int q = 0; q < take; ++q) {
        int pos = take == 1 ? n / 2 : static_cast<int>(std::lround(q * (n - 1.0) / (take - 1.0)));
        out.emplace_back(in[pos], side);
      }
    }
    return out;
  }

  // true when every sampled (center, s) pair satisfies the bound
  bool holds(int i, double r, bool curvature) {
    std::vector<double> mem = membership(field(i), r);
    const int L = cfg.ladder;
    const double q = L > 1 ? std::pow(cfg.ladder_min, 1.0 / (L - 1)) : 1.0;
    const double logq = -std::log(q);
    std::vector<double> vol(L), mass(L);
    for (auto [c, side] : centers(i, r)) {
      const auto& Fc = field(c);
      std::fill(vol.begin(), vol.end(), 0.0);
      std::fill(mass.begin(), mass.end(), 0.0);
      for (size_t k = 0; k < mem.size(); ++k) {
        if (mem[k] == 0.0) continue;
        double T = from_center(Fc, np, static_cast<int>(k), side);
        if (T >= r) continue;
        int K = L;
        if (T > 0 && L > 1) K = std::min(L, static_cast<int>(std::ceil(std::log(r / T) / logq)));
        if (K <= 0) continue;
        vol[K - 1] += mem[k];
        mass[K - 1] += mem[k] * curv2[k / np];
      }
      double V = 0.0, M = 0.0;
      double floor_s = 2.0 * std::max(hx[c], hp[c]);
      for (int l = L - 1; l >= 0; --l) {
        V += vol[l];
        M += mass[l];
        double s = r * std::pow(q, l);
        if (s < floor_s || V <= 0) continue;
        if (curvature) {
          if (std::pow(s, 4) * M / V > cfg.c_o) return false;
        } else if (V / (s * s * s) < cfg.mu * kOmega3) {
          return false;
        }
      }
    }
    return true;
  }

  RadiusResult search(int i, bool curvature) {
    double hi = cap(i);
    if (holds(i, hi, curvature)) return {hi, true};
    double floor_r = 2.0 * std::max(hx[i], hp[i]);
    double lo = 0.5 * hi;
    while (!holds(i, lo, curvature)) {
      hi = lo;
      lo *= 0.5;
      if (lo < floor_r) return {lo, false};
    }
    while (hi - lo > cfg.rel_tol * lo) {
      double mid = 0.5 * (lo + hi);
      if (holds(i, mid, curvature)) lo = mid; else hi = mid;
    }
    return {lo, false};
  }

  struct Crossing {
    int p, q;      // node indices on either side of the level set
    double theta;  // fraction from p to q
  };

  std::vector<Crossing> level_crossings(const std::vector<float>& F, double r) const {
    std::vector<Crossing> out;
    auto edge = [&](int p, int q) {
      double tp = F[p], tq = F[q];
      if ((tp < r) != (tq < r) && tp != tq) out.push_back({p, q, (r - tp) / (tq - tp)});
    };
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < np; ++j) {
        int k = idx(i, j);
        if (j + 1 < np) edge(k, idx(i, j + 1));
        if (i + 1 < nx) edge(k, idx(i + 1, j));
        else if (model.periodic) edge(k, idx(0, j));
      }
    return out;
  }

  double crossing_x(const Crossing& c) const {
    int ip = c.p / np, iq = c.q / np;
    if (ip == iq) return xs[ip];
    double L = model.x_max - model.x_min;
    double xq = xs[iq];
    if (model.periodic && std::abs(xq - xs[ip]) > 0.5 * L) xq += xq < xs[ip] ? L : -L;
    double x = xs[ip] + c.theta * (xq - xs[ip]);
    if (model.periodic) x = model.x_min + std::fmod(std::fmod(x - model.x_min, L) + L, L);
    return x;
  }

  int nearest_node(double x) const {
    double pos = (x - model.x_min) / dx;
    int i = static_cast<int>(std::lround(pos));
    if (model.periodic) return wrap(i);
    return std::clamp(i, 0, nx - 1);
  }
};

RadiusEngine::RadiusEngine(SymmetricSpaceModel model, RadiusConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  impl_->cfg = cfg;
  impl_->build();
}
RadiusEngine::~RadiusEngine() = default;
RadiusEngine::RadiusEngine(RadiusEngine&&) noexcept = default;
RadiusEngine& RadiusEngine::operator=(RadiusEngine&&) noexcept = default;

const SymmetricSpaceModel& RadiusEngine::model() const { return impl_->model; }
const RadiusConfig& RadiusEngine::config() const { return impl_->cfg; }
int RadiusEngine::nx() const { return impl_->nx; }
int RadiusEngine::nphi() const { return impl_->np; }
double RadiusEngine::node_x(int i) const { return impl_->xs.at(i); }
double RadiusEngine::grid_h(int i) const { return std::max(impl_->hx.at(i), impl_->hp.at(i)); }

int RadiusEngine::axis_node(double x) const {
  const auto& m = impl_->model;
  if (!m.periodic && (x < m.x_min - 1e-12 * (1 + std::abs(m.x_min)) ||
                      x > m.x_max + 1e-12 * (1 + std::abs(m.x_max))))
    throw Error(Errc::OutOfChart, "point outside the chart");
  return impl_->nearest_node(x);
}

const std::vector<float>& RadiusEngine::field(int i) { return impl_->field(impl_->wrap(i)); }

double RadiusEngine::distance(const MeridianPoint& p, const MeridianPoint& q) {
  auto& I = *impl_;
  if (p.phi < 0 || p.phi > kPi || q.phi < 0 || q.phi > kPi)
    throw Error(Errc::OutOfChart, "polar angle outside [0, pi]");
  axis_node(p.x);
  axis_node(q.x);
  const double L = I.model.x_max - I.model.x_min;
  // bracketing nodes and weight along x
  auto locate = [&](double x, int& i0, int& i1, double& tx) {
    if (I.model.periodic) x = I.model.x_min + std::fmod(std::fmod(x - I.model.x_min, L) + L, L);
    double pos = (x - I.model.x_min) / I.dx;
    i0 = static_cast<int>(std::floor(pos));
    tx = pos - i0;
    if (!I.model.periodic && i0 >= I.nx - 1) { i0 = I.nx - 2; tx = 1.0; }
    if (!I.model.periodic && i0 < 0) { i0 = 0; tx = 0.0; }
    i1 = I.wrap(i0 + 1);
    i0 = I.wrap(i0);
  };
  const double gamma = std::abs(q.phi - p.phi);
  double pj = gamma / I.dphi;
  int j0 = std::min(static_cast<int>(std::floor(pj)), I.np - 2);
  double tp = pj - j0;
  int q0, q1;
  double tq;
  locate(q.x, q0, q1, tq);
  auto eval = [&](int src) {
    const auto& F = I.field(src);
    auto at = [&](int i, int j) { return static_cast<double>(F[I.idx(i, j)]); };
    return (1 - tq) * ((1 - tp) * at(q0, j0) + tp * at(q0, j0 + 1)) +
           tq * ((1 - tp) * at(q1, j0) + tp * at(q1, j0 + 1));
  };
  int p0, p1;
  double tpx;
  locate(p.x, p0, p1, tpx);
  double d0 = eval(p0);
  return tpx == 0.0 ? d0 : (1 - tpx) * d0 + tpx * eval(p1);
}

double RadiusEngine::ball_volume(int i, double r) { return impl_->ball_integral(impl_->wrap(i), r, false); }
double RadiusEngine::ball_curvature_mass(int i, double r) {
  return impl_->ball_integral(impl_->wrap(i), r, true);
}
double RadiusEngine::cap(int i) { return impl_->cap(impl_->wrap(i)); }

RadiusResult RadiusEngine::curvature_radius(int i) {
  i = impl_->wrap(i);
  auto it = impl_->rho_memo.find(i);
  if (it != impl_->rho_memo.end()) return it->second;
  return impl_->rho_memo[i] = impl_->search(i, true);
}

RadiusResult RadiusEngine::volume_radius(int i) {
  i = impl_->wrap(i);
  auto it = impl_->nu_memo.find(i);
  if (it != impl_->nu_memo.end()) return it->second;
  return impl_->nu_memo[i] = impl_->search(i, false);
}

BufferReport RadiusEngine::buffered(int i, double c) {
  if (!(c > 0 && c < 1)) throw Error(Errc::InvalidArgument, "buffer constant must lie in (0, 1)");
  BufferReport b;
  b.rho = curvature_radius(i).value;
  double V = ball_volume(i, b.rho);
  double M = ball_curvature_mass(i, (1.0 - c) * b.rho);
  b.value = V > 0 ? std::pow(b.rho, 4) * M / V : 0.0;
  b.threshold = c * impl_->cfg.c_o;
  b.buffered = b.value >= b.threshold && b.value > 0;
  return b;
}

StrongBufferReport RadiusEngine::strongly_buffered(int i, double d) {
  if (!(d > 0)) throw Error(Errc::InvalidArgument, "strong buffer constant must be positive");
  auto& I = *impl_;
  i = I.wrap(i);
  StrongBufferReport r;
  r.rho = curvature_radius(i).value;
  auto cross = I.level_crossings(I.field(i), r.rho);
  r.min_ratio = kInf;
  if (cross.empty()) {
    r.strongly_buffered = true;
    return r;
  }
  // spread samples along the level set, plus its extreme x values
  std::vector<double> xs;
  auto phi_of = [&](const Impl::Crossing& c) {
    return (c.p % I.np) + c.theta * ((c.q % I.np) - (c.p % I.np));
  };
  std::sort(cross.begin(), cross.end(), [&](const auto& u, const auto& v) { return phi_of(u) < phi_of(v); });
  double xmin = kInf, xmax = -kInf;
  for (const auto& c : cross) {
    double x = I.crossing_x(c);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  xs.push_back(xmin);
  xs.push_back(xmax);
  const int n = static_cast<int>(cross.size()), want = 16;
  for (int q = 0; q < std::min(n, want); ++q)
    xs.push_back(I.crossing_x(cross[static_cast<size_t>(q * (n - 1.0) / std::max(1, want - 1))]));
  std::vector<int> nodes;
  for (double x : xs) nodes.push_back(I.nearest_node(x));
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (int k : nodes) {
    RadiusResult z = curvature_radius(k);
    double ratio = z.capped ? kInf : z.value / r.rho;  // capped: holds at every resolved scale
    r.min_ratio = std::min(r.min_ratio, ratio);
    ++r.samples;
  }
  r.strongly_buffered = r.min_ratio >= d;
  return r;
}

std::vector<LipschitzSample> RadiusEngine::lipschitz_check(int i, int samples) {
  auto& I = *impl_;
  i = I.wrap(i);
  RadiusResult rx = curvature_radius(i);
  const double R = rx.value;
  auto cross = I.level_crossings(I.field(i), R);
  std::vector<std::pair<int, int>> inside;
  {
    const auto& F = I.field(i);
    for (int side = 0; side < 2; ++side) {
      int j = side == 0 ? 0 : I.np - 1;
      for (int k = 0; k < I.nx; k += I.stride)
        if (F[I.idx(k, j)] < R) inside.emplace_back(k, side);
    }
  }
  std::vector<LipschitzSample> out;
  if (inside.empty() || cross.empty()) return out;
  const int n = static_cast<int>(inside.size());
  const int take = std::min(n, samples);
  for (int q = 0; q < take; ++q) {
    auto [k, side] = inside[static_cast<size_t>(take == 1 ? 0 : q * (n - 1.0) / (take - 1.0))];
    const auto& Fk = I.field(k);
    double dist = kInf;
    for (const auto& c : cross) {
      double tp = Impl::from_center(Fk, I.np, c.p, side);
      double tq = Impl::from_center(Fk, I.np, c.q, side);
      dist = std::min(dist, tp + c.theta * (tq - tp));
    }
    LipschitzSample s;
    s.x = I.xs[k];
    s.rho = curvature_radius(k).value;
    s.boundary_distance = dist;
    s.tolerance = 2.0 * (grid_h(i) + grid_h(k)) + 2.0 * I.cfg.rel_tol * R;
    s.ok = s.rho >= dist - s.tolerance;
    out.push_back(s);
  }
  return out;
}

std::vector<std::pair<int, int>> RadiusEngine::shell(int i, double r_lo, double r_hi) {
  auto& I = *impl_;
  const auto& F = I.field(I.wrap(i));
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k < I.nx; ++k)
    for (int j = 0; j < I.np; ++j) {
      double t = F[I.idx(k, j)];
      if (t >= r_lo && t <= r_hi) out.emplace_back(k, j);
    }
  return out;
}

double RadiusEngine::oscillation(int i, double r) {
  auto& I = *impl_;
  i = I.wrap(i);
  const auto& F = I.field(i);
  double osc = 0.0;
  for (int k = 0; k < I.nx; ++k)
    for (int j = 0; j < I.np; ++j)
      if (F[I.idx(k, j)] < r) osc = std::max(osc, std::abs(I.u[k] - I.u[i]));
  return osc;
}

// ---------------------------------------------------------------------------

double geodesic_distance(const SymmetricSpaceModel& m, const MeridianPoint& x, const MeridianPoint& y,
                         const RadiusConfig& cfg) {
  RadiusEngine e(m, cfg);
  return e.distance(x, y);
}

RadiusResult volume_radius(const SymmetricSpaceModel& m, double x, const RadiusConfig& cfg) {
  RadiusEngine e(m, cfg);
  return e.volume_radius(e.axis_node(x));
}

RadiusResult l2_curvature_radius(const SymmetricSpaceModel& m, double x, const RadiusConfig& cfg) {
  RadiusEngine e(m, cfg);
  return e.curvature_radius(e.axis_node(x));
}

BufferReport buffered(const SymmetricSpaceModel& m, double y, double c, const RadiusConfig& cfg) {
  RadiusEngine e(m, cfg);
  return e.buffered(e.axis_node(y), c);
}

StrongBufferReport strongly_buffered(const SymmetricSpaceModel& m, double y, double d,
                                     const RadiusConfig& cfg) {
  RadiusEngine e(m, cfg);
  return e.strongly_buffered(e.axis_node(y), d);
}

double RadiusEngine::node_radius(int i) const { return impl_->f.at(i); }
double RadiusEngine::node_lapse(int i) const { return impl_->a.at(i); }
double RadiusEngine::node_potential(int i) const { return impl_->u.at(i); }
double RadiusEngine::node_area_radius(int i) const { return impl_->model.area_radius(impl_->xs.at(i)); }
double RadiusEngine::total_volume() const { return impl_->total_volume; }

double RadiusEngine::traceless_ricci_mass() const {
  const auto& I = *impl_;
  double s = 0.0;
  for (size_t k = 0; k < I.w.size(); ++k) {
    int i = static_cast<int>(k) / I.np;
    s += I.w[k] * std::max(0.0, I.curv2[i] - I.scal[i] * I.scal[i] / 3.0);
  }
  return s;
}

double RadiusEngine::max_curvature2() const {
  return *std::max_element(impl_->curv2.begin(), impl_->curv2.end());
}

LemmaCheck lemma_1_4_check(const SymmetricSpaceModel& m, const RadiusConfig& cfg) {
  RadiusEngine e(m, cfg);
  LemmaCheck out;
  const int nx = e.nx();
  out.lhs = e.traceless_ricci_mass();
  const double vol = e.total_volume();
  if (!m.periodic) {
    if (e.max_curvature2() > 0.0)
      throw Error(Errc::InvalidArgument, "cover bound needs a closed model or a flat chart");
    out.rho0 = e.curvature_radius(nx / 2).value;
    out.N = 1.0;
    out.balls = 1;
    out.rhs = out.C * out.N * cfg.c_o * vol / std::pow(out.rho0, 4);
    out.holds = out.lhs <= out.rhs;
    return out;
  }
  // rho0 = inf rho over a sweep of the circle
  double rho0 = kInf;
  const int sweep = 16;
  for (int q = 0; q < sweep; ++q) rho0 = std::min(rho0, e.curvature_radius(q * nx / sweep).value);
  out.rho0 = rho0;

  // Cover: slices every rho0 / 2 of arclength, each carrying a ring net of
  // spacing rho0 / 2 on its sphere. Every point is then within about 0.45
  // rho0 of a center.
  const double eps = 0.5 * rho0;
  std::vector<double> arc(nx + 1, 0.0);
  const double dx = (m.x_max - m.x_min) / nx;
  for (int i = 0; i < nx; ++i) arc[i + 1] = arc[i] + e.node_lapse(i) * dx;
  const int slices = std::max(1, static_cast<int>(std::ceil(arc[nx] / eps)));
  double covered = 0.0;
  int balls = 0;
  for (int k = 0; k < slices; ++k) {
    double target = (k + 0.5) * arc[nx] / slices;
    int i = static_cast<int>(std::lower_bound(arc.begin(), arc.end(), target) - arc.begin());
    i = std::clamp(i, 0, nx - 1);
    double f = e.node_radius(i);
    int rings = std::max(1, static_cast<int>(std::ceil(kPi * f / eps)));
    int per_slice = 0;
    for (int r = 0; r < rings; ++r) {
      double th0 = r * kPi / rings, th1 = (r + 1) * kPi / rings;
      double smax = (th0 <= kPi / 2 && th1 >= kPi / 2) ? 1.0 : std::max(std::sin(th0), std::sin(th1));
      per_slice += std::max(1, static_cast<int>(std::ceil(2 * kPi * f * smax / eps)));
    }
    balls += per_slice;
    covered += per_slice * e.ball_volume(i, rho0);
  }
  out.balls = balls;
  out.N = covered / vol;
  out.rhs = out.C * cfg.c_o * covered / std::pow(rho0, 4);
  out.holds = out.lhs <= out.rhs;
  return out;
}

DescentFamily schwarzschild_family(double m) {
  if (!(m > 0)) throw Error(Errc::NonPositiveMass, "family mass must be positive");
  DescentFamily fam;
  fam.kind = "schwarzschild";
  fam.parameter = m;
  fam.curvature_scale = 2.0 * m;  // horizon radius
  fam.window = [m](double t) { return schwarzschild_model(m, 3.0 * t + 10.0 * m, 0.5); };
  return fam;
}

DescentFamily flat_family() {
  DescentFamily fam;
  fam.kind = "flat";
  fam.curvature_scale = 0.0;
  fam.window = [](double t) { return flat_model(3.0 * t + 10.0); };
  return fam;
}

DescentTrace descend(const DescentFamily& family, double t_start, double c, double d,
                     const RadiusConfig& cfg, int max_steps) {
  if (!(c > 0 && c < 0.5)) throw Error(Errc::InvalidArgument, "c must lie in (0, 0.5)");
  if (!(d > 0 && d < 1)) throw Error(Errc::InvalidArgument, "d must lie in (0, 1)");
  DescentTrace tr;
  tr.c = c;
  tr.d = d;
  tr.d1 = d + 2 * c;
  tr.parameter = t_start;

  SymmetricSpaceModel model = family.window(t_start);
  double x = model.coordinate_of(t_start);
  for (int step = 0;; ++step) {
    RadiusEngine e(model, cfg);
    int i = e.axis_node(x);
    RadiusResult rho = e.curvature_radius(i);
    DescentPoint pt;
    pt.step = step;
    pt.x = e.node_x(i);
    pt.t = e.node_area_radius(i);
    pt.rho = rho.value;
    pt.u = e.node_potential(i);
    pt.buffered = e.buffered(i, c).buffered;
    pt.strongly_buffered = e.strongly_buffered(i, d).strongly_buffered;
    if (!tr.points.empty() && pt.rho > tr.d1 * tr.points.back().rho)
      throw Error(Errc::NoDescent, "radius at the new base point exceeds d1 times the previous one");
    tr.points.push_back(pt);

    if (pt.buffered) { tr.stop_reason = "buffered"; break; }
    if (pt.rho <= family.curvature_scale) { tr.stop_reason = "curvature_scale"; break; }
    if (rho.capped) throw Error(Errc::NoDescent, "curvature radius is capped by the chart, nothing to descend to");
    if (step >= max_steps) throw Error(Errc::NoDescent, "step limit reached before a buffered point");

    double osc = e.oscillation(i, (1.0 - c) * pt.rho);
    if (osc > 0.25 * std::abs(pt.u))
      throw Error(Errc::OscillationViolated, "potential oscillates by more than u/4 on the inner ball");

    // Points with dist from the boundary in [c rho, 2 c rho]; rho depends on
    // the x-slice only, so sample distinct slices.
    auto shell = e.shell(i, (1.0 - 2.0 * c) * pt.rho, (1.0 - c) * pt.rho);
    std::vector<int> slices;
    for (auto [k, j] : shell) slices.push_back(k);
    std::sort(slices.begin(), slices.end());
    slices.erase(std::unique(slices.begin(), slices.end()), slices.end());
    if (slices.empty()) throw Error(Errc::NoDescent, "shell is not resolved by the grid");
    const int n = static_cast<int>(slices.size()), want = std::min(n, 9);
    int best = -1;
    double best_rho = kInf;
    for (int q = 0; q < want; ++q) {
      int k = slices[static_cast<size_t>(want == 1 ? 0 : q * (n - 1.0) / (want - 1.0))];
      RadiusResult rz = e.curvature_radius(k);
      double v = rz.capped ? kInf : rz.value;
      if (v < best_rho) { best_rho = v; best = k; }
    }
    if (best < 0 || best_rho > tr.d1 * pt.rho)
      throw Error(Errc::NoDescent, "no shell point has radius below d1 times the current one (step " +
                                       std::to_string(step) + ", t = " + std::to_string(pt.t) + ", rho = " +
                                       std::to_string(pt.rho) + ", best = " + std::to_string(best_rho) + ")");
    x = e.node_x(best);
    model = family.window(e.node_area_radius(best));
  }
  return tr;
}

void write_trace_csv(const DescentTrace& tr, std::ostream& out) {
  auto old = out.precision(12);
  out << "step,t,rho,u,buffered,strongly_buffered\n";
  for (const auto& p : tr.points)
    out << p.step << ',' << p.t << ',' << p.rho << ',' << p.u << ',' << (p.buffered ? 1 : 0) << ','
        << (p.strongly_buffered ? 1 : 0) << '\n';
  out.precision(old);
}

}  // namespace curvlab
