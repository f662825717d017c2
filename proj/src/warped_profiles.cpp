#include "curvlab/warped_profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>

#include <boost/numeric/odeint.hpp>
#include <Eigen/Eigenvalues>

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

// Black-hole ODE data: (f')^2 = 1 + f^2 - c/f with c = a^3 + a.
struct BhOde {
  double c;
  double f2(double f) const { return f + c / (2.0 * f * f); }
  ProfileJet jet(double f, double fp) const {
    ProfileJet j;
    j.v = f;
    j.d1 = fp;
    j.d2 = f2(f);
    j.d3 = fp * (1.0 - c / (f * f * f));
    j.d4 = j.d2 * (1.0 - c / (f * f * f)) + 3.0 * c * fp * fp / (f * f * f * f);
    return j;
  }
};

// Quintic Hermite interpolation of value, slope and curvature on [0, h].
std::array<double, 2> hermite5(double y0, double d0, double c0, double y1, double d1, double c1, double h,
                               double s) {
  const double u = s / h;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
  const double H1 = u - 6 * u3 + 8 * u4 - 3 * u5;
  const double H2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
  const double H3 = 10 * u3 - 15 * u4 + 6 * u5;
  const double H4 = -4 * u3 + 7 * u4 - 3 * u5;
  const double H5 = 0.5 * (u3 - 2 * u4 + u5);
  const double dH0 = (-30 * u2 + 60 * u3 - 30 * u4) / h;
  const double dH1 = (1 - 18 * u2 + 32 * u3 - 15 * u4) / h;
  const double dH2 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4) / h;
  const double dH3 = (30 * u2 - 60 * u3 + 30 * u4) / h;
  const double dH4 = (-12 * u2 + 28 * u3 - 15 * u4) / h;
  const double dH5 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4) / h;
  const double v = H0 * y0 + h * H1 * d0 + h * h * H2 * c0 + H3 * y1 + h * H4 * d1 + h * h * H5 * c1;
  const double dv = dH0 * y0 + h * dH1 * d0 + h * h * dH2 * c0 + dH3 * y1 + h * dH4 * d1 + h * h * dH5 * c1;
  return {v, dv};
}

ProfileJet constant_jet(double v) {
  ProfileJet j;
  j.v = v;
  return j;
}

void fill_samples(WarpedProfile& p, int n) {
  p.t.clear();
  p.f.clear();
  p.fp.clear();
  for (int i = 0; i < n; ++i) {
    const double t = p.closed ? p.period * i / n : p.t_max * (i + 1) / n;
    const ProfileJet j = p.radius(t);
    p.t.push_back(t);
    p.f.push_back(j.v);
    p.fp.push_back(j.d1);
  }
}

}  // namespace

ProfileJet WarpedProfile::radius_at(double t) const {
  if (!closed && std::abs(t) > t_max * (1.0 + 1e-12))
    throw Error(Errc::OutOfRange, "t outside the profile interval");
  return radius(t);
}

ProfileJet WarpedProfile::lapse_at(double t) const {
  if (!lapse) return constant_jet(1.0);
  return lapse(t);
}

MetricField WarpedProfile::metric() const {
  MetricField g;
  const double lim = closed ? 1e300 : t_max;
  g.domain = ChartDomain::box(Vec3(-lim, 0.0, -1e300), Vec3(lim, kPi, 1e300));
  auto self = std::make_shared<WarpedProfile>(*this);
  g.eval = [self](const ChartPoint& p) {
    const ProfileJet a = self->lapse_at(p[0]);
    const ProfileJet f = self->radius_at(p[0]);
    const double s = std::sin(p[1]);
    return diag3(a.v * a.v, f.v * f.v, f.v * f.v * s * s);
  };
  g.d1 = [self](const ChartPoint& p) {
    const ProfileJet a = self->lapse_at(p[0]);
    const ProfileJet f = self->radius_at(p[0]);
    const double s = std::sin(p[1]);
    const double c = std::cos(p[1]);
    Tensor3 d = Tensor3::zero();
    d[0] = diag3(2 * a.v * a.d1, 2 * f.v * f.d1, 2 * f.v * f.d1 * s * s);
    d[1] = diag3(0.0, 0.0, 2 * f.v * f.v * s * c);
    return d;
  };
  g.d2 = [self](const ChartPoint& p) {
    const ProfileJet a = self->lapse_at(p[0]);
    const ProfileJet f = self->radius_at(p[0]);
    const double s = std::sin(p[1]);
    const double c = std::cos(p[1]);
    Tensor4 d = Tensor4::zero();
    const double q = 2 * (f.d1 * f.d1 + f.v * f.d2);
    d[0][0] = diag3(2 * (a.d1 * a.d1 + a.v * a.d2), q, q * s * s);
    d[0][1] = diag3(0.0, 0.0, 4 * f.v * f.d1 * s * c);
    d[1][0] = d[0][1];
    d[1][1] = diag3(0.0, 0.0, 2 * f.v * f.v * (c * c - s * s));
    return d;
  };
  return g;
}

WarpedProfile solve_bh_profile(double a, double t_max, double tol) {
  if (!(a > 0.0 && a < 1.0)) throw Error(Errc::NonPhysicalParameter, "black-hole parameter needs 0 < a < 1");
  if (!(t_max > 0.0)) throw Error(Errc::InvalidArgument, "t_max must be positive");
  if (!(tol > 0.0)) throw Error(Errc::InvalidArgument, "tol must be positive");

  const BhOde ode{a * a * a + a};
  const double f2 = a + (a * a + 1.0) / (2.0 * a);
  const double f4 = -f2 / (a * a);
  const double t0 = std::min(a * 1e-2, 0.5 * t_max);

  using State = std::array<double, 2>;
  State x{a + f2 * t0 * t0 / 2.0 + f4 * std::pow(t0, 4) / 24.0, f2 * t0 + f4 * std::pow(t0, 3) / 6.0};
  auto rhs = [&ode](const State& s, State& ds, double) {
    ds[0] = s[1];
    ds[1] = ode.f2(s[0]);
  };

  // Grid fine enough to resolve the turning region of width ~ a.
  const double grid = std::min(5e-3, a / 100.0);
  const int steps = std::max(200, static_cast<int>(std::ceil((t_max - t0) / grid)));
  std::vector<double> times(static_cast<std::size_t>(steps + 1));
  for (int k = 0; k <= steps; ++k) times[static_cast<std::size_t>(k)] = t0 + (t_max - t0) * k / steps;

  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_dense_output(1e-14, 1e-13, odeint::runge_kutta_dopri5<State>());
  std::vector<double> tf, ff, fpf;
  odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), (t_max - t0) / steps,
                          [&](const State& s, double t) {
                            tf.push_back(t);
                            ff.push_back(s[0]);
                            fpf.push_back(s[1]);
                          });
  if (tf.size() != times.size()) throw Error(Errc::ToleranceNotMet, "ODE integration stopped early");

  WarpedProfile p;
  p.kind = "black_hole";
  p.parameter = a;
  p.t_max = t_max;
  p.t = tf;
  p.f = ff;
  p.fp = fpf;

  const double dt = (t_max - t0) / steps;
  p.radius = [ode, a0 = a, f2, f4, t0, dt, tf, ff, fpf](double tin) {
    const double t = std::abs(tin);
    const double sign = tin < 0.0 ? -1.0 : 1.0;
    double f, fp;
    if (t <= t0) {
      f = a0 + f2 * t * t / 2.0 + f4 * std::pow(t, 4) / 24.0;
      fp = f2 * t + f4 * t * t * t / 6.0;
    } else {
      std::size_t k = static_cast<std::size_t>(std::floor((t - t0) / dt));
      k = std::min(k, tf.size() - 2);
      const double h = tf[k + 1] - tf[k];
      const auto hv = hermite5(ff[k], fpf[k], ode.f2(ff[k]), ff[k + 1], fpf[k + 1], ode.f2(ff[k + 1]), h, t - tf[k]);
      f = hv[0];
      fp = hv[1];
    }
    ProfileJet j = ode.jet(f, fp);
    j.d1 *= sign;
    j.d3 *= sign;
    return j;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < tf.size(); ++k) {
    const double f = ff[k], fp = fpf[k];
    worst = std::max(worst, std::abs(fp * fp - (1.0 + f * f - ode.c / f)) / (1.0 + f * f));
  }
  for (int k = 0; k < 50; ++k) {  // between nodes as well
    const ProfileJet j = p.radius(t_max * (k + 0.5) / 50.0);
    worst = std::max(worst, std::abs(j.d1 * j.d1 - (1.0 + j.v * j.v - ode.c / j.v)) / (1.0 + j.v * j.v));
  }
  if (worst > tol) throw Error(Errc::ToleranceNotMet, "first-integral residual above tolerance");
  return p;
}

WarpedProfile constant_profile(double b, double period) {
  if (!(b > 0.0) || !(period > 0.0)) throw Error(Errc::InvalidArgument, "need b > 0 and period > 0");
  WarpedProfile p;
  p.kind = "cylinder";
  p.closed = true;
  p.period = period;
  p.parameter = b;
  p.radius = [b](double) { return constant_jet(b); };
  fill_samples(p, 256);
  return p;
}

WarpedProfile cosine_profile(double b, double eps, double period) {
  if (!(b > 0.0) || !(period > 0.0) || !(std::abs(eps) < 1.0))
    throw Error(Errc::InvalidArgument, "need b > 0, period > 0, |eps| < 1");
  WarpedProfile p;
  p.kind = "cosine";
  p.closed = true;
  p.period = period;
  p.parameter = eps;
  const double w = 2.0 * kPi / period;
  p.radius = [b, eps, w](double t) {
    const double c = std::cos(w * t), s = std::sin(w * t);
    ProfileJet j;
    j.v = b * (1.0 + eps * c);
    j.d1 = -b * eps * w * s;
    j.d2 = -b * eps * w * w * c;
    j.d3 = b * eps * w * w * w * s;
    j.d4 = b * eps * w * w * w * w * c;
    return j;
  };
  fill_samples(p, 256);
  return p;
}

WarpedProfile sinh_profile(double t_max) {
  WarpedProfile p;
  p.kind = "sinh";
  p.t_max = t_max;
  p.radius = [](double t) {
    ProfileJet j;
    j.v = std::sinh(t);
    j.d1 = std::cosh(t);
    j.d2 = j.v;
    j.d3 = j.d1;
    j.d4 = j.v;
    return j;
  };
  fill_samples(p, 256);
  return p;
}

WarpedProfile periodic_samples_profile(const Eigen::VectorXd& lapse, const Eigen::VectorXd& radius,
                                       double period, const std::string& kind) {
  if (lapse.size() != radius.size()) throw Error(Errc::InvalidArgument, "lapse and radius sample counts differ");
  if (!(lapse.minCoeff() > 0.0) || !(radius.minCoeff() > 0.0))
    throw Error(Errc::InvalidArgument, "lapse and radius samples must be positive");
  WarpedProfile p;
  p.kind = kind;
  p.closed = true;
  p.period = period;
  const Eigen::VectorXd tn = spectral::nodes(static_cast<int>(radius.size()), period);
  p.t.assign(tn.data(), tn.data() + tn.size());
  p.f.assign(radius.data(), radius.data() + radius.size());
  auto rf = std::make_shared<spectral::TrigInterpolant>(radius, period);
  Eigen::VectorXd d = spectral::derivative(radius, period, 1);
  p.fp.assign(d.data(), d.data() + d.size());
  auto jet_of = [](std::shared_ptr<spectral::TrigInterpolant> ip) {
    return [ip](double t) {
      ProfileJet j;
      j.v = ip->eval(t, 0);
      j.d1 = ip->eval(t, 1);
      j.d2 = ip->eval(t, 2);
      j.d3 = ip->eval(t, 3);
      j.d4 = ip->eval(t, 4);
      return j;
    };
  };
  p.radius = jet_of(rf);
  if ((lapse.array() - 1.0).abs().maxCoeff() > 0.0)
    p.lapse = jet_of(std::make_shared<spectral::TrigInterpolant>(lapse, period));
  return p;
}

void write_profile_csv(const WarpedProfile& p, std::ostream& out) {
  out << "t,f\n" << std::setprecision(12);
  for (std::size_t i = 0; i < p.t.size(); ++i) out << p.t[i] << ',' << p.f[i] << '\n';
}

double profile_scalar_curvature(const WarpedProfile& p, double t) {
  const ProfileJet f = p.radius_at(t);
  const ProfileJet a = p.lapse_at(t);
  const double fs = f.d1 / a.v;
  const double fss = f.d2 / (a.v * a.v) - a.d1 * f.d1 / (a.v * a.v * a.v);
  return 2.0 * (1.0 - fs * fs) / (f.v * f.v) - 4.0 * fss / f.v;
}

namespace {

// h = f_s = f'/a with coordinate derivatives.
ScalarField arclength_slope(const WarpedProfile& p) {
  auto self = std::make_shared<WarpedProfile>(p);
  auto parts = [self](double t) {
    const ProfileJet f = self->radius_at(t);
    const ProfileJet a = self->lapse_at(t);
    const double h = f.d1 / a.v;
    const double h1 = (f.d2 - h * a.d1) / a.v;
    const double h2 = (f.d3 - 2.0 * h1 * a.d1 - h * a.d2) / a.v;
    return std::array<double, 3>{h, h1, h2};
  };
  ScalarField h;
  h.eval = [parts](const ChartPoint& q) { return parts(q[0])[0]; };
  h.grad = [parts](const ChartPoint& q) { return Vec3(parts(q[0])[1], 0.0, 0.0); };
  h.hess = [parts](const ChartPoint& q) {
    Mat3 m = Mat3::Zero();
    m(0, 0) = parts(q[0])[2];
    return m;
  };
  return h;
}

std::vector<double> interior_samples(const WarpedProfile& p, int n) {
  std::vector<double> ts;
  for (int i = 0; i < n; ++i) {
    if (p.closed)
      ts.push_back(p.period * (i + 0.5) / n);
    else
      ts.push_back(-0.95 * p.t_max + 1.9 * p.t_max * (i + 0.5) / n);
  }
  return ts;
}

}  // namespace

StaticPair bh_pair(const WarpedProfile& p) {
  StaticPair pair;
  pair.metric = p.metric();
  pair.potential = arclength_slope(p);
  pair.label = p.kind;
  pair.ray = [](double t) { return ChartPoint(t, kPi / 2.0, 0.0); };
  return pair;
}

double scalar_curvature_spread(const WarpedProfile& p, int samples) {
  double lo = 1e300, hi = -1e300;
  for (double t : interior_samples(p, samples)) {
    const double s = profile_scalar_curvature(p, t);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return hi - lo;
}

double kernel_residual(const WarpedProfile& p, int samples) {
  double s_ref = profile_scalar_curvature(p, p.closed ? 0.0 : 0.5 * p.t_max);
  if (scalar_curvature_spread(p) > 1e-6 * std::max(1.0, std::abs(s_ref)))
    throw Error(Errc::NonConstantScalarCurvature, "profile does not have constant scalar curvature");
  const StaticPair pair = bh_pair(p);
  double sup = 0.0;
  for (double t : interior_samples(p, samples)) {
    const ChartPoint q(t, 1.0, 0.0);
    const Mat3 ls = L_star(pair.metric, pair.potential, q);
    const Mat3 ginv = pair.metric.eval(q).inverse();
    sup = std::max(sup, g_norm(ginv, ls));
  }
  return sup;
}

YamabeResult yamabe_reduce(const WarpedProfile& p, std::optional<int> target_sign, const YamabeOptions& opt) {
  if (!p.closed) throw Error(Errc::InvalidArgument, "Yamabe reduction needs a periodic profile");
  const int n = opt.n;
  const double L = p.period;
  const Eigen::VectorXd t = spectral::nodes(n, L);
  Eigen::VectorXd a(n), f(n), s(n), w(n);
  for (int i = 0; i < n; ++i) {
    a[i] = p.lapse_at(t[i]).v;
    f[i] = p.radius_at(t[i]).v;
    s[i] = profile_scalar_curvature(p, t[i]);
    w[i] = 4.0 * kPi * a[i] * f[i] * f[i] * spectral::weight(n, L);
  }
  const double vol = w.sum();
  const Eigen::MatrixXd D = spectral::diff_matrix(n, L);
  const Eigen::VectorXd inner = (f.array().square() / a.array()).matrix();
  const Eigen::VectorXd outer = (1.0 / (a.array() * f.array().square())).matrix();
  const Eigen::MatrixXd lap = outer.asDiagonal() * D * inner.asDiagonal() * D;
  Eigen::MatrixXd P = -8.0 * lap + Eigen::MatrixXd(s.asDiagonal());
  // D annihilates the alternating mode, so D q D leaves it without stiffness.
  // Restore its second-derivative weight so it cannot pick up roundoff.
  Eigen::VectorXd alt(n);
  for (int i = 0; i < n; ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
  const double k_nyq = kPi * n / L;
  P += (8.0 * k_nyq * k_nyq / n) * (outer.cwiseProduct(inner)).asDiagonal() * alt * alt.transpose();

  YamabeResult res;
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(P, false);
    double lo = 1e300;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) lo = std::min(lo, es.eigenvalues()[i].real());
    res.lowest_eigenvalue = lo;
  }
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  const int sign = std::abs(res.lowest_eigenvalue) < 1e-9 * scale ? 0 : (res.lowest_eigenvalue > 0 ? 1 : -1);
  if (target_sign && *target_sign != sign)
    throw Error(Errc::InconsistentSign, "requested sign of the Yamabe constant does not match the conformal class");

  Eigen::VectorXd psi = opt.initial_psi ? *opt.initial_psi : Eigen::VectorXd::Ones(n);
  if (psi.size() != n || !(psi.minCoeff() > 0.0))
    throw Error(Errc::InvalidArgument, "initial conformal factor must be positive with n samples");
  auto normalise = [&](Eigen::VectorXd& v) { v *= std::pow(vol / w.dot(v.array().pow(6).matrix()), 1.0 / 6.0); };
  normalise(psi);
  double sbar = w.dot((s.array() * psi.array().square()).matrix()) / vol;

  auto residual = [&](const Eigen::VectorXd& ps, double sb) {
    Eigen::VectorXd F(n + 1);
    F.head(n) = P * ps - sb * ps.array().pow(5).matrix();
    F[n] = (w.dot(ps.array().pow(6).matrix()) - vol) / vol;
    return F;
  };

  Eigen::VectorXd F = residual(psi, sbar);
  auto converged = [&](double step_size) {
    return F.cwiseAbs().maxCoeff() <= opt.tol * scale || step_size < 1e-13;
  };
  int it = 0;
  double last_step = 1.0;
  for (; it < opt.max_iter && !converged(last_step); ++it) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = P;
    J.topLeftCorner(n, n).diagonal() -= 5.0 * sbar * psi.array().pow(4).matrix();
    J.col(n).head(n) = -psi.array().pow(5).matrix();
    J.row(n).head(n) = (6.0 * w.array() * psi.array().pow(5) / vol).matrix().transpose();
    const Eigen::VectorXd step = J.partialPivLu().solve(-F);
    if (!step.allFinite()) throw Error(Errc::NewtonDiverged, "singular Yamabe Jacobian");
    last_step = step.head(n).cwiseAbs().maxCoeff() / psi.cwiseAbs().maxCoeff();
    double alpha = 1.0;
    const double f0 = F.norm();
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      Eigen::VectorXd trial = psi + alpha * step.head(n);
      if (!(trial.minCoeff() > 0.0)) continue;
      normalise(trial);
      const double sb = sbar + alpha * step[n];
      const Eigen::VectorXd Ft = residual(trial, sb);
      if (Ft.norm() < (1.0 - 1e-4 * alpha) * f0) {
        psi = trial;
        sbar = sb;
        F = Ft;
        accepted = true;
        break;
      }
    }
    // At the roundoff floor no step decreases the residual any more.
    if (!accepted && last_step > 1e-10) throw Error(Errc::NewtonDiverged, "Yamabe Newton iteration stalled");
    if (!accepted) break;
  }
  if (F.cwiseAbs().maxCoeff() > std::max(opt.tol * scale, 1e-9 * P.cwiseAbs().maxCoeff() * 1e-3))
    throw Error(Errc::NewtonDiverged, "Yamabe Newton iteration did not converge");

  res.t = t;
  res.psi = psi;
  res.sbar = sbar;
  res.iterations = it;
  const Eigen::VectorXd psi2 = psi.array().square();
  res.conformal = periodic_samples_profile((psi2.array() * a.array()).matrix(),
                                           (psi2.array() * f.array()).matrix(), L, "yamabe");
  double sup = 0.0;
  for (int i = 0; i < n; ++i) sup = std::max(sup, std::abs(profile_scalar_curvature(res.conformal, t[i]) - sbar));
  res.residual = sup;
  return res;
}

}  // namespace curvlab
