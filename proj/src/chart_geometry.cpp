#include "curvlab/chart_geometry.hpp"

#include <cmath>
#include <sstream>

#include "curvlab/errors.hpp"

namespace curvlab {

Tensor3 Tensor3::zero() {
  Tensor3 t;
  for (auto& m : t.c) m.setZero();
  return t;
}

Tensor4 Tensor4::zero() {
  Tensor4 t;
  for (auto& m : t.c) m = Tensor3::zero();
  return t;
}

Tensor3 operator+(const Tensor3& a, const Tensor3& b) {
  Tensor3 r;
  for (int k = 0; k < 3; ++k) r[k] = a[k] + b[k];
  return r;
}

Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
  Tensor3 r;
  for (int k = 0; k < 3; ++k) r[k] = a[k] - b[k];
  return r;
}

Tensor3 operator*(double s, const Tensor3& a) {
  Tensor3 r;
  for (int k = 0; k < 3; ++k) r[k] = s * a[k];
  return r;
}

bool ChartDomain::contains(const ChartPoint& p) const {
  for (int k = 0; k < 3; ++k)
    if (!(p[k] >= lo[k] && p[k] <= hi[k])) return false;
  return true;
}

namespace {

Tensor4 operator*(double s, const Tensor4& a) {
  Tensor4 r;
  for (int k = 0; k < 3; ++k) r[k] = s * a[k];
  return r;
}

double step_for(const DiffScheme& s, const ChartPoint& p, int k) {
  return s.step * std::max(1.0, std::abs(p[k]));
}

void validate_scheme(const DiffScheme& s) {
  if (!(s.step > 0.0) || (s.order != 2 && s.order != 4))
    throw Error(Errc::InvalidArgument, "difference scheme needs step > 0 and order 2 or 4");
}

void require_margin(const ChartDomain& d, const ChartPoint& p, const DiffScheme& s, double factor) {
  validate_scheme(s);
  for (int k = 0; k < 3; ++k) {
    const double reach = factor * step_for(s, p, k) * (s.order == 4 ? 2.0 : 1.0);
    if (!(p[k] - reach >= d.lo[k] && p[k] + reach <= d.hi[k])) {
      std::ostringstream os;
      os << "coordinate " << k << " = " << p[k] << " within " << reach << " of chart boundary";
      throw Error(Errc::PointTooCloseToBoundary, os.str());
    }
  }
}

Mat3 checked_inverse(const Mat3& g) {
  Eigen::LLT<Mat3> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite())
    throw Error(Errc::MetricNotPositiveDefinite, "Cholesky factorisation failed");
  // LLT only reads the lower triangle; reject visibly asymmetric input.
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + g.cwiseAbs().maxCoeff()))
    throw Error(Errc::MetricNotPositiveDefinite, "metric components are not symmetric");
  return llt.solve(Mat3::Identity());
}

// Central first difference of f along axis k with spacing h.
template <class T, class F>
T diff1_raw(const F& f, const ChartPoint& p, int k, double h, int order) {
  ChartPoint e = ChartPoint::Zero();
  e[k] = h;
  if (order == 2) return (1.0 / (2.0 * h)) * (f(p + e) - f(p - e));
  return (1.0 / (12.0 * h)) * ((f(p - 2.0 * e) - f(p + 2.0 * e)) + 8.0 * (f(p + e) - f(p - e)));
}

template <class T, class F>
T diff2_raw(const F& f, const ChartPoint& p, int k, double h, int order) {
  ChartPoint e = ChartPoint::Zero();
  e[k] = h;
  const T f0 = f(p);
  if (order == 2) return (1.0 / (h * h)) * ((f(p + e) - 2.0 * f0) + f(p - e));
  return (1.0 / (12.0 * h * h)) *
         ((16.0 * (f(p + e) + f(p - e)) - 30.0 * f0) - (f(p + 2.0 * e) + f(p - 2.0 * e)));
}

template <class T, class F>
T diff1(const F& f, const ChartPoint& p, int k, const DiffScheme& s) {
  const double h = step_for(s, p, k);
  const T coarse = diff1_raw<T>(f, p, k, h, s.order);
  if (!s.richardson) return coarse;
  const T fine = diff1_raw<T>(f, p, k, 0.5 * h, s.order);
  const double w = std::pow(2.0, s.order);
  return (1.0 / (w - 1.0)) * (w * fine - coarse);
}

template <class T, class F>
T diff2(const F& f, const ChartPoint& p, int k, const DiffScheme& s) {
  const double h = step_for(s, p, k);
  const T coarse = diff2_raw<T>(f, p, k, h, s.order);
  if (!s.richardson) return coarse;
  const T fine = diff2_raw<T>(f, p, k, 0.5 * h, s.order);
  const double w = std::pow(2.0, s.order);
  return (1.0 / (w - 1.0)) * (w * fine - coarse);
}

// Mixed partial d_k d_l by nesting first differences.
template <class T, class F>
T diff_mixed(const F& f, const ChartPoint& p, int k, int l, const DiffScheme& s) {
  auto inner = [&](const ChartPoint& q) { return diff1<T>(f, q, l, s); };
  return diff1<T>(inner, p, k, s);
}

// Unchecked evaluations used at shifted stencil points.

MetricJet jet_nocheck(const MetricField& g, const ChartPoint& p, const DiffScheme& s) {
  MetricJet j;
  j.g = g.eval(p);
  j.ginv = checked_inverse(j.g);
  if (g.d1) {
    j.dg = g.d1(p);
  } else {
    for (int k = 0; k < 3; ++k) j.dg[k] = diff1<Mat3>(g.eval, p, k, s);
  }
  if (g.d2) {
    j.ddg = g.d2(p);
  } else if (g.d1) {
    for (int l = 0; l < 3; ++l) {
      Tensor3 dl = diff1<Tensor3>(g.d1, p, l, s);
      for (int k = 0; k < 3; ++k) j.ddg[k][l] = dl[k];
    }
    for (int k = 0; k < 3; ++k)
      for (int l = k + 1; l < 3; ++l) {
        Mat3 avg = 0.5 * (j.ddg[k][l] + j.ddg[l][k]);
        j.ddg[k][l] = avg;
        j.ddg[l][k] = avg;
      }
  } else {
    for (int k = 0; k < 3; ++k) {
      j.ddg[k][k] = diff2<Mat3>(g.eval, p, k, s);
      for (int l = k + 1; l < 3; ++l) {
        j.ddg[k][l] = diff_mixed<Mat3>(g.eval, p, k, l, s);
        j.ddg[l][k] = j.ddg[k][l];
      }
    }
  }
  return j;
}

Tensor3 christoffel_from(const Mat3& ginv, const Tensor3& dg) {
  Tensor3 gam = Tensor3::zero();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      Vec3 low;  // Gamma_{l,ij}
      for (int l = 0; l < 3; ++l) low[l] = 0.5 * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
      const Vec3 up = ginv * low;
      for (int k = 0; k < 3; ++k) {
        gam[k](i, j) = up[k];
        gam[k](j, i) = up[k];
      }
    }
  return gam;
}

// Derivative of the Christoffel symbols, dgam[l][k](i,j) = d_l Gamma^k_ij,
// from the second jet: d_l Gamma^k_ij = -g^{km} d_l g_{mn} Gamma^n_ij
//                                      + g^{km} d_l Gamma_{m,ij}.
std::array<Tensor3, 3> christoffel_derivative(const MetricJet& j, const Tensor3& gam) {
  std::array<Tensor3, 3> out;
  for (int l = 0; l < 3; ++l) {
    out[static_cast<std::size_t>(l)] = Tensor3::zero();
    for (int i = 0; i < 3; ++i)
      for (int jj = i; jj < 3; ++jj) {
        Vec3 low;
        Vec3 g_gamma;
        for (int m = 0; m < 3; ++m) {
          low[m] = 0.5 * (j.ddg[i][l](m, jj) + j.ddg[jj][l](m, i) - j.ddg[m][l](i, jj));
          double acc = 0.0;
          for (int n = 0; n < 3; ++n) acc += j.dg[l](m, n) * gam[n](i, jj);
          g_gamma[m] = acc;
        }
        const Vec3 v = j.ginv * (low - g_gamma);
        for (int k = 0; k < 3; ++k) {
          out[static_cast<std::size_t>(l)][k](i, jj) = v[k];
          out[static_cast<std::size_t>(l)][k](jj, i) = v[k];
        }
      }
  }
  return out;
}

Mat3 ricci_from(const MetricJet& j, const Tensor3& gam) {
  const auto dgam = christoffel_derivative(j, gam);
  Mat3 r = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int jj = i; jj < 3; ++jj) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        acc += dgam[static_cast<std::size_t>(k)][k](i, jj);
        acc -= dgam[static_cast<std::size_t>(jj)][k](i, k);
        for (int l = 0; l < 3; ++l) {
          acc += gam[k](k, l) * gam[l](i, jj);
          acc -= gam[k](jj, l) * gam[l](i, k);
        }
      }
      r(i, jj) = acc;
      r(jj, i) = acc;
    }
  return r;
}

PointGeometry geometry_nocheck(const MetricField& g, const ChartPoint& p, const DiffScheme& s) {
  PointGeometry pg;
  pg.jet = jet_nocheck(g, p, s);
  pg.gamma = christoffel_from(pg.jet.ginv, pg.jet.dg);
  pg.ric = ricci_from(pg.jet, pg.gamma);
  pg.scal = g_trace(pg.jet.ginv, pg.ric);
  return pg;
}

Vec3 grad_nocheck(const ScalarField& phi, const ChartPoint& p, const DiffScheme& s) {
  if (phi.grad) return phi.grad(p);
  Vec3 d;
  for (int k = 0; k < 3; ++k) d[k] = diff1<double>(phi.eval, p, k, s);
  return d;
}

Mat3 partials2_nocheck(const ScalarField& phi, const ChartPoint& p, const DiffScheme& s) {
  if (phi.hess) return phi.hess(p);
  Mat3 h;
  if (phi.grad) {
    for (int l = 0; l < 3; ++l) {
      const Vec3 dl = diff1<Vec3>(phi.grad, p, l, s);
      for (int k = 0; k < 3; ++k) h(k, l) = dl[k];
    }
    return 0.5 * (h + h.transpose());
  }
  for (int k = 0; k < 3; ++k) {
    h(k, k) = diff2<double>(phi.eval, p, k, s);
    for (int l = k + 1; l < 3; ++l) {
      h(k, l) = diff_mixed<double>(phi.eval, p, k, l, s);
      h(l, k) = h(k, l);
    }
  }
  return h;
}

Mat3 hessian_with(const PointGeometry& pg, const ScalarField& phi, const ChartPoint& p,
                  const DiffScheme& s) {
  const Vec3 d = grad_nocheck(phi, p, s);
  Mat3 h = partials2_nocheck(phi, p, s);
  for (int k = 0; k < 3; ++k) h -= d[k] * pg.gamma[k];
  return h;
}

Tensor3 tensor_d1_nocheck(const SymTensorField& a, const ChartPoint& p, const DiffScheme& s) {
  if (a.d1) return a.d1(p);
  Tensor3 t;
  for (int k = 0; k < 3; ++k) t[k] = diff1<Mat3>(a.eval, p, k, s);
  return t;
}

Vec3 divergence_with(const PointGeometry& pg, const SymTensorField& a, const ChartPoint& p,
                     const DiffScheme& s) {
  const Mat3 av = a.eval(p);
  const Tensor3 da = tensor_d1_nocheck(a, p, s);
  const Mat3& gi = pg.jet.ginv;
  Vec3 out = Vec3::Zero();
  for (int j = 0; j < 3; ++j) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        if (gi(i, k) == 0.0) continue;
        double cov = da[k](i, j);
        for (int l = 0; l < 3; ++l) cov -= pg.gamma[l](k, i) * av(l, j) + pg.gamma[l](k, j) * av(i, l);
        acc += gi(i, k) * cov;
      }
    out[j] = -acc;
  }
  return out;
}

double laplacian_nocheck(const MetricField& g, const ScalarField& phi, const ChartPoint& p,
                         const DiffScheme& s) {
  const PointGeometry pg = geometry_nocheck(g, p, s);
  return g_trace(pg.jet.ginv, hessian_with(pg, phi, p, s));
}

// delta of a 1-form: -g^{ij}(d_i w_j - Gamma^k_ij w_k).
template <class F>
double codiff_oneform(const PointGeometry& pg, const F& w, const ChartPoint& p, const DiffScheme& s) {
  const Vec3 w0 = w(p);
  Mat3 dw;
  for (int i = 0; i < 3; ++i) {
    const Vec3 di = diff1<Vec3>(w, p, i, s);
    for (int j = 0; j < 3; ++j) dw(i, j) = di[j];
  }
  Mat3 cov = dw;
  for (int k = 0; k < 3; ++k) cov -= w0[k] * pg.gamma[k];
  return -g_trace(pg.jet.ginv, 0.5 * (cov + cov.transpose()));
}

double L_nocheck(const MetricField& g, const SymTensorField& a, const ChartPoint& p,
                 const DiffScheme& s) {
  const PointGeometry pg = geometry_nocheck(g, p, s);
  ScalarField tr;
  tr.eval = [&](const ChartPoint& q) {
    return g_trace(checked_inverse(g.eval(q)), a.eval(q));
  };
  const double lap_tr = g_trace(pg.jet.ginv, hessian_with(pg, tr, p, s));
  auto w = [&](const ChartPoint& q) {
    const PointGeometry pq = geometry_nocheck(g, q, s);
    return divergence_with(pq, a, q, s);
  };
  const double dd = codiff_oneform(pg, w, p, s);
  return -lap_tr + dd - g_inner(pg.jet.ginv, pg.ric, a.eval(p));
}

}  // namespace

double g_trace(const Mat3& ginv, const Mat3& a) { return (ginv.cwiseProduct(a)).sum(); }

double g_inner(const Mat3& ginv, const Mat3& a, const Mat3& b) {
  return ((ginv * a * ginv).cwiseProduct(b)).sum();
}

double g_norm(const Mat3& ginv, const Mat3& a) { return std::sqrt(std::max(0.0, g_inner(ginv, a, a))); }

double g_inner_vec(const Mat3& ginv, const Vec3& a, const Vec3& b) { return a.dot(ginv * b); }

MetricField flat_metric(const ChartDomain& domain) {
  MetricField g;
  g.domain = domain;
  g.eval = [](const ChartPoint&) { return Mat3::Identity().eval(); };
  g.d1 = [](const ChartPoint&) { return Tensor3::zero(); };
  g.d2 = [](const ChartPoint&) { return Tensor4::zero(); };
  return g;
}

ScalarField constant_field(double c) {
  ScalarField f;
  f.eval = [c](const ChartPoint&) { return c; };
  f.grad = [](const ChartPoint&) { return Vec3::Zero().eval(); };
  f.hess = [](const ChartPoint&) { return Mat3::Zero().eval(); };
  return f;
}

SymTensorField constant_tensor(const Mat3& value) {
  SymTensorField a;
  a.eval = [value](const ChartPoint&) { return value; };
  a.d1 = [](const ChartPoint&) { return Tensor3::zero(); };
  return a;
}

SymTensorField metric_multiple(const MetricField& g, double c) {
  SymTensorField a;
  a.eval = [g, c](const ChartPoint& p) { return (c * g.eval(p)).eval(); };
  if (g.d1) a.d1 = [g, c](const ChartPoint& p) { return c * g.d1(p); };
  return a;
}

MetricField scaled_metric(const MetricField& g, double tau) {
  const double t2 = tau * tau;
  MetricField out;
  out.domain = g.domain;
  out.eval = [g, t2](const ChartPoint& p) { return (t2 * g.eval(p)).eval(); };
  if (g.d1) out.d1 = [g, t2](const ChartPoint& p) { return t2 * g.d1(p); };
  if (g.d2) out.d2 = [g, t2](const ChartPoint& p) { return t2 * g.d2(p); };
  return out;
}

MetricJet metric_jet(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme) {
  require_margin(g.domain, p, scheme, 3.0);
  return jet_nocheck(g, p, scheme);
}

PointGeometry geometry_at(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme) {
  require_margin(g.domain, p, scheme, 3.0);
  return geometry_nocheck(g, p, scheme);
}

Tensor3 christoffel(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme) {
  require_margin(g.domain, p, scheme, 2.0);
  MetricJet j;
  j.g = g.eval(p);
  j.ginv = checked_inverse(j.g);
  if (g.d1) {
    j.dg = g.d1(p);
  } else {
    for (int k = 0; k < 3; ++k) j.dg[k] = diff1<Mat3>(g.eval, p, k, scheme);
  }
  return christoffel_from(j.ginv, j.dg);
}

Mat3 ricci(const MetricField& g, const ChartPoint& p, const DiffScheme& scheme) {
  return geometry_at(g, p, scheme).ric;
}

ScalarAndTraceless scalar_and_traceless(const MetricField& g, const ChartPoint& p,
                                        const DiffScheme& scheme) {
  const PointGeometry pg = geometry_at(g, p, scheme);
  return {pg.scal, pg.ric - (pg.scal / 3.0) * pg.jet.g};
}

Mat3 hessian(const MetricField& g, const ScalarField& phi, const ChartPoint& p,
             const DiffScheme& scheme) {
  const PointGeometry pg = geometry_at(g, p, scheme);
  return hessian_with(pg, phi, p, scheme);
}

double laplacian(const MetricField& g, const ScalarField& phi, const ChartPoint& p,
                 const DiffScheme& scheme) {
  const PointGeometry pg = geometry_at(g, p, scheme);
  return g_trace(pg.jet.ginv, hessian_with(pg, phi, p, scheme));
}

Vec3 gradient_partials(const ScalarField& phi, const ChartPoint& p, const DiffScheme& scheme) {
  validate_scheme(scheme);
  return grad_nocheck(phi, p, scheme);
}

Vec3 divergence(const MetricField& g, const SymTensorField& alpha, const ChartPoint& p,
                const DiffScheme& scheme) {
  const PointGeometry pg = geometry_at(g, p, scheme);
  return divergence_with(pg, alpha, p, scheme);
}

double L_apply(const MetricField& g, const SymTensorField& alpha, const ChartPoint& p,
               const DiffScheme& scheme) {
  require_margin(g.domain, p, scheme, 3.0);
  return L_nocheck(g, alpha, p, scheme);
}

Mat3 L_star(const MetricField& g, const ScalarField& h, const ChartPoint& p,
            const DiffScheme& scheme) {
  const PointGeometry pg = geometry_at(g, p, scheme);
  const Mat3 hs = hessian_with(pg, h, p, scheme);
  const double lap = g_trace(pg.jet.ginv, hs);
  return hs - lap * pg.jet.g - h.eval(p) * pg.ric;
}

SymTensorField L_star_field(const MetricField& g, const ScalarField& h, const DiffScheme& scheme) {
  validate_scheme(scheme);
  SymTensorField a;
  a.eval = [g, h, scheme](const ChartPoint& q) {
    const PointGeometry pg = geometry_nocheck(g, q, scheme);
    const Mat3 hs = hessian_with(pg, h, q, scheme);
    return (hs - g_trace(pg.jet.ginv, hs) * pg.jet.g - h.eval(q) * pg.ric).eval();
  };
  return a;
}

double LL_star(const MetricField& g, const ScalarField& v, const ChartPoint& p,
               const DiffScheme& scheme) {
  require_margin(g.domain, p, scheme, 5.0);
  const PointGeometry pg = geometry_nocheck(g, p, scheme);
  const Mat3& gi = pg.jet.ginv;

  const Mat3 d2v = hessian_with(pg, v, p, scheme);
  const double lapv = g_trace(gi, d2v);

  ScalarField lap_field;
  lap_field.eval = [&](const ChartPoint& q) { return laplacian_nocheck(g, v, q, scheme); };
  const double lap2 = g_trace(gi, hessian_with(pg, lap_field, p, scheme));

  ScalarField scal;
  scal.eval = [&](const ChartPoint& q) { return geometry_nocheck(g, q, scheme).scal; };
  const Vec3 ds = grad_nocheck(scal, p, scheme);
  const double laps = g_trace(gi, hessian_with(pg, scal, p, scheme));
  const Vec3 dv = grad_nocheck(v, p, scheme);
  const double v0 = v.eval(p);

  return 2.0 * lap2 + 2.0 * pg.scal * lapv - g_inner(gi, d2v, pg.ric) +
         v0 * g_inner(gi, pg.ric, pg.ric) + 1.5 * g_inner_vec(gi, ds, dv) + 0.5 * v0 * laps;
}

}  // namespace curvlab
