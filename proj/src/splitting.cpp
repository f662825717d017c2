#include "curvlab/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>

#include <json.hpp>

#include "curvlab/errors.hpp"

namespace curvlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double rel(double lhs, double rhs, double scale) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), scale});
}

// Orthonormal (uniform weights) trigonometric basis with modes |k| <= K.
Eigen::MatrixXd trig_basis(int n, int K) {
  Eigen::MatrixXd B(n, 2 * K + 1);
  const double c = std::sqrt(2.0 / n);
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * kPi * i / n;
    B(i, 0) = 1.0 / std::sqrt(double(n));
    for (int k = 1; k <= K; ++k) {
      B(i, 2 * k - 1) = c * std::cos(k * x);
      B(i, 2 * k) = c * std::sin(k * x);
    }
  }
  return B;
}

// d/dt of the band-limited projection onto modes |k| <= K. Circulant, with
// exactly antisymmetric stencil so constants are annihilated.
Eigen::MatrixXd filtered_diff(int n, int K, double period) {
  const double w = 2.0 * kPi / period;
  Eigen::VectorXd stencil = Eigen::VectorXd::Zero(n);
  for (int d = 1; d < n / 2; ++d) {
    double acc = 0.0;
    for (int k = 1; k <= K; ++k) acc += k * std::sin(2.0 * kPi * ((static_cast<long>(k) * d) % n) / n);
    stencil[d] = -2.0 * w * acc / n;
    stencil[n - d] = -stencil[d];
  }
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) D(i, j) = stencil[((i - j) % n + n) % n];
  return D;
}

}  // namespace

InvariantTensor InvariantTensor::zero(int n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }
InvariantTensor InvariantTensor::metric(int n) { return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n)}; }
InvariantTensor InvariantTensor::operator+(const InvariantTensor& o) const { return {P + o.P, Q + o.Q}; }
InvariantTensor InvariantTensor::operator-(const InvariantTensor& o) const { return {P - o.P, Q - o.Q}; }
InvariantTensor InvariantTensor::operator*(double c) const { return {P * c, Q * c}; }
Eigen::VectorXd InvariantTensor::trace() const { return P + 2.0 * Q; }
Eigen::VectorXd InvariantTensor::norm2() const { return (P.array().square() + 2.0 * Q.array().square()).matrix(); }
Eigen::VectorXd InvariantTensor::inner(const InvariantTensor& o) const {
  return (P.array() * o.P.array() + 2.0 * Q.array() * o.Q.array()).matrix();
}

InvariantTensor ClosedWarpedMetric::ricci() const { return {ric_normal, ric_sphere}; }

InvariantTensor ClosedWarpedMetric::traceless_ricci() const {
  return ricci() - InvariantTensor::metric(n) * (s / 3.0);
}

ClosedWarpedMetric make_closed_metric(const WarpedProfile& p, int n, double tol, int bandwidth) {
  if (!p.closed) throw Error(Errc::InvalidArgument, "splitting needs a closed (periodic) profile");
  if (n < 64) throw Error(Errc::GridTooCoarse, "circle grid needs at least 64 points");
  if (n % 2 != 0) throw Error(Errc::InvalidArgument, "circle grid size must be even");
  ClosedWarpedMetric m;
  m.profile = p;
  m.n = n;
  m.t = spectral::nodes(n, p.period);
  m.a.resize(n);
  m.b.resize(n);
  m.b_s.resize(n);
  m.b_ss.resize(n);
  m.weight.resize(n);
  m.ric_normal.resize(n);
  m.ric_sphere.resize(n);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) {
    const ProfileJet a = p.lapse_at(m.t[i]);
    const ProfileJet b = p.radius_at(m.t[i]);
    if (!(b.v > 0.0) || !(a.v > 0.0)) throw Error(Errc::InvalidArgument, "profile must stay positive");
    m.a[i] = a.v;
    m.b[i] = b.v;
    m.b_s[i] = b.d1 / a.v;
    m.b_ss[i] = b.d2 / (a.v * a.v) - a.d1 * b.d1 / (a.v * a.v * a.v);
    m.weight[i] = 4.0 * kPi * a.v * b.v * b.v * spectral::weight(n, p.period);
    m.ric_normal[i] = -2.0 * m.b_ss[i] / b.v;
    m.ric_sphere[i] = -m.b_ss[i] / b.v + (1.0 - m.b_s[i] * m.b_s[i]) / (b.v * b.v);
    s[i] = m.ric_normal[i] + 2.0 * m.ric_sphere[i];
  }
  m.s = s.mean();
  if (s.maxCoeff() - s.minCoeff() > tol * std::max(1.0, std::abs(m.s)))
    throw Error(Errc::NonConstantScalarCurvature, "closed warped metric must have constant scalar curvature");
  m.vol = m.weight.sum();
  const double ric2 = (m.ric_normal.array().square() + 2.0 * m.ric_sphere.array().square()).mean();
  if (ric2 < 1e-14) throw Error(Errc::InvalidArgument, "metric is numerically flat");
  m.bandwidth = bandwidth > 0 ? std::min(bandwidth, n / 2 - 1) : n / 10;
  m.Ds = (1.0 / m.a.array()).matrix().asDiagonal() * filtered_diff(n, m.bandwidth, p.period);
  return m;
}

WarpedProfile scaled_profile(const WarpedProfile& p, double tau) {
  if (!(tau > 0.0)) throw Error(Errc::InvalidArgument, "scale must be positive");
  WarpedProfile q = p;
  auto scale_jet = [tau](ProfileJet j) {
    j.v *= tau;
    j.d1 *= tau;
    j.d2 *= tau;
    j.d3 *= tau;
    j.d4 *= tau;
    return j;
  };
  auto base = std::make_shared<WarpedProfile>(p);
  q.radius = [base, scale_jet](double t) { return scale_jet(base->radius_at(t)); };
  q.lapse = [base, scale_jet](double t) { return scale_jet(base->lapse_at(t)); };
  for (double& v : q.f) v *= tau;
  for (double& v : q.fp) v *= tau;
  q.kind = p.kind + "_scaled";
  return q;
}

Eigen::VectorXd d_ds(const ClosedWarpedMetric& m, const Eigen::VectorXd& v) { return m.Ds * v; }

Eigen::VectorXd laplacian(const ClosedWarpedMetric& m, const Eigen::VectorXd& v) {
  const Eigen::VectorXd vs = d_ds(m, v);
  return d_ds(m, vs) + (2.0 * m.b_s.array() / m.b.array() * vs.array()).matrix();
}

InvariantTensor hessian(const ClosedWarpedMetric& m, const Eigen::VectorXd& v) {
  const Eigen::VectorXd vs = d_ds(m, v);
  return {d_ds(m, vs), (m.b_s.array() / m.b.array() * vs.array()).matrix()};
}

InvariantTensor L_star(const ClosedWarpedMetric& m, const Eigen::VectorXd& v) {
  const InvariantTensor h = hessian(m, v);
  const Eigen::VectorXd lap = h.trace();
  return {h.P - lap - (v.array() * m.ric_normal.array()).matrix(),
          h.Q - lap - (v.array() * m.ric_sphere.array()).matrix()};
}

Eigen::VectorXd L_apply(const ClosedWarpedMetric& m, const InvariantTensor& alpha) {
  // Double divergence of diag(P, Q, Q): Lap Q + (d/ds + H)((d/ds + H)(P - Q)).
  const Eigen::ArrayXd H = 2.0 * m.b_s.array() / m.b.array();
  const Eigen::VectorXd w = d_ds(m, alpha.P - alpha.Q) + (H * (alpha.P - alpha.Q).array()).matrix();
  const Eigen::VectorXd divdiv = laplacian(m, alpha.Q) + d_ds(m, w) + (H * w.array()).matrix();
  return -laplacian(m, alpha.trace()) + divdiv -
         (m.ric_normal.array() * alpha.P.array() + 2.0 * m.ric_sphere.array() * alpha.Q.array()).matrix();
}

Eigen::MatrixXd assemble_LLstar_matrix(const ClosedWarpedMetric& m) {
  const int n = m.n;
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j) M.col(j) = L_apply(m, L_star(m, Eigen::VectorXd::Unit(n, j)));
  return M;
}

namespace {

double ricci_scale(const ClosedWarpedMetric& m) {
  return (m.ric_normal.array().square() + 2.0 * m.ric_sphere.array().square()).mean();
}

struct ReducedSystem {
  Eigen::MatrixXd basis;      // trigonometric modes, pre-multiplied by the scaling
  Eigen::MatrixXd reduced;    // symmetric-scaled Galerkin matrix, unit diagonal
  Eigen::VectorXd scaling;
};

ReducedSystem reduce(const ClosedWarpedMetric& m) {
  ReducedSystem r;
  const Eigen::MatrixXd B = trig_basis(m.n, m.bandwidth);
  Eigen::MatrixXd MB(m.n, B.cols());
  for (Eigen::Index j = 0; j < B.cols(); ++j) MB.col(j) = L_apply(m, L_star(m, B.col(j)));
  const Eigen::MatrixXd G = B.transpose() * MB;
  // The diagonal grows like k^4; scaling it out keeps the solve accurate.
  r.scaling = (G.diagonal().cwiseAbs().array() + ricci_scale(m)).sqrt().inverse().matrix();
  r.reduced = r.scaling.asDiagonal() * G * r.scaling.asDiagonal();
  r.basis = B * r.scaling.asDiagonal();
  return r;
}

double relative_gap(const Eigen::VectorXd& sv) { return sv.minCoeff() / sv.maxCoeff(); }


}  // namespace

KernelTest ker_lstar_test(const ClosedWarpedMetric& m) {
  KernelTest kt;
  kt.reference = ricci_scale(m);
  const ReducedSystem sys = reduce(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.reduced);
  kt.gap = relative_gap(svd.singularValues());
  kt.trivial = kt.gap >= kKernelThreshold;

  const bool product = (m.b.maxCoeff() - m.b.minCoeff()) < 1e-12 * m.b.maxCoeff() &&
                       (m.a.maxCoeff() - m.a.minCoeff()) < 1e-12 * m.a.maxCoeff();
  if (m.s < 0.0) {
    kt.trivial = true;
  } else if (product) {
    // -2 Lap h = s h on S^2(b) x S^1(length): eigenvalues (2 pi k / length)^2 + j (j + 1) / b^2.
    const double length = m.a.mean() * m.profile.period;
    const double b = m.b.mean();
    const double target = 0.5 * m.s;
    double best = 1e300;
    for (int j = 0; j <= 8; ++j)
      for (int k = 0; k <= 4 * m.n; ++k) {
        const double w = 2.0 * kPi * k / length;
        const double ev = w * w + j * (j + 1) / (b * b);
        best = std::min(best, std::abs(ev - target));
        if (ev > target + 1.0) break;
      }
    kt.closed_form = true;
    kt.spectrum_distance = best / std::max(1.0, target);
    kt.trivial = kt.spectrum_distance > 1e-9;
  }
  return kt;
}

Eigen::VectorXd solve_LLstar(const ClosedWarpedMetric& m, const Eigen::VectorXd& rhs) {
  const ReducedSystem sys = reduce(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (relative_gap(svd.singularValues()) < kKernelThreshold) throw Error(Errc::KerLStarNonTrivial, "L* has a nontrivial kernel on this metric");
  return sys.basis * svd.solve(sys.basis.transpose() * rhs);
}

Eigen::VectorXd solve_u(const ClosedWarpedMetric& m) {
  return solve_LLstar(m, Eigen::VectorXd::Constant(m.n, m.s * m.s / 3.0));
}

TensorSplit split_tensor(const ClosedWarpedMetric& m, const InvariantTensor& z) {
  TensorSplit out;
  out.f = solve_LLstar(m, L_apply(m, z));
  out.image = L_star(m, out.f);
  out.kernel = z - out.image;
  return out;
}

double mean_value(const ClosedWarpedMetric& m, const Eigen::VectorXd& v) { return m.integrate(v) / m.vol; }

SplittingReport split(const ClosedWarpedMetric& m) {
  SplittingReport r;
  r.t = m.t;
  r.s = m.s;
  r.vol = m.vol;
  r.u = solve_u(m);
  r.f = r.u.array() - 1.0;
  r.z = m.traceless_ricci();
  r.xi = r.z - L_star(m, r.f);
  r.delta = -mean_value(m, r.f);
  r.lambda_mean = 1.0 - r.delta;
  r.k = -r.delta * r.u / r.lambda_mean;
  r.zT = L_star(m, r.k) + r.xi;
  r.zN = L_star(m, r.f - r.k);
  r.f_l2 = std::sqrt(m.integrate(r.f.array().square().matrix()));
  r.df_l2 = std::sqrt(m.integrate(d_ds(m, r.f).array().square().matrix()));
  r.lap_f_l2 = std::sqrt(m.integrate(laplacian(m, r.f).array().square().matrix()));
  r.residuals = identity_suite(r, m);
  return r;
}

std::map<std::string, double> identity_suite(const SplittingReport& r, const ClosedWarpedMetric& m) {
  std::map<std::string, double> out;
  const double s = m.s, vol = m.vol;
  const double scale = s * s / 3.0 * vol;
  const double tiny = 1e-12 * scale;
  const InvariantTensor Lu = L_star(m, r.u);
  const double xi2 = m.integrate(r.xi.norm2());
  const double trxi = m.integrate(r.xi.trace());
  const double int_f = m.integrate(r.f);

  out["norm_split_total"] = rel(m.integrate(Lu.norm2()) + xi2, scale, tiny);

  const Eigen::VectorXd trace_lhs = 2.0 * laplacian(m, r.u) + s * r.u;
  const Eigen::VectorXd trace_rhs = r.xi.trace().array() + s;
  out["trace_equation"] = (trace_lhs - trace_rhs).cwiseAbs().maxCoeff() / std::max(1.0, std::abs(s));

  out["xi_norm_vs_trace"] = rel(xi2, -s / 3.0 * trxi, tiny);
  out["xi_trace_vs_mean_f"] = rel(trxi, s * int_f, tiny);
  out["xi_norm_vs_mean_f"] = rel(xi2, -s * s / 3.0 * int_f, tiny);
  out["weighted_z_norm"] = rel(m.integrate((r.u.array() * r.z.norm2().array()).matrix()),
                               m.integrate(r.xi.inner(r.z)), tiny);

  const Eigen::VectorXd llk = L_apply(m, L_star(m, r.k));
  const double llk_target = -s * s / 3.0 * r.delta / r.lambda_mean;
  out["LLstar_k_constant"] = (llk.array() - llk_target).abs().maxCoeff() / std::max(s * s / 3.0, 1e-300);

  const InvariantTensor g = InvariantTensor::metric(m.n);
  const InvariantTensor lhs = r.xi + g * (s / 3.0);
  const InvariantTensor rhs = (r.zT + g * (s / 3.0)) * r.lambda_mean;
  out["proportional_xi_zT"] =
      std::sqrt((lhs - rhs).norm2().maxCoeff()) / std::max(std::abs(s) / std::sqrt(3.0), 1e-300);

  out["LLstar_k_norm"] =
      rel(m.integrate(L_star(m, r.k).norm2()), s * s / 3.0 * r.delta * r.delta / r.lambda_mean * vol, tiny);
  out["zT_norm"] = rel(m.integrate(r.zT.norm2()), s * s / 3.0 * r.delta / r.lambda_mean * vol, tiny);
  return out;
}

VariationalResult zT_variational_check(const ClosedWarpedMetric& m, const SplittingReport& r,
                                       const std::vector<Eigen::VectorXd>& trials, double rel_tol) {
  VariationalResult out;
  out.projected = m.integrate(r.zT.norm2());
  const double s = m.s;
  const Eigen::VectorXd z2 = r.z.norm2();
  for (const auto& phi : trials) {
    if (phi.size() != m.n) throw Error(Errc::InvalidArgument, "trial has the wrong number of samples");
    if (std::abs(mean_value(m, phi)) > 1e-10 * std::max(1.0, phi.cwiseAbs().maxCoeff()))
      throw Error(Errc::TrialNotMeanZero, "trial function must have mean zero");
    const double direct = m.integrate((r.z - L_star(m, phi)).norm2());
    const InvariantTensor hess = hessian(m, phi);
    const Eigen::ArrayXd lap = hess.trace().array();
    const Eigen::ArrayXd grad2 = d_ds(m, phi).array().square();
    const Eigen::ArrayXd onephi2 = (1.0 + phi.array()).square() * z2.array();
    const Eigen::ArrayXd tail = s * s / 3.0 * phi.array().square();
    const Eigen::ArrayXd e1 = onephi2 + hess.norm2().array() + lap.square() - 4.0 / 3.0 * s * grad2 +
                              2.0 * r.z.P.array() * grad2 + tail;
    const Eigen::ArrayXd e2 = onephi2 - hess.norm2().array() + 3.0 * lap.square() - 2.0 * s * grad2 + tail;
    const double expansion = m.integrate(e1.matrix());
    const double bochner = m.integrate(e2.matrix());
    out.direct.push_back(direct);
    out.expansion.push_back(expansion);
    out.expansion_bochner.push_back(bochner);
    const double sc = std::max(direct, out.projected);
    if (out.projected > direct + rel_tol * sc) out.ok = false;
    if (std::abs(direct - expansion) > rel_tol * sc || std::abs(direct - bochner) > rel_tol * sc) out.ok = false;
  }
  return out;
}

MinimizingResult u_minimizing_check(const ClosedWarpedMetric& m, const SplittingReport& r,
                                    const std::vector<Eigen::VectorXd>& trials, double rel_tol) {
  MinimizingResult out;
  out.minimum = m.integrate(L_star(m, r.u / r.lambda_mean).norm2());
  for (const auto& phi : trials) {
    if (phi.size() != m.n) throw Error(Errc::InvalidArgument, "trial has the wrong number of samples");
    if (std::abs(mean_value(m, phi) - 1.0) > 1e-10 * std::max(1.0, phi.cwiseAbs().maxCoeff()))
      throw Error(Errc::TrialNotMeanOne, "trial function must have mean one");
    const double v = m.integrate(L_star(m, phi).norm2());
    out.values.push_back(v);
    if (out.minimum > v + rel_tol * std::max(v, out.minimum)) out.ok = false;
  }
  return out;
}

std::string to_json(const SplittingReport& r) {
  using nlohmann::json;
  auto arr = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j;
  j["format_version"] = 1;
  j["scalar_curvature"] = r.s;
  j["volume"] = r.vol;
  j["delta"] = r.delta;
  j["lambda"] = r.lambda_mean;
  j["norms"] = {{"f_l2", r.f_l2}, {"df_l2", r.df_l2}, {"lap_f_l2", r.lap_f_l2}};
  j["t"] = arr(r.t);
  j["u"] = arr(r.u);
  j["f"] = arr(r.f);
  j["k"] = arr(r.k);
  j["residuals"] = r.residuals;
  return j.dump(2);
}

Eigen::VectorXd with_mean(const ClosedWarpedMetric& m, const Eigen::VectorXd& v, double target) {
  return (v.array() - mean_value(m, v) + target).matrix();
}

Eigen::VectorXd random_trig_trial(const ClosedWarpedMetric& m, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_int_distribution<int> k(1, 4);
  const int k1 = k(rng), k2 = k(rng);
  const double c1 = u(rng), c2 = u(rng), ph = u(rng) * 6;
  const double w = 2 * std::numbers::pi / m.profile.period;
  Eigen::VectorXd v(m.n);
  for (int i = 0; i < m.n; ++i) v[i] = c1 * std::cos(w * k1 * m.t[i] + ph) + c2 * std::sin(w * k2 * m.t[i]);
  return v;
}

}  // namespace curvlab
