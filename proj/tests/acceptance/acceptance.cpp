// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvlab/cli.hpp"
#include "curvlab/errors.hpp"
#include "curvlab/radii_descent.hpp"
#include "curvlab/splitting.hpp"
#include "curvlab/warped_profiles.hpp"

using namespace curvlab;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int failures = 0;

void report(int id, const std::string& title, double limit_s, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0) v.require(secs < limit_s, "runtime " + num(secs) + " s < " + num(limit_s) + " s");
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << v.detail.str()
            << std::endl;
}

RunResult scenario(const std::string& name, std::map<std::string, std::string> params = {}) {
  ScenarioConfig c;
  c.scenario = name;
  c.params = std::move(params);
  return run_scenario(c);
}

void expect_checks(Verdict& v, const RunResult& r, const std::vector<std::string>& names, const std::string& tag = "") {
  for (const auto& n : names) {
    const Check* hit = nullptr;
    for (const auto& c : r.checks)
      if (c.name == n) hit = &c;
    if (!hit) {
      v.require(false, tag + n + " missing");
      continue;
    }
    v.require(hit->pass, tag + n + " " + num(hit->value) + " <= " + num(hit->tolerance));
  }
  for (const auto& f : r.failures)
    if (f.rfind("error", 0) == 0) v.require(false, tag + f);
}

RadiusConfig grid(int n) {
  RadiusConfig c;
  c.grid_x = c.grid_phi = n;
  return c;
}

const std::vector<std::string> kIdentities = {
    "norm_split_total",  "trace_equation",    "xi_norm_vs_trace",  "xi_trace_vs_mean_f", "xi_norm_vs_mean_f",
    "weighted_z_norm",   "LLstar_k_constant", "proportional_xi_zT", "LLstar_k_norm",     "zT_norm"};

}  // namespace

int main() {
  report(1, "Schwarzschild static residuals", 5.0, [](Verdict& v) {
    const auto r = scenario("schwarzschild", {{"mass", "1"}});
    expect_checks(v, r,
                  {"analytic_tensor_residual", "analytic_laplacian_residual", "fd_tensor_residual",
                   "fd_laplacian_residual"});
  });

  report(2, "Weyl rod reproduces Schwarzschild", 30.0, [](Verdict& v) {
    const auto r = scenario("weyl", {{"measure", "rod"}, {"rod_lo", "-1"}, {"rod_hi", "1"}, {"density", "0.5"}});
    expect_checks(v, r, {"static_tensor_residual", "static_laplacian_residual", "fitted_mass"});
  });

  report(3, "Curzon lambda and loop independence", 0, [](Verdict& v) {
    const auto r = scenario("weyl", {{"measure", "atom"}, {"atom_mass", "1"}, {"curzon_points", "50"}});
    expect_checks(v, r, {"curzon_lambda", "lambda_loop"});
    const auto rod = scenario("weyl");
    expect_checks(v, rod, {"lambda_loop"}, "rod ");
  });

  report(4, "Black-hole warped profile", 10.0, [](Verdict& v) {
    const auto r = scenario("warped_ode", {{"a", "0.5"}, {"t_max", "5"}});
    expect_checks(v, r,
                  {"scalar_curvature", "static_kernel", "einstein_horizontal", "einstein_vertical", "einstein_scalar"});
  });

  report(5, "Splitting identity suite", 60.0, [](Verdict& v) {
    auto ids = kIdentities;
    ids.push_back("u_constant");
    ids.push_back("delta_value");
    const auto cyl = scenario("splitting", {{"profile", "cylinder"}, {"n", "256"}});
    expect_checks(v, cyl, ids, "cylinder ");
    const auto pert = scenario("splitting", {{"profile", "perturbed"}, {"n", "256"}});
    expect_checks(v, pert, kIdentities, "perturbed ");
  });

  report(6, "Variational characterisations", 0, [](Verdict& v) {
    for (const std::string prof : {"cylinder", "perturbed"}) {
      const auto r = scenario("splitting", {{"profile", prof}, {"trials", "10"}});
      expect_checks(v, r, {"quadratic_expansion", "zT_minimal", "u_minimal"}, prof + " ");
    }
  });

  report(7, "Curvature radius asymptotics", 120.0, [](Verdict& v) {
    std::vector<double> lt, lgap;
    for (double t : {20.0, 40.0, 80.0}) {
      const auto m = schwarzschild_model(1.0, 3 * t + 10);
      RadiusEngine e(m, grid(512));
      const int i = e.axis_node(m.coordinate_of(t));
      const double tn = e.node_area_radius(i);
      const auto rho = e.curvature_radius(i);
      const double q = rho.value / (tn - std::cbrt(tn));
      v.require(!rho.capped && q >= 0.7 && q <= 1.3, "t=" + num(tn) + " rho/(t - t^(1/3)) = " + num(q));
      lt.push_back(std::log(tn));
      lgap.push_back(std::log(tn - rho.value));
    }
    const Eigen::Map<Eigen::VectorXd> x(lt.data(), 3), y(lgap.data(), 3);
    const double xm = x.mean(), ym = y.mean();
    const double slope = ((x.array() - xm) * (y.array() - ym)).sum() / (x.array() - xm).square().sum();
    v.require(std::abs(slope - 0.33) <= 0.15, "log-log exponent " + num(slope) + " in 0.33 +- 0.15");
  });

  report(8, "Descent on the Schwarzschild family", 300.0, [](Verdict& v) {
    const auto fam = schwarzschild_family(1.0);
    const auto tr = descend(fam, 100.0, 1e-2, 0.2, grid(256));
    const auto& last = tr.points.back();
    v.require(last.buffered, "terminal buffered (" + tr.stop_reason + ", " + std::to_string(tr.steps()) + " steps)");
    v.require(last.u >= 0.5, "u(terminal) = " + num(last.u) + " >= 0.5");
    v.require(last.rho <= 3.0 && last.rho >= 1.0 / 3.0, "rho(terminal) = " + num(last.rho) + " within 3x of m");
    std::vector<int> steps;
    for (double t0 : {30.0, 100.0, 300.0}) steps.push_back(descend(fam, t0, 1e-2, 0.2, grid(256)).steps());
    v.require(steps[0] < steps[1] && steps[1] < steps[2],
              "steps " + std::to_string(steps[0]) + "," + std::to_string(steps[1]) + "," + std::to_string(steps[2]) +
                  " increasing");
    // informational: a larger buffer constant makes the start non-buffered
    std::ostringstream info;
    for (double t0 : {30.0, 100.0, 300.0}) {
      const auto alt = descend(fam, t0, 0.3, 0.3, grid(192));
      info << " t0=" << t0 << ":" << alt.steps() << " steps rho=" << num(alt.points.back().rho)
           << " u=" << num(alt.points.back().u);
    }
    v.detail << "; with c=0.3, d=0.3 (not part of the verdict):" << info.str();
  });

  report(9, "Invariant sweeps", 0, [](Verdict& v) {
    int total = 0, bad = 0;
    auto tally = [&](bool ok) {
      ++total;
      if (!ok) ++bad;
    };
    const auto cfg = grid(192);
    struct Case {
      SymmetricSpaceModel model;
      std::vector<double> xs;
    };
    const auto schw = schwarzschild_model(1.0, 70.0);
    std::vector<Case> cases = {{schw, {schw.coordinate_of(8.0), schw.coordinate_of(20.0)}},
                               {flat_model(10.0), {2.0, 4.0}},
                               {round_cylinder_model(1.0, 1.0), {0.0, 0.3}}};
    int lip = 0, lip_bad = 0, mono = 0, mono_bad = 0, scale = 0, scale_bad = 0;
    for (const auto& cs : cases) {
      RadiusEngine e(cs.model, cfg);
      RadiusEngine es(scale_model(cs.model, 2.0), cfg);
      for (double x : cs.xs) {
        const int i = e.axis_node(x);
        for (const auto& s : e.lipschitz_check(i, 6)) {
          ++lip;
          if (!s.ok) ++lip_bad;
          tally(s.ok);
        }
        bool prev = false;
        for (double c : {0.3, 0.1, 0.03, 0.01, 0.003}) {
          const bool b = e.buffered(i, c).buffered;
          ++mono;
          if (prev && !b) ++mono_bad;
          tally(!(prev && !b));
          prev = b;
        }
        const int j = es.axis_node(2.0 * e.node_x(i));
        for (auto [a, b] : {std::pair{e.curvature_radius(i), es.curvature_radius(j)},
                            std::pair{e.volume_radius(i), es.volume_radius(j)}}) {
          const bool ok = a.capped == b.capped && std::abs(b.value / (2.0 * a.value) - 1.0) < 0.02;
          ++scale;
          if (!ok) ++scale_bad;
          tally(ok);
        }
      }
    }
    // splittings: delta and lambda are scale invariant, the parts L2-orthogonal
    int orth = 0, orth_bad = 0;
    std::vector<WarpedProfile> profiles = {constant_profile(1.0, 1.0),
                                           yamabe_reduce(cosine_profile(1.0, 0.05, 1.0), std::nullopt).conformal,
                                           yamabe_reduce(cosine_profile(1.0, 0.1, 1.0), std::nullopt).conformal};
    for (const auto& p : profiles) {
      const auto m = make_closed_metric(p);
      const auto r = split(m);
      const auto rs = split(make_closed_metric(scaled_profile(p, 2.0)));
      for (auto [a, b] : {std::pair{r.delta, rs.delta}, std::pair{r.lambda_mean, rs.lambda_mean}}) {
        const bool ok = std::abs(a - b) < 1e-6 * std::max(1.0, std::abs(a));
        ++scale;
        if (!ok) ++scale_bad;
        tally(ok);
      }
      const InvariantTensor image = r.z - r.xi;
      const double zz = m.integrate(r.z.norm2());
      for (double cross : {m.integrate(image.inner(r.xi)), m.integrate(r.zT.inner(r.zN))}) {
        const bool ok = std::abs(cross) < 1e-8 * zz;
        ++orth;
        if (!ok) ++orth_bad;
        tally(ok);
      }
    }
    v.require(lip_bad == 0, "lipschitz " + std::to_string(lip - lip_bad) + "/" + std::to_string(lip));
    v.require(scale_bad == 0, "scaling " + std::to_string(scale - scale_bad) + "/" + std::to_string(scale));
    v.require(mono_bad == 0, "buffer monotonicity " + std::to_string(mono - mono_bad) + "/" + std::to_string(mono));
    v.require(orth_bad == 0, "orthogonality " + std::to_string(orth - orth_bad) + "/" + std::to_string(orth));
    v.require(total > 0 && bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " overall");
  });

  return failures == 0 ? 0 : 1;
}
