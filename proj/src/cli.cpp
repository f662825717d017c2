#include "curvlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "curvlab/errors.hpp"
#include "curvlab/exact_solutions.hpp"
#include "curvlab/radii_descent.hpp"
#include "curvlab/splitting.hpp"
#include "curvlab/warped_profiles.hpp"
#include "curvlab/weyl.hpp"

namespace curvlab {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// parameter tables

enum class Kind { Real, Int, Bool, Choice, RealList };

struct Param {
  std::string key;
  Kind kind;
  std::string fallback;
  double lo = -INFINITY, hi = INFINITY;
  bool lo_open = false, hi_open = false;
  std::vector<std::string> choices;
  std::string doc;
  bool gridded = false;  // --grid overrides it
};

Param real(std::string key, std::string def, double lo, double hi, bool lo_open, bool hi_open, std::string doc) {
  return {std::move(key), Kind::Real, std::move(def), lo, hi, lo_open, hi_open, {}, std::move(doc)};
}
Param positive(std::string key, std::string def, std::string doc) {
  return real(std::move(key), std::move(def), 0.0, INFINITY, true, false, std::move(doc));
}
Param integer(std::string key, std::string def, double lo, double hi, std::string doc, bool gridded = false) {
  Param p{std::move(key), Kind::Int, std::move(def), lo, hi, false, false, {}, std::move(doc)};
  p.gridded = gridded;
  return p;
}
Param choice(std::string key, std::string def, std::vector<std::string> choices, std::string doc) {
  return {std::move(key), Kind::Choice, std::move(def), 0, 0, false, false, std::move(choices), std::move(doc)};
}
Param list(std::string key, std::string def, std::string doc) {
  return {std::move(key), Kind::RealList, std::move(def), 0.0, INFINITY, true, false, {}, std::move(doc)};
}

struct Scenario {
  std::string name;
  std::string summary;
  std::string csv_columns;
  std::vector<Param> params;
};

const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> all = {
      {"schwarzschild",
       "Static vacuum residuals of Schwarzschild on a (t, theta) grid, analytic and finite-difference.",
       "scheme,sup_tensor_residual,sup_laplacian_residual,rms_tensor_residual,rms_laplacian_residual,samples",
       {positive("mass", "1", "mass m"),
        positive("t_min", "2.5", "inner areal radius, must exceed 2m"),
        positive("t_max", "10", "outer areal radius"),
        integer("samples", "20", 2, 400, "grid points per axis", true),
        real("fd_step", "1e-4", 0.0, 0.1, true, false, "relative finite-difference step"),
        positive("tol_analytic", "1e-8", "bound on analytic residuals"),
        positive("tol_fd", "1e-5", "bound on finite-difference residuals")}},
      {"weyl",
       "Weyl metric from an axis measure: static residual, asymptotic mass, Curzon lambda and loop checks.",
       "r,z,nu,lambda",
       {choice("measure", "rod", {"rod", "atom", "rod_atom", "inverse_rod"}, "axis measure"),
        real("rod_lo", "-1", -1e6, 1e6, false, false, "rod lower end"),
        real("rod_hi", "1", -1e6, 1e6, false, false, "rod upper end"),
        positive("density", "0.5", "rod density (or scale of 1/(1+|z|))"),
        real("atom_z", "0", -1e6, 1e6, false, false, "atom height"),
        positive("atom_mass", "1", "atom mass"),
        positive("r_lo", "0.5", "box inner radius"),
        positive("r_hi", "3", "box outer radius"),
        real("z_lo", "-2", -1e6, 1e6, false, false, "box bottom"),
        real("z_hi", "2", -1e6, 1e6, false, false, "box top"),
        integer("samples", "10", 2, 200, "grid points per axis", true),
        list("radii", "20,40,80", "radii for the mass fit"),
        positive("mass_tol", "0.02", "relative tolerance on the fitted mass"),
        positive("residual_tol", "1e-4", "bound on the static residual"),
        integer("curzon_points", "50", 1, 100000, "random points for the Curzon lambda check"),
        positive("curzon_tol", "1e-4", "relative tolerance of lambda against the closed form"),
        positive("loop_tol", "1e-6", "bound on the loop integral of d lambda")}},
      {"warped_ode",
       "Hyperbolic black-hole warped profile: scalar curvature, static kernel and 4D Einstein checks.",
       "t,f",
       {positive("a", "0.5", "profile parameter f(0)"),
        positive("t_max", "5", "half-length of the solved interval"),
        positive("tol", "1e-10", "first-integral tolerance of the integrator"),
        positive("s_tol", "1e-5", "bound on sup |s + 6|"),
        positive("kernel_tol", "1e-4", "bound on sup |L*(f')|"),
        positive("einstein_tol", "1e-3", "bound on the Einstein deviation"),
        integer("einstein_points", "20", 1, 10000, "random points for the Einstein check")}},
      {"splitting",
       "Splitting of the traceless Ricci tensor on a closed warped product, with the identity suite.",
       "t,u,f,k",
       {choice("profile", "cylinder", {"cylinder", "perturbed"}, "round cylinder or Yamabe-reduced cosine"),
        positive("radius", "1", "sphere radius"),
        positive("period", "1", "circle length"),
        real("eps", "0.05", 0.0, 0.5, false, true, "cosine perturbation amplitude"),
        integer("n", "256", 64, 4096, "circle grid", true),
        integer("trials", "10", 1, 1000, "random trials for the variational checks"),
        real("identity_tol", "0", 0.0, 1.0, false, false, "identity bound; 0 picks 1e-5 (cylinder) or 1e-4"),
        positive("value_tol", "1e-6", "tolerance on u = 2/3 and delta = 1/3 for the cylinder"),
        positive("variational_tol", "1e-6", "relative tolerance of the expansions")}},
      {"radii",
       "Curvature and volume radii, buffer predicates and the Lipschitz property at sample points.",
       "t,rho,rho_capped,nu,nu_capped,buffer_value,buffered,strong_min_ratio",
       {choice("model", "schwarzschild", {"schwarzschild", "flat", "cylinder"}, "model space"),
        positive("mass", "1", "schwarzschild mass"),
        positive("radius", "1", "cylinder sphere radius"),
        positive("period", "1", "cylinder circle length"),
        positive("extent", "100", "flat chart radius"),
        list("points", "20,40,80", "sample areal radii (coordinates for flat and cylinder)"),
        real("c_o", "1e-3", 0.0, 1.0, true, true, "curvature radius constant"),
        real("mu", "1e-2", 0.0, 1.0, true, true, "volume radius constant"),
        integer("grid", "256", 32, 4096, "fast-marching grid per axis", true),
        real("c", "0.01", 0.0, 0.5, true, true, "buffer constant"),
        real("d", "0.2", 0.0, 1.0, true, true, "strong buffer constant"),
        integer("lipschitz_samples", "6", 1, 100, "axis points per Lipschitz check")}},
      {"descent",
       "Descent through non-buffered base points on a Schwarzschild family.",
       "step,t,rho,u,buffered,strongly_buffered",
       {positive("mass", "1", "schwarzschild mass"),
        positive("t_start", "100", "starting areal radius"),
        real("c", "0.01", 0.0, 0.5, true, true, "buffer constant"),
        real("d", "0.2", 0.0, 1.0, true, true, "strong buffer constant"),
        real("c_o", "1e-3", 0.0, 1.0, true, true, "curvature radius constant"),
        integer("grid", "256", 32, 4096, "fast-marching grid per axis", true),
        integer("max_steps", "20", 1, 1000, "step limit")}},
  };
  return all;
}

const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : scenarios())
    if (s.name == name) return s;
  throw Error(Errc::ConfigInvalid, "unknown scenario '" + name + "'");
}

class Params {
 public:
  Params(const Scenario& sc, const ScenarioConfig& cfg) {
    std::set<std::string> known;
    for (const auto& p : sc.params) known.insert(p.key);
    for (const auto& [k, v] : cfg.params)
      if (!known.count(k)) throw Error(Errc::ConfigInvalid, "unknown key '" + k + "' for scenario " + sc.name);
    for (const auto& p : sc.params) {
      std::string raw = p.fallback;
      if (auto it = cfg.params.find(p.key); it != cfg.params.end()) raw = it->second;
      if (p.gridded && cfg.grid) raw = std::to_string(*cfg.grid);
      parse(p, raw);
      resolved_[p.key] = raw;
    }
  }

  double real(const std::string& k) const { return reals_.at(k); }
  int integer(const std::string& k) const { return static_cast<int>(reals_.at(k)); }
  const std::string& text(const std::string& k) const { return texts_.at(k); }
  const std::vector<double>& values(const std::string& k) const { return lists_.at(k); }
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  static double number(const Param& p, const std::string& raw) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(raw, &used);
    } catch (...) {
      throw Error(Errc::ConfigInvalid, "key '" + p.key + "' expects a number, got '" + raw + "'");
    }
    if (trim(raw.substr(used)) != "" || !std::isfinite(v))
      throw Error(Errc::ConfigInvalid, "key '" + p.key + "' expects a number, got '" + raw + "'");
    bool ok = (p.lo_open ? v > p.lo : v >= p.lo) && (p.hi_open ? v < p.hi : v <= p.hi);
    if (!ok) throw Error(Errc::ConfigInvalid, "key '" + p.key + "' = " + raw + " is out of range");
    return v;
  }

  void parse(const Param& p, const std::string& raw) {
    switch (p.kind) {
      case Kind::Real:
        reals_[p.key] = number(p, raw);
        break;
      case Kind::Int: {
        double v = number(p, raw);
        if (v != std::floor(v)) throw Error(Errc::ConfigInvalid, "key '" + p.key + "' expects an integer");
        reals_[p.key] = v;
        break;
      }
      case Kind::Bool:
        if (raw != "true" && raw != "false") throw Error(Errc::ConfigInvalid, "key '" + p.key + "' expects true/false");
        reals_[p.key] = raw == "true";
        break;
      case Kind::Choice:
        if (std::find(p.choices.begin(), p.choices.end(), raw) == p.choices.end())
          throw Error(Errc::ConfigInvalid, "key '" + p.key + "' has no option '" + raw + "'");
        texts_[p.key] = raw;
        break;
      case Kind::RealList: {
        std::vector<double> out;
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(number(p, trim(item)));
        if (out.empty()) throw Error(Errc::ConfigInvalid, "key '" + p.key + "' expects a list");
        lists_[p.key] = out;
        break;
      }
    }
  }

  std::map<std::string, double> reals_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, std::vector<double>> lists_;
  std::map<std::string, std::string> resolved_;
};

// ---------------------------------------------------------------------------

struct Context {
  explicit Context(RunResult& r) : out(r) {}
  RunResult& out;
  json summary = json::object();
  std::ostringstream csv;

  void check(const std::string& name, const std::string& identity, double value, double tol) {
    Check c{name, identity, value, tol, std::isfinite(value) && value <= tol};
    if (!c.pass) out.failures.push_back(name);
    out.checks.push_back(c);
  }
  // lower bounds read as value >= tol
  void check_at_least(const std::string& name, const std::string& identity, double value, double tol) {
    Check c{name, identity, value, tol, std::isfinite(value) && value >= tol};
    if (!c.pass) out.failures.push_back(name);
    out.checks.push_back(c);
  }
  void warn(const std::string& w) { out.warnings.push_back(w); }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) csv << (i ? "," : "") << cells[i];
    csv << '\n';
  }
};

void run_schwarzschild(const Params& p, Context& cx) {
  const double m = p.real("mass");
  const double t0 = p.real("t_min"), t1 = p.real("t_max");
  if (!(t0 > 2 * m)) throw Error(Errc::ConfigInvalid, "t_min must exceed 2 * mass");
  if (!(t1 > t0)) throw Error(Errc::ConfigInvalid, "t_max must exceed t_min");
  const int n = p.integer("samples");
  const auto grid = product_grid(Vec3(t0, 0.4, 0.0), Vec3(t1, kPi - 0.4, 0.0), {n, n, 1});
  const auto an = static_residual(schwarzschild(m, true), grid);
  const auto fd = static_residual(schwarzschild(m, false), grid, DiffScheme{p.real("fd_step"), 2, false});
  cx.row({"scheme", "sup_tensor_residual", "sup_laplacian_residual", "rms_tensor_residual", "rms_laplacian_residual",
          "samples"});
  for (auto [name, r] : {std::pair{"analytic", an}, std::pair{"finite_difference", fd}})
    cx.row({name, fmt(r.sup_tensor_residual), fmt(r.sup_laplacian_residual), fmt(r.rms_tensor_residual),
            fmt(r.rms_laplacian_residual), std::to_string(r.sample_count)});
  const std::string tensor = "static vacuum equation h Ric = D^2 h, sup of |h Ric - D^2 h|_g";
  const std::string lap = "harmonic potential Lap h = 0, sup |Lap h|";
  cx.check("analytic_tensor_residual", tensor, an.sup_tensor_residual, p.real("tol_analytic"));
  cx.check("analytic_laplacian_residual", lap, an.sup_laplacian_residual, p.real("tol_analytic"));
  cx.check("fd_tensor_residual", tensor, fd.sup_tensor_residual, p.real("tol_fd"));
  cx.check("fd_laplacian_residual", lap, fd.sup_laplacian_residual, p.real("tol_fd"));
  const auto fit = asymptotic_mass_fit(schwarzschild(m, true), {20 * m, 40 * m, 80 * m});
  cx.summary["fitted_mass"] = fit.m;
  cx.summary["samples"] = an.sample_count;
}

RieszMeasure weyl_measure(const Params& p) {
  const std::string kind = p.text("measure");
  RieszMeasure mu;
  if (kind == "rod" || kind == "rod_atom" || kind == "inverse_rod") {
    if (!(p.real("rod_hi") > p.real("rod_lo"))) throw Error(Errc::ConfigInvalid, "rod_hi must exceed rod_lo");
    if (kind == "inverse_rod")
      mu.rods.push_back(Rod::inverse_one_plus_abs(p.real("rod_lo"), p.real("rod_hi"), p.real("density")));
    else
      mu.rods.push_back(Rod::constant(p.real("rod_lo"), p.real("rod_hi"), p.real("density")));
  }
  if (kind == "atom" || kind == "rod_atom") mu.atoms.push_back({p.real("atom_z"), p.real("atom_mass")});
  try {
    mu.validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  return mu;
}

void run_weyl(const Params& p, const ScenarioConfig& cfg, Context& cx) {
  const RieszMeasure mu = weyl_measure(p);
  WeylBox box{p.real("r_lo"), p.real("r_hi"), p.real("z_lo"), p.real("z_hi")};
  if (!(box.r_hi > box.r_lo) || !(box.z_hi > box.z_lo)) throw Error(Errc::ConfigInvalid, "empty box");
  const auto sol = build(mu, box);
  const int n = p.integer("samples");
  const double er = 0.02 * (box.r_hi - box.r_lo), ez = 0.02 * (box.z_hi - box.z_lo);
  const auto grid = product_grid(Vec3(box.r_lo + er, box.z_lo + ez, 0), Vec3(box.r_hi - er, box.z_hi - ez, 0), {n, n, 1});
  const auto res = static_residual(sol.pair, grid);
  cx.check("static_tensor_residual", "static vacuum equation h Ric = D^2 h for h = e^nu",
           res.sup_tensor_residual, p.real("residual_tol"));
  cx.check("static_laplacian_residual", "harmonic potential Lap h = 0", res.sup_laplacian_residual,
           p.real("residual_tol"));
  const double M = mu.total_mass();
  const auto fit = asymptotic_mass_fit(sol.pair, p.values("radii"));
  cx.check("fitted_mass", "h = 1 - m/t + O(t^-2) along a ray, relative error of m against the total mass",
           std::abs(fit.m - M) / M, p.real("mass_tol"));
  cx.summary["total_mass"] = M;
  cx.summary["fitted_mass"] = fit.m;
  cx.summary["fit_residual"] = fit.residual;

  if (p.text("measure") == "atom") {
    std::mt19937 rng(cfg.seed);
    std::uniform_real_distribution<double> ur(0.2, 3.0), uz(-3.0, 3.0);
    const double m = p.real("atom_mass"), za = p.real("atom_z");
    double worst = 0.0;
    for (int k = 0; k < p.integer("curzon_points"); ++k) {
      double r = ur(rng), z = uz(rng) + za;
      double t2 = r * r + (z - za) * (z - za);
      double exact = -m * m * r * r / (2 * t2 * t2);
      double lam = lambda_field(mu, r, z);
      worst = std::max(worst, std::abs(lam - exact) / std::abs(exact));
    }
    cx.check("curzon_lambda", "path-integrated lambda against -m^2 r^2 / (2 t^4), worst relative error", worst,
             p.real("curzon_tol"));
  }
  const auto [zlo, zhi] = mu.support_extent();
  const double zr0 = zlo - 1.5, zr1 = zhi + 1.5;
  double loop = lambda_along(mu, {{0.2, zr0}, {2.0, zr0}, {2.0, zr1}, {0.2, zr1}, {0.2, zr0}});
  cx.check("lambda_loop", "closed-loop integral of d lambda off the support", std::abs(loop), p.real("loop_tol"));

  cx.row({"r", "z", "nu", "lambda"});
  for (const auto& q : grid) cx.row({fmt(q[0]), fmt(q[1]), fmt(sol.nu(q[0], q[1])), fmt(sol.lambda(q[0], q[1]))});
}

void run_warped_ode(const Params& p, const ScenarioConfig& cfg, Context& cx) {
  const double a = p.real("a"), tmax = p.real("t_max");
  const auto prof = solve_bh_profile(a, tmax, p.real("tol"));
  double worst_s = 0.0;
  for (int k = 0; k <= 200; ++k) {
    double t = -0.95 * tmax + 1.9 * tmax * k / 200.0;
    worst_s = std::max(worst_s, std::abs(profile_scalar_curvature(prof, t) + 6.0));
  }
  cx.check("scalar_curvature", "constant scalar curvature s = -6, sup |s + 6|", worst_s, p.real("s_tol"));
  cx.check("static_kernel", "f' lies in the kernel of L*, sup |L*(f')|_g", kernel_residual(prof), p.real("kernel_tol"));
  const StaticPair pair = bh_pair(prof);
  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> ut(0.3, 0.875 * tmax), uth(0.4, kPi - 0.4), uv(-1.0, 1.0);
  double wh = 0.0, wv = 0.0, ws = 0.0;
  for (int k = 0; k < p.integer("einstein_points"); ++k) {
    const ChartPoint q(ut(rng), uth(rng), 0.0);
    const Vec3 H(uv(rng), uv(rng), uv(rng));
    const Mat3 g = pair.metric.eval(q);
    const auto r = warped4_ricci(pair, q, H);
    wh = std::max(wh, std::abs(r.horizontal + 3.0 * H.dot(g * H)));
    wv = std::max(wv, std::abs(r.vertical + 3.0));
    ws = std::max(ws, std::abs(scalar4(pair, q) + 12.0));
  }
  const double tol = p.real("einstein_tol");
  cx.check("einstein_horizontal", "warped 4-metric Ric(H, H) = -3 g(H, H)", wh, tol);
  cx.check("einstein_vertical", "warped 4-metric Ric(V, V) = -3 for the unit fibre vector", wv, tol);
  cx.check("einstein_scalar", "warped 4-metric scalar curvature -12", ws, tol);
  cx.summary["f_second_derivative_at_0"] = prof.radius_at(0.0).d2;
  write_profile_csv(prof, cx.csv);
}

void run_splitting(const Params& p, const ScenarioConfig& cfg, Context& cx) {
  const bool cyl = p.text("profile") == "cylinder";
  WarpedProfile prof = cyl ? constant_profile(p.real("radius"), p.real("period"))
                           : yamabe_reduce(cosine_profile(p.real("radius"), p.real("eps"), p.real("period")),
                                           std::nullopt)
                                 .conformal;
  const auto m = make_closed_metric(prof, p.integer("n"));
  const auto r = split(m);
  double tol = p.real("identity_tol");
  if (tol == 0.0) tol = cyl ? 1e-5 : 1e-4;
  static const std::map<std::string, std::string> identities = {
      {"norm_split_total", "int |L* u|^2 + int |xi|^2 = (s^2/3) vol"},
      {"trace_equation", "2 Lap u + s u = tr xi + s pointwise"},
      {"xi_norm_vs_trace", "int |xi|^2 = -(s/3) int tr xi"},
      {"xi_trace_vs_mean_f", "int tr xi = s int f"},
      {"xi_norm_vs_mean_f", "int |xi|^2 = -(s^2/3) int f"},
      {"weighted_z_norm", "int u |z|^2 = int <xi, z>"},
      {"LLstar_k_constant", "L L* k = -(s^2/3) delta / lambda pointwise"},
      {"proportional_xi_zT", "xi + (s/3) g = lambda (z^T + (s/3) g)"},
      {"LLstar_k_norm", "int |L* k|^2 = (s^2/3) delta^2 vol / lambda"},
      {"zT_norm", "int |z^T|^2 = (s^2/3) delta vol / lambda"},
  };
  for (const auto& [name, value] : r.residuals) {
    auto it = identities.find(name);
    cx.check(name, it == identities.end() ? name : it->second, value, tol);
  }
  if (cyl) {
    cx.check("u_constant", "u = 2/3 on the round cylinder, sup |u - 2/3|", (r.u.array() - 2.0 / 3.0).abs().maxCoeff(),
             p.real("value_tol"));
    cx.check("delta_value", "delta = 1/3 on the round cylinder", std::abs(r.delta - 1.0 / 3.0), p.real("value_tol"));
  }
  // variational characterisations
  std::mt19937 rng(cfg.seed);
  std::vector<Eigen::VectorXd> zero_trials{with_mean(m, r.f - r.k, 0.0)};
  std::vector<Eigen::VectorXd> one_trials{Eigen::VectorXd::Ones(m.n)};
  for (int k = 0; k < p.integer("trials"); ++k) {
    zero_trials.push_back(with_mean(m, random_trig_trial(m, rng), 0.0));
    one_trials.push_back(with_mean(m, random_trig_trial(m, rng), 1.0));
  }
  const auto var = zT_variational_check(m, r, zero_trials);
  double worst_exp = 0.0, worst_min = 0.0;
  for (size_t k = 0; k < zero_trials.size(); ++k) {
    double d = std::max(var.direct[k], 1e-300);
    worst_exp = std::max({worst_exp, std::abs(var.expansion[k] - var.direct[k]) / d,
                          std::abs(var.expansion_bochner[k] - var.direct[k]) / d});
    worst_min = std::max(worst_min, (var.projected - var.direct[k]) / d);
  }
  cx.check("quadratic_expansion", "int |z - L* phi|^2 against its expansion in phi, both forms, relative", worst_exp,
           p.real("variational_tol"));
  cx.check("zT_minimal", "int |z^T|^2 <= int |z - L* phi|^2 over mean-zero trials, relative excess",
           std::max(0.0, worst_min), 1e-8);
  const auto mn = u_minimizing_check(m, r, one_trials);
  double excess = 0.0;
  for (double v : mn.values) excess = std::max(excess, (mn.minimum - v) / std::max(v, 1e-300));
  cx.check("u_minimal", "int |L*(u/lambda)|^2 <= int |L* w|^2 over mean-one trials, relative excess",
           std::max(0.0, excess), 1e-8);

  cx.summary["scalar_curvature"] = r.s;
  cx.summary["volume"] = r.vol;
  cx.summary["delta"] = r.delta;
  cx.summary["lambda"] = r.lambda_mean;
  cx.summary["f_l2"] = r.f_l2;
  cx.summary["df_l2"] = r.df_l2;
  cx.summary["lap_f_l2"] = r.lap_f_l2;
  cx.row({"t", "u", "f", "k"});
  for (int i = 0; i < m.n; ++i) cx.row({fmt(r.t[i]), fmt(r.u[i]), fmt(r.f[i]), fmt(r.k[i])});
}

struct RadiiPoint {
  double t = 0.0;
  RadiusResult rho, nu;
  BufferReport b;
  StrongBufferReport sb;
  bool mono_bad = false;
  int lip_total = 0, lip_bad = 0;
  double nu_excess = 0.0;
};

void run_radii(const Params& p, Context& cx) {
  const std::string kind = p.text("model");
  RadiusConfig rc;
  rc.c_o = p.real("c_o");
  rc.mu = p.real("mu");
  rc.grid_x = rc.grid_phi = p.integer("grid");
  const double c = p.real("c"), d = p.real("d");
  const int lip_samples = p.integer("lipschitz_samples");
  std::vector<SymmetricSpaceModel> models;
  for (double t : p.values("points")) {
    if (kind == "schwarzschild") {
      if (!(t > 2 * p.real("mass"))) throw Error(Errc::ConfigInvalid, "points must lie outside the horizon");
      models.push_back(schwarzschild_model(p.real("mass"), 3 * t + 10 * p.real("mass")));
    } else if (kind == "flat") {
      if (!(t < p.real("extent"))) throw Error(Errc::ConfigInvalid, "points must lie inside the flat chart");
      models.push_back(flat_model(p.real("extent")));
    } else {
      models.push_back(round_cylinder_model(p.real("radius"), p.real("period")));
    }
  }
  // one engine per point, so points run concurrently
  auto work = [&](const SymmetricSpaceModel& model, double t) {
    RadiusEngine e(model, rc);
    const int i = e.axis_node(model.coordinate_of(t));
    RadiiPoint r;
    r.t = e.node_area_radius(i);
    r.rho = e.curvature_radius(i);
    r.nu = e.volume_radius(i);
    r.b = e.buffered(i, c);
    r.sb = e.strongly_buffered(i, d);
    r.mono_bad = e.buffered(i, 0.5 * c).buffered < r.b.buffered;
    for (const auto& s : e.lipschitz_check(i, lip_samples)) {
      ++r.lip_total;
      if (!s.ok) ++r.lip_bad;
    }
    if (model.periodic) r.nu_excess = r.nu.value / std::cbrt(e.total_volume() / (rc.mu * 4 * kPi / 3)) - 1;
    return r;
  };
  std::vector<std::future<RadiiPoint>> jobs;
  for (std::size_t k = 0; k < models.size(); ++k)
    jobs.push_back(std::async(std::launch::async, work, std::cref(models[k]), p.values("points")[k]));

  cx.row({"t", "rho", "rho_capped", "nu", "nu_capped", "buffer_value", "buffered", "strong_min_ratio"});
  json rows = json::array();
  int lip_bad = 0, lip_total = 0, mono_bad = 0;
  double nu_excess = 0.0;
  for (auto& job : jobs) {
    const RadiiPoint r = job.get();
    lip_bad += r.lip_bad;
    lip_total += r.lip_total;
    mono_bad += r.mono_bad;
    nu_excess = std::max(nu_excess, r.nu_excess);
    if (r.rho.capped) cx.warn("curvature radius capped by the chart at t = " + fmt(r.t));
    cx.row({fmt(r.t), fmt(r.rho.value), r.rho.capped ? "1" : "0", fmt(r.nu.value), r.nu.capped ? "1" : "0",
            fmt(r.b.value), r.b.buffered ? "1" : "0", fmt(r.sb.min_ratio)});
    rows.push_back({{"t", r.t}, {"rho", r.rho.value}, {"nu", r.nu.value}, {"buffered", r.b.buffered},
                    {"strongly_buffered", r.sb.strongly_buffered}});
  }
  cx.check("lipschitz_failures", "rho(y) >= dist(y, boundary of B_x(rho(x))) at sampled axis points", lip_bad, 0);
  cx.check("buffer_monotonicity", "buffered for c implies buffered for c/2", mono_bad, 0);
  if (kind == "cylinder")
    cx.check("volume_radius_bound", "nu <= (vol / (mu omega_3))^(1/3), relative excess", std::max(0.0, nu_excess), 0.0);
  cx.summary["points"] = rows;
  cx.summary["lipschitz_samples"] = lip_total;
}

void run_descent(const Params& p, Context& cx) {
  RadiusConfig rc;
  rc.c_o = p.real("c_o");
  rc.grid_x = rc.grid_phi = p.integer("grid");
  const double m = p.real("mass");
  if (!(p.real("t_start") > 2 * m)) throw Error(Errc::ConfigInvalid, "t_start must lie outside the horizon");
  DescentTrace tr;
  try {
    tr = descend(schwarzschild_family(m), p.real("t_start"), p.real("c"), p.real("d"), rc, p.integer("max_steps"));
  } catch (const Error& e) {
    if (e.code() != Errc::NoDescent && e.code() != Errc::OscillationViolated) throw;
    cx.out.failures.push_back(std::string("descent: ") + e.what());
    cx.summary["error"] = e.what();
    return;
  }
  double worst = 0.0;
  for (size_t j = 1; j < tr.points.size(); ++j) worst = std::max(worst, tr.points[j].rho / tr.points[j - 1].rho);
  if (tr.points.size() > 1)
    cx.check("contraction", "rho_j <= (d + 2c) rho_(j-1), worst ratio over d + 2c", worst / tr.d1, 1.0);
  const auto& last = tr.points.back();
  if (last.u < 0.5) cx.warn("terminal potential below 1/2");
  if (last.rho > 3 * m || last.rho < m / 3) cx.warn("terminal radius not within a factor 3 of the mass");
  cx.summary["steps"] = tr.steps();
  cx.summary["stop_reason"] = tr.stop_reason;
  cx.summary["terminal"] = {{"t", last.t}, {"rho", last.rho}, {"u", last.u}, {"buffered", last.buffered}};
  cx.summary["d1"] = tr.d1;
  write_trace_csv(tr, cx.csv);
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& s : scenarios()) v.push_back(s.name);
    return v;
  }();
  return names;
}

ScenarioConfig parse_config(const std::string& text, const std::string& scenario) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string current;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::ConfigInvalid, "bad section header on line " + std::to_string(lineno));
      current = trim(line.substr(1, line.size() - 2));
      if (std::find(scenario_names().begin(), scenario_names().end(), current) == scenario_names().end())
        throw Error(Errc::ConfigInvalid, "unknown section [" + current + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::ConfigInvalid, "expected key = value on line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(Errc::ConfigInvalid, "empty key on line " + std::to_string(lineno));
    if (sections[current].count(key)) throw Error(Errc::ConfigInvalid, "duplicate key '" + key + "'");
    sections[current][key] = value;
  }
  auto global = sections[""];
  if (auto it = global.find("scenario"); it != global.end()) {
    if (cfg.scenario.empty()) cfg.scenario = it->second;
    else if (cfg.scenario != it->second)
      throw Error(Errc::ConfigInvalid, "config names scenario '" + it->second + "'");
    global.erase(it);
  }
  if (cfg.scenario.empty()) throw Error(Errc::ConfigInvalid, "no scenario given");
  find_scenario(cfg.scenario);
  cfg.params = global;
  for (const auto& [k, v] : sections[cfg.scenario]) cfg.params[k] = v;
  return cfg;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  const Scenario& sc = find_scenario(cfg.scenario);
  Params p(sc, cfg);
  RunResult out;
  Context cx(out);
  try {
    if (sc.name == "schwarzschild") run_schwarzschild(p, cx);
    else if (sc.name == "weyl") run_weyl(p, cfg, cx);
    else if (sc.name == "warped_ode") run_warped_ode(p, cfg, cx);
    else if (sc.name == "splitting") run_splitting(p, cfg, cx);
    else if (sc.name == "radii") run_radii(p, cx);
    else run_descent(p, cx);
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    out.failures.push_back(std::string("error: ") + e.what());
  }
  if (cfg.strict)
    for (const auto& w : out.warnings) out.failures.push_back("warning: " + w);
  out.exit_code = out.failures.empty() ? 0 : 1;
  out.csv = cx.csv.str();

  json j;
  j["format_version"] = kJsonFormatVersion;
  j["scenario"] = sc.name;
  j["parameters"] = p.resolved();
  j["seed"] = cfg.seed;
  j["strict"] = cfg.strict;
  json checks = json::array();
  for (const auto& c : out.checks)
    checks.push_back({{"name", c.name}, {"identity", c.identity}, {"value", c.value}, {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  j["checks"] = checks;
  j["warnings"] = out.warnings;
  j["failures"] = out.failures;
  j["summary"] = cx.summary;
  j["passed"] = out.exit_code == 0;
  out.json = j.dump(2) + "\n";
  return out;
}

int run(const ScenarioConfig& cfg, std::ostream& log) {
  RunResult r;
  try {
    r = run_scenario(cfg);
  } catch (const Error& e) {
    log << e.what() << '\n';
    return e.code() == Errc::ConfigInvalid ? 2 : 1;
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  const fs::path base = fs::path(cfg.out_dir) / cfg.scenario;
  std::ofstream csv(base.string() + ".csv", std::ios::binary);
  std::ofstream js(base.string() + ".json", std::ios::binary);
  if (!csv || !js) {
    log << "cannot write to " << cfg.out_dir << '\n';
    return 1;
  }
  csv << r.csv;
  js << r.json;
  for (const auto& c : r.checks)
    log << (c.pass ? "ok   " : "FAIL ") << c.name << " = " << fmt(c.value) << " (tol " << fmt(c.tolerance) << ")\n";
  for (const auto& w : r.warnings) log << "warning: " << w << '\n';
  for (const auto& f : r.failures) log << "failed: " << f << '\n';
  return r.exit_code;
}

std::string scenario_help() {
  std::ostringstream os;
  os << "Scenarios (config keys; '--grid' overrides the keys marked *):\n";
  for (const auto& s : scenarios()) {
    os << "\n" << s.name << ": " << s.summary << "\n  CSV columns: " << s.csv_columns << "\n";
    for (const auto& p : s.params) {
      os << "  " << p.key << (p.gridded ? "*" : "") << " = " << p.fallback << "  " << p.doc;
      if (!p.choices.empty()) {
        os << " {";
        for (size_t i = 0; i < p.choices.size(); ++i) os << (i ? "|" : "") << p.choices[i];
        os << "}";
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace curvlab
