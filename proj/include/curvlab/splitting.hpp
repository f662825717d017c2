#pragma once

// Splittings of the traceless Ricci tensor on closed SO(3)-invariant warped
// products over a circle, and the integral identities relating them.
//
// Invariant symmetric 2-tensors are stored by their components in the
// orthonormal frame (d/ds, e1, e2): diag(P, Q, Q).

#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvlab/warped_profiles.hpp"

namespace curvlab {

struct InvariantTensor {
  Eigen::VectorXd P, Q;

  static InvariantTensor zero(int n);
  static InvariantTensor metric(int n);  // g itself: P = Q = 1
  InvariantTensor operator+(const InvariantTensor& o) const;
  InvariantTensor operator-(const InvariantTensor& o) const;
  InvariantTensor operator*(double c) const;
  Eigen::VectorXd trace() const;
  Eigen::VectorXd norm2() const;
  Eigen::VectorXd inner(const InvariantTensor& o) const;
};

/// Closed warped product with verified constant scalar curvature, together
/// with everything sampled on a uniform grid of the circle.
struct ClosedWarpedMetric {
  WarpedProfile profile;
  double s = 0.0;
  double vol = 0.0;
  int n = 0;
  int bandwidth = 0;  // derivatives keep Fourier modes |k| <= bandwidth

  Eigen::VectorXd t, a, b, b_s, b_ss, weight;  // weight = 4 pi a b^2 dt
  Eigen::VectorXd ric_normal, ric_sphere;      // Ric(d/ds, d/ds), Ric(e1, e1)
  Eigen::MatrixXd Ds;                          // d/ds on grid samples

  double integrate(const Eigen::VectorXd& v) const { return weight.dot(v); }
  InvariantTensor ricci() const;
  InvariantTensor traceless_ricci() const;
};

/// tol bounds the spread of s relative to max(1, |s|). bandwidth <= 0 picks
/// n / 10, which keeps roundoff in fourth derivatives near 1e-7.
ClosedWarpedMetric make_closed_metric(const WarpedProfile& p, int n = 256, double tol = 1e-6,
                                      int bandwidth = 0);

/// Same data for tau^2 g.
WarpedProfile scaled_profile(const WarpedProfile& p, double tau);

// Reduced operators acting on grid samples.
Eigen::VectorXd d_ds(const ClosedWarpedMetric& m, const Eigen::VectorXd& v);
Eigen::VectorXd laplacian(const ClosedWarpedMetric& m, const Eigen::VectorXd& v);
InvariantTensor hessian(const ClosedWarpedMetric& m, const Eigen::VectorXd& v);
InvariantTensor L_star(const ClosedWarpedMetric& m, const Eigen::VectorXd& v);
Eigen::VectorXd L_apply(const ClosedWarpedMetric& m, const InvariantTensor& alpha);

/// Dense matrix of L L* on the invariant grid functions.
Eigen::MatrixXd assemble_LLstar_matrix(const ClosedWarpedMetric& m);

struct KernelTest {
  bool trivial = true;
  double gap = 0.0;          // smallest over largest singular value, diagonally scaled
  double reference = 0.0;    // mean |Ric|^2
  bool closed_form = false;  // decided from the product spectrum
  double spectrum_distance = 0.0;
};

/// Relative kernel threshold on the smallest singular value.
inline constexpr double kKernelThreshold = 1e-6;

KernelTest ker_lstar_test(const ClosedWarpedMetric& m);

/// Solves L L* v = rhs on the invariant functions; throws KerLStarNonTrivial.
Eigen::VectorXd solve_LLstar(const ClosedWarpedMetric& m, const Eigen::VectorXd& rhs);

/// L L* u = s^2 / 3.
Eigen::VectorXd solve_u(const ClosedWarpedMetric& m);

struct TensorSplit {
  Eigen::VectorXd f;
  InvariantTensor image;  // L* f
  InvariantTensor kernel; // xi with L xi = 0
};

/// z = L* f + xi with xi in Ker L.
TensorSplit split_tensor(const ClosedWarpedMetric& m, const InvariantTensor& z);

struct SplittingReport {
  Eigen::VectorXd t, u, f, k;
  InvariantTensor z, xi, zT, zN;
  double s = 0.0, vol = 0.0;
  double delta = 0.0, lambda_mean = 0.0;
  double f_l2 = 0.0, df_l2 = 0.0, lap_f_l2 = 0.0;
  std::map<std::string, double> residuals;
};

SplittingReport split(const ClosedWarpedMetric& m);

/// Relative residual of each integral identity, keyed by a descriptive name.
std::map<std::string, double> identity_suite(const SplittingReport& r, const ClosedWarpedMetric& m);

struct VariationalResult {
  bool ok = true;
  double projected = 0.0;            // int |z^T|^2
  std::vector<double> direct;        // int |z - L* phi|^2
  std::vector<double> expansion;     // quadratic expansion in phi
  std::vector<double> expansion_bochner;
};

/// Trials are grid samples with mean zero.
VariationalResult zT_variational_check(const ClosedWarpedMetric& m, const SplittingReport& r,
                                       const std::vector<Eigen::VectorXd>& trials, double rel_tol = 1e-8);

struct MinimizingResult {
  bool ok = true;
  double minimum = 0.0;  // int |L*(u / lambda)|^2
  std::vector<double> values;
};

/// Trials are grid samples with mean one.
MinimizingResult u_minimizing_check(const ClosedWarpedMetric& m, const SplittingReport& r,
                                    const std::vector<Eigen::VectorXd>& trials, double rel_tol = 1e-8);

/// Mean of v over (M, g).
double mean_value(const ClosedWarpedMetric& m, const Eigen::VectorXd& v);

/// v shifted to have the given mean.
Eigen::VectorXd with_mean(const ClosedWarpedMetric& m, const Eigen::VectorXd& v, double target);

/// Random combination of two low circle modes (|k| <= 4) sampled on the grid.
Eigen::VectorXd random_trig_trial(const ClosedWarpedMetric& m, std::mt19937& rng);

std::string to_json(const SplittingReport& r);

}  // namespace curvlab
