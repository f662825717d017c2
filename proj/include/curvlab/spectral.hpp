#pragma once

// Fourier tools on a uniform periodic grid t_i = i * period / n.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace curvlab::spectral {

Eigen::VectorXd nodes(int n, double period);

/// Dense first-derivative matrix (even n).
Eigen::MatrixXd diff_matrix(int n, double period);

/// order-th derivative of periodic samples by FFT.
Eigen::VectorXd derivative(const Eigen::VectorXd& v, double period, int order);

/// Periodic trapezoid weights, all equal to period / n.
double weight(int n, double period);

/// Band-limited interpolant of periodic samples, evaluable with derivatives
/// at any t.
class TrigInterpolant {
 public:
  TrigInterpolant() = default;
  TrigInterpolant(const Eigen::VectorXd& samples, double period);

  double eval(double t, int deriv = 0) const;
  double period() const { return period_; }
  int size() const { return n_; }

 private:
  int n_ = 0;
  double period_ = 1.0;
  std::vector<std::complex<double>> coef_;  // k = 0 .. n/2
};

}  // namespace curvlab::spectral
