#include "curvlab/spectral.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

#include "curvlab/errors.hpp"

namespace curvlab::spectral {

namespace {
constexpr double kPi = 3.14159265358979323846;

void require_even(int n) {
  if (n < 4 || n % 2 != 0) throw Error(Errc::InvalidArgument, "periodic grid size must be even and >= 4");
}
}  // namespace

Eigen::VectorXd nodes(int n, double period) {
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = period * i / n;
  return t;
}

double weight(int n, double period) { return period / n; }

Eigen::MatrixXd diff_matrix(int n, double period) {
  require_even(n);
  const double h = 2.0 * kPi / n;
  const double scale = 2.0 * kPi / period;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
      D(i, j) = scale * 0.5 * sgn / std::tan(0.5 * k * h);
    }
  // Zero row sums exactly so constants are annihilated to roundoff.
  for (int i = 0; i < n; ++i) D(i, i) = -D.row(i).sum();
  return D;
}

Eigen::VectorXd derivative(const Eigen::VectorXd& v, double period, int order) {
  const int n = static_cast<int>(v.size());
  require_even(n);
  Eigen::FFT<double> fft;
  std::vector<double> in(v.data(), v.data() + n);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  const double w0 = 2.0 * kPi / period;
  for (int k = 0; k < n; ++k) {
    const int kk = k <= n / 2 ? k : k - n;
    if (kk == n / 2 && order % 2 == 1) {
      spec[static_cast<std::size_t>(k)] = 0.0;
      continue;
    }
    spec[static_cast<std::size_t>(k)] *= std::pow(std::complex<double>(0.0, w0 * kk), order);
  }
  std::vector<double> out;
  fft.inv(out, spec);
  return Eigen::Map<Eigen::VectorXd>(out.data(), n);
}

TrigInterpolant::TrigInterpolant(const Eigen::VectorXd& samples, double period)
    : n_(static_cast<int>(samples.size())), period_(period) {
  require_even(n_);
  Eigen::FFT<double> fft;
  std::vector<double> in(samples.data(), samples.data() + n_);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  coef_.resize(static_cast<std::size_t>(n_ / 2 + 1));
  for (int k = 0; k <= n_ / 2; ++k) coef_[static_cast<std::size_t>(k)] = spec[static_cast<std::size_t>(k)] / double(n_);
}

double TrigInterpolant::eval(double t, int deriv) const {
  const double w0 = 2.0 * kPi / period_;
  double acc = coef_[0].real() * (deriv == 0 ? 1.0 : 0.0);
  for (int k = 1; k <= n_ / 2; ++k) {
    const std::complex<double> c = coef_[static_cast<std::size_t>(k)];
    const double w = w0 * k;
    const std::complex<double> e = std::polar(1.0, w * t) * std::pow(std::complex<double>(0.0, w), deriv);
    // Pair the k and -k modes; the Nyquist mode appears once.
    const double term = (c * e).real();
    acc += (k == n_ / 2) ? term : 2.0 * term;
  }
  return acc;
}

}  // namespace curvlab::spectral
