#ifndef HEATINV_ORACLE_HPP
#define HEATINV_ORACLE_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace heatinv {

/// Closed-form reference solutions for the homogeneous-Dirichlet heat
/// equation on a rectangle. Evaluates formulas only; never touches the
/// numeric modules, so it can serve as an independent oracle.
namespace oracle {

/// Final-time modal amplitude for a trigonometric source: with
/// f = sin(kx*pi*x/lx) * sin(ky*pi*y/ly) and zero initial data,
/// u(x,y,T) = amplitude * f(x,y) where amplitude = (1 - exp(-mu*T))/mu
/// and mu = pi^2 * ((kx/lx)^2 + (ky/ly)^2).
inline double spectral_forward(int kx, int ky, double lx, double ly, double t_final) {
  if (kx < 1 || ky < 1) throw std::invalid_argument("spectral_forward: mode numbers must be >= 1");
  const double pi = std::numbers::pi;
  const double mu = pi * pi * ((kx / lx) * (kx / lx) + (ky / ly) * (ky / ly));
  if (t_final == 0.0) return 0.0;
  return (1.0 - std::exp(-mu * t_final)) / mu;
}

/// Mode-wise Tikhonov filter: for noiseless data m = s * f_true on an
/// eigenmode with forward amplitude s, the regularized reconstruction of
/// that mode is s^2 / (s^2 + lambda) * f_true.
inline double spectral_tikhonov_filter(double modal_amplitude_s, double lambda_n) {
  const double s2 = modal_amplitude_s * modal_amplitude_s;
  return s2 / (s2 + lambda_n);
}

}  // namespace oracle
}  // namespace heatinv

#endif  // HEATINV_ORACLE_HPP
