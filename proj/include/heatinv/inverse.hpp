#ifndef HEATINV_INVERSE_HPP
#define HEATINV_INVERSE_HPP

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heatinv/fem.hpp"
#include "heatinv/forward.hpp"
#include "heatinv/measure.hpp"
#include "heatinv/mesh.hpp"

namespace heatinv {

/// Settings for the regularized conjugate-gradient reconstruction.
struct InverseConfig {
  double lambda_n = 1e-7;  // regularization weight
  double cg_tol = 1e-8;    // stop when ||p_k||_M < cg_tol
  std::size_t max_iter = 1000;
  NodalFunction f0;  // initial guess

  void validate() const {
    if (!(lambda_n > 0.0)) throw std::invalid_argument("InverseConfig: lambda_n must be > 0");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("InverseConfig: cg_tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("InverseConfig: max_iter must be >= 1");
  }
};

/// Outcome of one reconstruction run.
struct ReconstructionReport {
  NodalFunction f_rec;
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // ||p_k||_M, k = 0, 1, ...
  double wall_time_s = 0.0;
  std::size_t forward_solve_count = 0;  // = 2 + 2*iterations
};

/// Optional per-iteration capture of search directions, for verification.
struct CgTrace {
  std::size_t max_records = 16;
  std::vector<std::vector<double>> p_history;
  std::vector<std::vector<double>> ap_history;
  std::vector<double> r_norm_history;  // ||r_k||_M including the initial residual
};

/// Conjugate-gradient solve of the regularized normal equations
/// (S*S + lambda I) f = S* m, generic over the forward engine. All inner
/// products are taken in the mass-matrix geometry; the engine must be
/// linear and self-adjoint in that inner product.
inline ReconstructionReport cg_reconstruct(
    const ForwardOperator& forward, std::span<const double> m, const InverseConfig& cfg,
    const FemSystem& sys,
    const std::function<void(std::size_t, const NodalFunction&)>& on_iterate = {},
    CgTrace* trace = nullptr) {
  cfg.validate();
  if (m.size() != sys.n())
    throw std::invalid_argument("cg_reconstruct: measurement length mismatch");
  require_same_mesh(cfg.f0, sys.mesh());
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n = sys.n();
  std::size_t solves = 0;
  auto apply = [&](const NodalFunction& g) {
    ++solves;
    return forward(g);
  };

  NodalFunction f = cfg.f0;

  // u0 = S f0;  r0 = S(m - u0) - lambda f0
  const NodalFunction u0 = apply(f);
  NodalFunction tmp = u0;
  for (std::size_t i = 0; i < n; ++i) tmp.values[i] = m[i] - u0.values[i];
  NodalFunction r = apply(tmp);
  for (std::size_t i = 0; i < n; ++i) r.values[i] -= cfg.lambda_n * f.values[i];

  NodalFunction p = r;
  double rr = m_inner(sys, r.values, r.values);
  double error = std::sqrt(m_inner(sys, p.values, p.values));
  if (!std::isfinite(error)) throw std::runtime_error("cg_reconstruct: non-finite residual");

  ReconstructionReport report;
  report.residual_history.push_back(error);
  if (trace) trace->r_norm_history.push_back(std::sqrt(rr));

  std::size_t k = 0;
  while (error >= cfg.cg_tol && k < cfg.max_iter) {
    // Ap = S(S p) + lambda p
    const NodalFunction sp = apply(p);
    NodalFunction ap = apply(sp);
    for (std::size_t i = 0; i < n; ++i) ap.values[i] += cfg.lambda_n * p.values[i];

    const double pap = m_inner(sys, p.values, ap.values);
    if (!(pap > 0.0) || !std::isfinite(pap))
      throw std::runtime_error("cg_reconstruct: operator not positive definite");
    if (trace && trace->p_history.size() < trace->max_records) {
      trace->p_history.push_back(p.values);
      trace->ap_history.push_back(ap.values);
    }

    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      f.values[i] += alpha * p.values[i];
      r.values[i] -= alpha * ap.values[i];
    }
    const double rr_new = m_inner(sys, r.values, r.values);
    if (!std::isfinite(rr_new)) throw std::runtime_error("cg_reconstruct: non-finite residual");
    if (trace) trace->r_norm_history.push_back(std::sqrt(rr_new));
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p.values[i] = r.values[i] + beta * p.values[i];

    error = std::sqrt(m_inner(sys, p.values, p.values));
    ++k;
    report.residual_history.push_back(error);
    if (on_iterate) on_iterate(k, f);
  }

  report.f_rec = std::move(f);
  report.iterations = k;
  report.forward_solve_count = solves;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

/// Diagnostic objective J(f) = 1/2 ||S f - m||_n^2 + (lambda/2) ||f||_M^2.
inline double objective_value(const ForwardOperator& forward, const FemSystem& sys,
                              const NodalFunction& f, std::span<const double> m,
                              double lambda_n) {
  if (m.size() != sys.n()) throw std::invalid_argument("objective_value: dimension mismatch");
  const NodalFunction sf = forward(f);
  std::vector<double> misfit(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) misfit[i] = sf.values[i] - m[i];
  const double data_term = empirical_norm(misfit);
  const double reg = m_inner(sys, f.values, f.values);
  return 0.5 * data_term * data_term + 0.5 * lambda_n * reg;
}

}  // namespace heatinv

#endif  // HEATINV_INVERSE_HPP
