#ifndef HEATINV_FORWARD_HPP
#define HEATINV_FORWARD_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "heatinv/fem.hpp"
#include "heatinv/linalg.hpp"
#include "heatinv/mesh.hpp"

namespace heatinv {

/// Uniform time grid with n_steps = ceil(T/dt); the last step may
/// overshoot T.
struct TimeGrid {
  double dt = 0.0;
  double t_final = 0.0;
  std::size_t n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double dt_, double t_final_) : dt(dt_), t_final(t_final_) {
    if (!(dt > 0.0) || !(t_final > 0.0))
      throw std::invalid_argument("TimeGrid: dt and T must be positive");
    n_steps = static_cast<std::size_t>(std::ceil(t_final / dt));
    // guard against a ceil pushed up by roundoff
    if (n_steps > 1 && (static_cast<double>(n_steps) - 1.0) * dt >= t_final) --n_steps;
  }
};

/// Map from a time-independent source to the final-time solution.
using ForwardOperator = std::function<NodalFunction(const NodalFunction&)>;

namespace detail {

inline void check_finite(const std::vector<double>& u, std::size_t step) {
  double s = 0.0;
  for (double v : u) s += v;
  if (!std::isfinite(s))
    throw std::runtime_error("forward solve: non-finite value at time step " +
                             std::to_string(step));
}

}  // namespace detail

/// Full-order forward operator. Integrates M du/dt + A u = b with the
/// implicit BDF scheme (BDF1 first step, BDF2 after) and returns u(T).
/// The two implicit matrices are factored once per (system, grid) pair
/// and shared by every application of the returned callable.
inline ForwardOperator fem_forward_operator(const FemSystem& sys, const TimeGrid& grid) {
  const double dt = grid.dt;
  auto f1 = std::make_shared<const CholeskyFactor>(
      cholesky_factor(add_scaled(1.0 / dt, sys.mass, 1.0, sys.stiffness)));
  std::shared_ptr<const CholeskyFactor> f2;
  if (grid.n_steps >= 2)
    f2 = std::make_shared<const CholeskyFactor>(
        cholesky_factor(add_scaled(1.5 / dt, sys.mass, 1.0, sys.stiffness)));

  SparseMatrix mass = sys.mass;
  auto mesh = sys.mesh_ptr;
  const std::size_t n_steps = grid.n_steps;

  return [mass = std::move(mass), mesh = std::move(mesh), f1, f2, dt,
          n_steps](const NodalFunction& f) -> NodalFunction {
    require_same_mesh(f, *mesh);
    const std::vector<double> b = spmv(mass, f.values);

    // BDF1 startup: (M/dt + A) u1 = b + (M/dt) u0, u0 = 0
    std::vector<double> u_prev2(f.values.size(), 0.0);
    std::vector<double> u_prev1 = f1->solve(b);
    detail::check_finite(u_prev1, 1);

    // BDF2: (3M/(2dt) + A) un = b + (M/dt)(2 u_{n-1} - u_{n-2}/2)
    std::vector<double> rhs(f.values.size());
    for (std::size_t step = 2; step <= n_steps; ++step) {
      for (std::size_t i = 0; i < rhs.size(); ++i)
        rhs[i] = 2.0 * u_prev1[i] - 0.5 * u_prev2[i];
      rhs = spmv(mass, rhs);
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = b[i] + rhs[i] / dt;
      std::vector<double> u = f2->solve(rhs);
      detail::check_finite(u, step);
      u_prev2 = std::move(u_prev1);
      u_prev1 = std::move(u);
    }

    NodalFunction out;
    out.mesh = mesh;
    out.values = std::move(u_prev1);
    return out;
  };
}

/// One-shot full-order solve; factors the implicit matrices for this call
/// only. Repeated solves should go through fem_forward_operator.
inline NodalFunction fem_forward_solve(const FemSystem& sys, const NodalFunction& f,
                                       const TimeGrid& grid) {
  return fem_forward_operator(sys, grid)(f);
}

}  // namespace heatinv

#endif  // HEATINV_FORWARD_HPP
