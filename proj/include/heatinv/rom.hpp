#ifndef HEATINV_ROM_HPP
#define HEATINV_ROM_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatinv/fem.hpp"
#include "heatinv/forward.hpp"
#include "heatinv/linalg.hpp"
#include "heatinv/mesh.hpp"

namespace heatinv {

/// Reduced-order basis built from the Krylov sequence A u1 = b,
/// A u_i = M u_{i-1}. Columns of q are the nodal coefficient vectors of
/// the V-orthonormal basis functions, q_k = U psi_k / sqrt(lambda_k), so
/// q^T A q = I_r.
struct RomBasis {
  std::vector<std::vector<double>> q_cols;  // r columns of length n
  std::vector<double> retained_eigenvalues; // descending, all > tol
  std::size_t ell_requested = 0;
  std::size_t r = 0;
  std::size_t krylov_count = 0;  // Krylov vectors built = solves with the A factor
  std::vector<std::vector<double>> eigenvalue_history;  // spectrum of each bordered K_i
};

/// Optional insight into the basis construction, for verification.
struct KrylovDiagnostics {
  std::vector<std::vector<double>> krylov_vectors;  // u_1 .. u_k
  DenseSymMatrix k_matrix;                          // final bordered K
};

/// Builds the projection matrix Q. The Gram matrix K_i = U_i^T A U_i grows
/// by symmetric bordering; since A u_i = M u_{i-1}, each new row comes
/// from dot products with the already-computed vector M u_{i-1} and costs
/// no extra solve. The loop stops early once the smallest eigenvalue of
/// K_i drops to tol, discarding that direction.
inline RomBasis get_matrix_q(const FemSystem& sys, std::span<const double> b, std::size_t ell,
                             double tol, KrylovDiagnostics* diag = nullptr) {
  if (b.size() != sys.n()) throw std::invalid_argument("get_matrix_q: dimension mismatch");
  if (ell < 1) throw std::invalid_argument("get_matrix_q: ell must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("get_matrix_q: tol must be positive");
  bool zero = true;
  for (double v : b)
    if (v != 0.0) {
      zero = false;
      break;
    }
  if (zero) throw std::runtime_error("get_matrix_q: zero load vector");

  const CholeskyFactor& a_factor = *sys.stiffness_factor;
  const std::size_t n = sys.n();

  std::vector<std::vector<double>> u;  // Krylov vectors
  u.push_back(a_factor.solve(b));

  // K_1 = u1^T A u1 = u1^T b
  double k11 = 0.0;
  for (std::size_t i = 0; i < n; ++i) k11 += u[0][i] * b[i];
  DenseSymMatrix k = DenseSymMatrix::zero(1);
  k.set_sym(0, 0, k11);

  RomBasis basis;
  basis.ell_requested = ell;
  basis.eigenvalue_history.push_back({k11});

  SymEig eig;
  eig.eigenvalues = {k11};
  eig.eigenvectors = {{1.0}};
  std::size_t retained = 1;

  for (std::size_t i = 2; i <= ell; ++i) {
    const std::vector<double> w = spmv(sys.mass, u[i - 2]);  // w = M u_{i-1} = A u_i
    u.push_back(a_factor.solve(w));

    DenseSymMatrix k_next = DenseSymMatrix::zero(i);
    for (std::size_t r0 = 0; r0 < i - 1; ++r0)
      for (std::size_t c0 = r0; c0 < i - 1; ++c0) k_next.set_sym(r0, c0, k.at(r0, c0));
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t p = 0; p < n; ++p) dot += u[j][p] * w[p];
      k_next.set_sym(j, i - 1, dot);  // u_j^T A u_i
    }
    k = std::move(k_next);

    eig = sym_eig_small(k);
    basis.eigenvalue_history.push_back(eig.eigenvalues);
    if (eig.eigenvalues.back() <= tol) {
      retained = i - 1;  // truncate the direction that just fell below tol
      break;
    }
    retained = i;
  }

  basis.krylov_count = u.size();
  basis.r = retained;
  basis.retained_eigenvalues.assign(eig.eigenvalues.begin(),
                                    eig.eigenvalues.begin() + static_cast<std::ptrdiff_t>(retained));

  basis.q_cols.assign(retained, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < retained; ++c) {
    const double scale = 1.0 / std::sqrt(basis.retained_eigenvalues[c]);
    auto& col = basis.q_cols[c];
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double w = eig.eigenvectors[c][j] * scale;
      if (w == 0.0) continue;
      const auto& uj = u[j];
      for (std::size_t p = 0; p < n; ++p) col[p] += w * uj[p];
    }
  }

  // Re-orthogonalize in the A-inner product. The 1/sqrt(lambda) scaling
  // amplifies roundoff for directions near the truncation floor; the span
  // and hence the Galerkin projection are unchanged.
  for (std::size_t c = 0; c < retained; ++c) {
    auto& col = basis.q_cols[c];
    for (int pass = 0; pass < 2; ++pass) {
      const std::vector<double> acol = spmv(sys.stiffness, col);
      for (std::size_t j = 0; j < c; ++j) {
        double proj = 0.0;
        for (std::size_t p = 0; p < n; ++p) proj += basis.q_cols[j][p] * acol[p];
        for (std::size_t p = 0; p < n; ++p) col[p] -= proj * basis.q_cols[j][p];
      }
    }
    const std::vector<double> acol = spmv(sys.stiffness, col);
    double norm2 = 0.0;
    for (std::size_t p = 0; p < n; ++p) norm2 += col[p] * acol[p];
    const double norm = std::sqrt(norm2);
    if (norm > 0.0)
      for (double& v : col) v /= norm;
  }

  if (diag) {
    diag->krylov_vectors = std::move(u);
    diag->k_matrix = k;
  }
  return basis;
}

/// Galerkin-reduced system M_r = Q^T M Q, A_r = Q^T A Q, b_r = Q^T b.
struct ReducedSystem {
  DenseSymMatrix m_r;
  DenseSymMatrix a_r;
  std::vector<double> b_r;
};

inline ReducedSystem reduce(const FemSystem& sys, const RomBasis& basis,
                            std::span<const double> b) {
  if (b.size() != sys.n()) throw std::invalid_argument("reduce: dimension mismatch");
  const std::size_t r = basis.r;
  ReducedSystem red;
  red.m_r = DenseSymMatrix::zero(r);
  red.a_r = DenseSymMatrix::zero(r);
  red.b_r.assign(r, 0.0);

  for (std::size_t j = 0; j < r; ++j) {
    const auto& qj = basis.q_cols[j];
    const std::vector<double> mqj = spmv(sys.mass, qj);
    const std::vector<double> aqj = spmv(sys.stiffness, qj);
    for (std::size_t i = j; i < r; ++i) {
      const auto& qi = basis.q_cols[i];
      double sm = 0.0, sa = 0.0;
      for (std::size_t p = 0; p < qi.size(); ++p) {
        sm += qi[p] * mqj[p];
        sa += qi[p] * aqj[p];
      }
      red.m_r.set_sym(i, j, sm);
      red.a_r.set_sym(i, j, sa);
    }
    double sb = 0.0;
    for (std::size_t p = 0; p < qj.size(); ++p) sb += qj[p] * b[p];
    red.b_r[j] = sb;
  }
  return red;
}

struct RomSolveStats {
  std::size_t rank = 0;
  std::size_t krylov_solves = 0;  // back-substitutions with the cached factor of A
  std::size_t dense_solves = 0;   // r x r solves, one per time step
};

/// Reduced-order forward solve: build the basis for this load vector,
/// reduce, time-step the r-dimensional system with the same BDF scheme as
/// the full-order solver, and prolong the final state back to the mesh.
inline NodalFunction rom_forward_solve(const FemSystem& sys, const NodalFunction& f,
                                       const TimeGrid& grid, std::size_t ell, double tol,
                                       RomSolveStats* stats = nullptr,
                                       RomBasis* basis_out = nullptr) {
  require_same_mesh(f, sys.mesh());
  const std::vector<double> b = load_vector(sys, f);

  RomBasis basis = get_matrix_q(sys, b, ell, tol);
  const ReducedSystem red = reduce(sys, basis, b);
  const std::size_t r = basis.r;
  const double dt = grid.dt;

  DenseSymMatrix c1 = DenseSymMatrix::zero(r);
  for (std::size_t i = 0; i < r * r; ++i) c1.values[i] = red.m_r.values[i] / dt + red.a_r.values[i];
  const DenseCholesky f1 = DenseCholesky::factor(c1);

  std::size_t dense_solves = 0;
  std::vector<double> u_prev2(r, 0.0);
  std::vector<double> u_prev1 = f1.solve(red.b_r);
  ++dense_solves;

  if (grid.n_steps >= 2) {
    DenseSymMatrix c2 = DenseSymMatrix::zero(r);
    for (std::size_t i = 0; i < r * r; ++i)
      c2.values[i] = 1.5 * red.m_r.values[i] / dt + red.a_r.values[i];
    const DenseCholesky f2 = DenseCholesky::factor(c2);

    std::vector<double> rhs(r), tmp(r);
    for (std::size_t step = 2; step <= grid.n_steps; ++step) {
      for (std::size_t i = 0; i < r; ++i) tmp[i] = 2.0 * u_prev1[i] - 0.5 * u_prev2[i];
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < r; ++j) s += red.m_r.at(i, j) * tmp[j];
        rhs[i] = red.b_r[i] + s / dt;
      }
      std::vector<double> u = f2.solve(rhs);
      ++dense_solves;
      u_prev2 = std::move(u_prev1);
      u_prev1 = std::move(u);
    }
  }

  NodalFunction out = NodalFunction::zero(sys.mesh_ptr);
  for (std::size_t c = 0; c < r; ++c) {
    const double w = u_prev1[c];
    const auto& col = basis.q_cols[c];
    for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] += w * col[p];
  }

  if (stats) {
    stats->rank = r;
    stats->krylov_solves = basis.krylov_count;
    stats->dense_solves = dense_solves;
  }
  if (basis_out) *basis_out = std::move(basis);
  return out;
}

/// Reduced-order forward operator. A fresh basis is built for every
/// source (the Krylov space depends on the load vector); the zero source
/// short-circuits to the exact answer u(T) = 0 since the Krylov sequence
/// is undefined for b = 0.
inline ForwardOperator rom_forward_operator(const FemSystem& sys, const TimeGrid& grid,
                                            std::size_t ell, double tol) {
  FemSystem shared = sys;
  return [shared = std::move(shared), grid, ell, tol](const NodalFunction& f) -> NodalFunction {
    if (f.is_zero()) return NodalFunction::zero(shared.mesh_ptr);
    return rom_forward_solve(shared, f, grid, ell, tol);
  };
}

}  // namespace heatinv

#endif  // HEATINV_ROM_HPP
