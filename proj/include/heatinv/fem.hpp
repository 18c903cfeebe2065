#ifndef HEATINV_FEM_HPP
#define HEATINV_FEM_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heatinv/linalg.hpp"
#include "heatinv/mesh.hpp"

namespace heatinv {

/// P1 element mass matrix of a triangle with the given area:
/// (area/12) * [[2,1,1],[1,2,1],[1,1,2]].
inline std::array<std::array<double, 3>, 3> p1_element_mass(double area) {
  std::array<std::array<double, 3>, 3> m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
  return m;
}

/// P1 element stiffness matrix from vertex coordinates,
/// K_ij = (b_i b_j + c_i c_j) / (4*area) with the usual shape-gradient
/// coefficients.
inline std::array<std::array<double, 3>, 3> p1_element_stiffness(
    const std::array<double, 2>& v0, const std::array<double, 2>& v1,
    const std::array<double, 2>& v2) {
  const double b[3] = {v1[1] - v2[1], v2[1] - v0[1], v0[1] - v1[1]};
  const double c[3] = {v2[0] - v1[0], v0[0] - v2[0], v1[0] - v0[0]};
  const double area2 =
      (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]);  // 2*signed area
  if (!(area2 > 0.0)) throw std::runtime_error("p1_element_stiffness: degenerate triangle");
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (2.0 * area2);
  return k;
}

inline double triangle_area(const std::array<double, 2>& v0, const std::array<double, 2>& v1,
                            const std::array<double, 2>& v2) {
  return 0.5 * ((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]));
}

/// Assembled interior-dof system: mass matrix M, stiffness matrix A, and
/// the cached Cholesky factor of A. Immutable after assembly.
struct FemSystem {
  std::shared_ptr<const Mesh> mesh_ptr;
  SparseMatrix mass;       // n x n, SPD
  SparseMatrix stiffness;  // n x n, SPD after Dirichlet elimination
  std::shared_ptr<const CholeskyFactor> stiffness_factor;

  const Mesh& mesh() const { return *mesh_ptr; }
  std::size_t n() const { return mesh_ptr->n_interior(); }
};

/// Assembles M_ij = (phi_i, phi_j), A_ij = (grad phi_i, grad phi_j) over
/// interior basis functions, eliminating boundary dofs. The stiffness
/// factorization happens once here and is reused by every solver.
inline FemSystem assemble(Mesh mesh) {
  auto mp = std::make_shared<const Mesh>(std::move(mesh));
  const Mesh& m = *mp;
  const std::size_t n = m.n_interior();

  std::vector<Triplet> tm, ta;
  tm.reserve(9 * m.triangles.size());
  ta.reserve(9 * m.triangles.size());
  for (const auto& tri : m.triangles) {
    const auto& v0 = m.node_coords[tri[0]];
    const auto& v1 = m.node_coords[tri[1]];
    const auto& v2 = m.node_coords[tri[2]];
    const auto me = p1_element_mass(triangle_area(v0, v1, v2));
    const auto ke = p1_element_stiffness(v0, v1, v2);
    for (int a = 0; a < 3; ++a) {
      const std::ptrdiff_t ia = m.interior_map[tri[static_cast<std::size_t>(a)]];
      if (ia < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const std::ptrdiff_t ib = m.interior_map[tri[static_cast<std::size_t>(b)]];
        if (ib < 0) continue;
        tm.push_back({static_cast<std::size_t>(ia), static_cast<std::size_t>(ib), me[a][b]});
        ta.push_back({static_cast<std::size_t>(ia), static_cast<std::size_t>(ib), ke[a][b]});
      }
    }
  }

  FemSystem sys;
  sys.mesh_ptr = mp;
  sys.mass = csr_from_triplets(n, n, std::move(tm), /*symmetric=*/true);
  sys.stiffness = csr_from_triplets(n, n, std::move(ta), /*symmetric=*/true);
  sys.stiffness_factor = std::make_shared<const CholeskyFactor>(sys.stiffness);
  return sys;
}

/// Load vector b = M * f for a nodally interpolated source.
inline std::vector<double> load_vector(const FemSystem& sys, const NodalFunction& f) {
  require_same_mesh(f, sys.mesh());
  return spmv(sys.mass, f.values);
}

/// Discrete L2 inner product (x, y)_M = x^T M y.
inline double m_inner(const FemSystem& sys, std::span<const double> x, std::span<const double> y) {
  if (x.size() != sys.n() || y.size() != sys.n())
    throw std::invalid_argument("m_inner: dimension mismatch");
  const std::vector<double> my = spmv(sys.mass, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * my[i];
  return s;
}

inline double m_norm(const FemSystem& sys, std::span<const double> x) {
  return std::sqrt(m_inner(sys, x, x));
}

}  // namespace heatinv

#endif  // HEATINV_FEM_HPP
