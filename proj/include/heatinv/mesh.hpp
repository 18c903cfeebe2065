#ifndef HEATINV_MESH_HPP
#define HEATINV_MESH_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace heatinv {

/// Structured triangulation of the rectangle [0,lx] x [0,ly]: uniform grid
/// of square cells, each split along the lower-left to upper-right
/// diagonal. Homogeneous Dirichlet boundary, so degrees of freedom are the
/// interior nodes only.
struct Mesh {
  double lx = 0.0;
  double ly = 0.0;
  double h = 0.0;
  std::size_t nx = 0;  // cells per side
  std::size_t ny = 0;
  std::vector<std::array<double, 2>> node_coords;
  std::vector<std::array<std::size_t, 3>> triangles;  // CCW vertex node indices
  std::vector<std::ptrdiff_t> interior_map;           // node -> interior dof, -1 on boundary
  std::vector<std::size_t> interior_nodes;            // interior dof -> node

  std::size_t n_nodes() const { return node_coords.size(); }
  std::size_t n_interior() const { return interior_nodes.size(); }
  std::size_t node_index(std::size_t i, std::size_t j) const { return j * (nx + 1) + i; }

  bool same_layout(const Mesh& other) const {
    return nx == other.nx && ny == other.ny && lx == other.lx && ly == other.ly;
  }
};

inline Mesh build_mesh(double lx, double ly, double h) {
  if (!(lx > 0.0) || !(ly > 0.0) || !(h > 0.0))
    throw std::invalid_argument("build_mesh: lx, ly, h must be positive");
  const double rx = lx / h, ry = ly / h;
  const double nx_d = std::round(rx), ny_d = std::round(ry);
  if (std::abs(rx - nx_d) > 1e-12 * std::max(1.0, rx) || nx_d < 1.0 ||
      std::abs(ry - ny_d) > 1e-12 * std::max(1.0, ry) || ny_d < 1.0)
    throw std::invalid_argument("build_mesh: h does not divide the domain sides");

  Mesh m;
  m.lx = lx;
  m.ly = ly;
  m.h = h;
  m.nx = static_cast<std::size_t>(nx_d);
  m.ny = static_cast<std::size_t>(ny_d);
  const double hx = lx / static_cast<double>(m.nx);
  const double hy = ly / static_cast<double>(m.ny);

  m.node_coords.reserve((m.nx + 1) * (m.ny + 1));
  for (std::size_t j = 0; j <= m.ny; ++j)
    for (std::size_t i = 0; i <= m.nx; ++i)
      m.node_coords.push_back({static_cast<double>(i) * hx, static_cast<double>(j) * hy});

  m.triangles.reserve(2 * m.nx * m.ny);
  for (std::size_t j = 0; j < m.ny; ++j) {
    for (std::size_t i = 0; i < m.nx; ++i) {
      const std::size_t p00 = m.node_index(i, j);
      const std::size_t p10 = m.node_index(i + 1, j);
      const std::size_t p01 = m.node_index(i, j + 1);
      const std::size_t p11 = m.node_index(i + 1, j + 1);
      m.triangles.push_back({p00, p10, p11});
      m.triangles.push_back({p00, p11, p01});
    }
  }

  m.interior_map.assign(m.n_nodes(), -1);
  for (std::size_t j = 1; j < m.ny; ++j) {
    for (std::size_t i = 1; i < m.nx; ++i) {
      const std::size_t node = m.node_index(i, j);
      m.interior_map[node] = static_cast<std::ptrdiff_t>(m.interior_nodes.size());
      m.interior_nodes.push_back(node);
    }
  }
  return m;
}

/// Piecewise-linear function on the interior dofs of a mesh; boundary
/// values are implicitly zero.
struct NodalFunction {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;

  static NodalFunction zero(std::shared_ptr<const Mesh> m) {
    NodalFunction f;
    f.values.assign(m->n_interior(), 0.0);
    f.mesh = std::move(m);
    return f;
  }

  template <typename F>
  static NodalFunction from_callable(std::shared_ptr<const Mesh> m, F&& f) {
    NodalFunction g;
    g.values.reserve(m->n_interior());
    for (std::size_t node : m->interior_nodes) {
      const auto& c = m->node_coords[node];
      g.values.push_back(f(c[0], c[1]));
    }
    g.mesh = std::move(m);
    return g;
  }

  bool is_zero() const {
    for (double v : values)
      if (v != 0.0) return false;
    return true;
  }
};

inline void require_same_mesh(const NodalFunction& f, const Mesh& mesh) {
  if (!f.mesh || !f.mesh->same_layout(mesh) || f.values.size() != mesh.n_interior())
    throw std::invalid_argument("nodal function does not match mesh");
}

}  // namespace heatinv

#endif  // HEATINV_MESH_HPP
