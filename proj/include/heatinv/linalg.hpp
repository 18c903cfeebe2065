#ifndef HEATINV_LINALG_HPP
#define HEATINV_LINALG_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heatinv {

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row and exact zeros are dropped at construction.
struct SparseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_offsets;  // length n_rows + 1
  std::vector<std::size_t> col_indices;
  std::vector<double> values;
  bool symmetric = false;

  std::size_t nnz() const { return values.size(); }

  /// Stored value at (i, j), 0 if the entry is not stored.
  double value(std::size_t i, std::size_t j) const {
    const auto begin = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
    const auto end = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
  }
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Builds a CSR matrix from (row, col, value) triplets. Duplicates are
/// summed; entries that sum to exactly zero are dropped so the stored
/// pattern is deterministic.
inline SparseMatrix csr_from_triplets(std::size_t n_rows, std::size_t n_cols,
                                      std::vector<Triplet> triplets,
                                      bool symmetric = false) {
  for (const Triplet& t : triplets) {
    if (t.row >= n_rows || t.col >= n_cols)
      throw std::invalid_argument("csr_from_triplets: index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.symmetric = symmetric;
  m.row_offsets.assign(n_rows + 1, 0);

  std::size_t k = 0;
  while (k < triplets.size()) {
    const std::size_t r = triplets[k].row;
    const std::size_t c = triplets[k].col;
    double sum = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
      sum += triplets[k].value;
      ++k;
    }
    if (sum != 0.0) {
      m.col_indices.push_back(c);
      m.values.push_back(sum);
      ++m.row_offsets[r + 1];
    }
  }
  for (std::size_t r = 0; r < n_rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];

  if (symmetric) {
    if (n_rows != n_cols)
      throw std::invalid_argument("csr_from_triplets: symmetric matrix must be square");
    for (std::size_t i = 0; i < n_rows; ++i) {
      for (std::size_t p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) {
        if (m.value(m.col_indices[p], i) != m.values[p])
          throw std::invalid_argument("csr_from_triplets: matrix tagged symmetric is not");
      }
    }
  }
  return m;
}

/// Sparse matrix-vector product.
inline std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
  if (x.size() != a.n_cols) throw std::invalid_argument("spmv: dimension mismatch");
  std::vector<double> y(a.n_rows, 0.0);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    double s = 0.0;
    for (std::size_t p = a.row_offsets[i]; p < a.row_offsets[i + 1]; ++p)
      s += a.values[p] * x[a.col_indices[p]];
    y[i] = s;
  }
  return y;
}

/// alpha*a + beta*b with merged sparsity patterns.
inline SparseMatrix add_scaled(double alpha, const SparseMatrix& a, double beta,
                               const SparseMatrix& b) {
  if (a.n_rows != b.n_rows || a.n_cols != b.n_cols)
    throw std::invalid_argument("add_scaled: dimension mismatch");
  SparseMatrix m;
  m.n_rows = a.n_rows;
  m.n_cols = a.n_cols;
  m.symmetric = a.symmetric && b.symmetric;
  m.row_offsets.assign(a.n_rows + 1, 0);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    std::size_t pa = a.row_offsets[i], pb = b.row_offsets[i];
    const std::size_t ea = a.row_offsets[i + 1], eb = b.row_offsets[i + 1];
    while (pa < ea || pb < eb) {
      std::size_t c;
      double v = 0.0;
      if (pa < ea && (pb >= eb || a.col_indices[pa] <= b.col_indices[pb])) {
        c = a.col_indices[pa];
        v = alpha * a.values[pa];
        ++pa;
        if (pb < eb && b.col_indices[pb] == c) {
          v += beta * b.values[pb];
          ++pb;
        }
      } else {
        c = b.col_indices[pb];
        v = beta * b.values[pb];
        ++pb;
      }
      if (v != 0.0) {
        m.col_indices.push_back(c);
        m.values.push_back(v);
        ++m.row_offsets[i + 1];
      }
    }
  }
  for (std::size_t r = 0; r < m.n_rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
  return m;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> adjacency(const SparseMatrix& a) {
  std::vector<std::vector<std::size_t>> adj(a.n_rows);
  for (std::size_t i = 0; i < a.n_rows; ++i)
    for (std::size_t p = a.row_offsets[i]; p < a.row_offsets[i + 1]; ++p)
      if (a.col_indices[p] != i) adj[i].push_back(a.col_indices[p]);
  return adj;
}

inline std::vector<std::size_t> bfs_levels(const std::vector<std::vector<std::size_t>>& adj,
                                           std::size_t root, std::vector<std::size_t>& order) {
  std::vector<std::size_t> level(adj.size(), std::numeric_limits<std::size_t>::max());
  order.clear();
  order.push_back(root);
  level[root] = 0;
  for (std::size_t q = 0; q < order.size(); ++q) {
    const std::size_t u = order[q];
    for (std::size_t v : adj[u]) {
      if (level[v] == std::numeric_limits<std::size_t>::max()) {
        level[v] = level[u] + 1;
        order.push_back(v);
      }
    }
  }
  return level;
}

// George-Liu pseudo-peripheral node of the component containing seed.
inline std::size_t pseudo_peripheral(const std::vector<std::vector<std::size_t>>& adj,
                                     std::size_t seed) {
  std::vector<std::size_t> order;
  std::size_t x = seed;
  std::vector<std::size_t> level = bfs_levels(adj, x, order);
  std::size_t ecc = level[order.back()];
  for (;;) {
    // min-degree node in the deepest level
    std::size_t best = order.back();
    for (auto it = order.rbegin(); it != order.rend() && level[*it] == ecc; ++it)
      if (adj[*it].size() < adj[best].size() || (adj[*it].size() == adj[best].size() && *it < best))
        best = *it;
    level = bfs_levels(adj, best, order);
    const std::size_t new_ecc = level[order.back()];
    if (new_ecc <= ecc) return best;
    ecc = new_ecc;
    x = best;
  }
}

}  // namespace detail

/// Reverse Cuthill-McKee ordering; returns perm with perm[new] = old.
inline std::vector<std::size_t> reverse_cuthill_mckee(const SparseMatrix& a) {
  const auto adj = detail::adjacency(a);
  const std::size_t n = a.n_rows;
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (visited[s]) continue;
    const std::size_t root = detail::pseudo_peripheral(adj, s);
    std::size_t q = order.size();
    order.push_back(root);
    visited[root] = true;
    for (; q < order.size(); ++q) {
      const std::size_t u = order[q];
      std::vector<std::size_t> nb;
      for (std::size_t v : adj[u])
        if (!visited[v]) nb.push_back(v);
      std::sort(nb.begin(), nb.end(), [&](std::size_t x, std::size_t y) {
        return adj[x].size() != adj[y].size() ? adj[x].size() < adj[y].size() : x < y;
      });
      for (std::size_t v : nb) {
        visited[v] = true;
        order.push_back(v);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

enum class Ordering { rcm, natural };

/// Sparse Cholesky factorization of an SPD matrix in envelope (profile)
/// storage, with an optional fill-reducing RCM permutation. The factor is
/// built once and reused for many solves; a solve counter tracks usage.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SparseMatrix& a, Ordering ordering = Ordering::rcm) {
    if (a.n_rows != a.n_cols)
      throw std::invalid_argument("cholesky_factor: matrix must be square");
    n_ = a.n_rows;
    if (ordering == Ordering::rcm) {
      perm_ = reverse_cuthill_mckee(a);
    } else {
      perm_.resize(n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    }
    pinv_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) pinv_[perm_[i]] = i;

    // envelope of the permuted lower triangle
    first_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) first_[i] = i;
    for (std::size_t r = 0; r < n_; ++r) {
      const std::size_t i = pinv_[r];
      for (std::size_t p = a.row_offsets[r]; p < a.row_offsets[r + 1]; ++p) {
        const std::size_t j = pinv_[a.col_indices[p]];
        if (j <= i) first_[i] = std::min(first_[i], j);
        else first_[j] = std::min(first_[j], i);
      }
    }
    off_.resize(n_ + 1);
    off_[0] = 0;
    for (std::size_t i = 0; i < n_; ++i) off_[i + 1] = off_[i] + (i - first_[i] + 1);
    val_.assign(off_[n_], 0.0);

    for (std::size_t r = 0; r < n_; ++r) {
      const std::size_t i = pinv_[r];
      for (std::size_t p = a.row_offsets[r]; p < a.row_offsets[r + 1]; ++p) {
        const std::size_t j = pinv_[a.col_indices[p]];
        if (j <= i) val_[pos(i, j)] = a.values[p];
      }
    }
    factorize();
  }

  CholeskyFactor(const CholeskyFactor& other)
      : n_(other.n_), perm_(other.perm_), pinv_(other.pinv_), first_(other.first_),
        off_(other.off_), val_(other.val_), solves_(other.solves_.load()) {}
  CholeskyFactor& operator=(const CholeskyFactor& other) {
    if (this != &other) {
      n_ = other.n_;
      perm_ = other.perm_;
      pinv_ = other.pinv_;
      first_ = other.first_;
      off_ = other.off_;
      val_ = other.val_;
      solves_.store(other.solves_.load());
    }
    return *this;
  }

  std::size_t dim() const { return n_; }
  const std::vector<std::size_t>& permutation() const { return perm_; }
  std::uint64_t solve_count() const { return solves_.load(); }

  /// Solves a*x = b via forward/back substitution on the permuted factor.
  std::vector<double> solve(std::span<const double> b) const {
    if (b.size() != n_) throw std::invalid_argument("cholesky_solve: dimension mismatch");
    std::vector<double> y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = b[perm_[i]];
    // L y' = y
    for (std::size_t i = 0; i < n_; ++i) {
      double s = y[i];
      for (std::size_t k = first_[i]; k < i; ++k) s -= val_[pos(i, k)] * y[k];
      y[i] = s / val_[pos(i, i)];
    }
    // L^T z = y'
    for (std::size_t ii = n_; ii-- > 0;) {
      y[ii] /= val_[pos(ii, ii)];
      for (std::size_t k = first_[ii]; k < ii; ++k) y[k] -= val_[pos(ii, k)] * y[ii];
    }
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
    solves_.fetch_add(1, std::memory_order_relaxed);
    return x;
  }

  /// Lower-triangular factor as CSR, indexed in the permuted numbering.
  SparseMatrix lower_csr() const {
    std::vector<Triplet> t;
    t.reserve(val_.size());
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = first_[i]; j <= i; ++j)
        if (val_[pos(i, j)] != 0.0) t.push_back({i, j, val_[pos(i, j)]});
    return csr_from_triplets(n_, n_, std::move(t));
  }

 private:
  std::size_t pos(std::size_t i, std::size_t j) const { return off_[i] + (j - first_[i]); }

  void factorize() {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = first_[i]; j < i; ++j) {
        const std::size_t k0 = std::max(first_[i], first_[j]);
        double s = val_[pos(i, j)];
        const double* li = &val_[pos(i, k0)];
        const double* lj = &val_[pos(j, k0)];
        for (std::size_t k = k0; k < j; ++k) s -= li[k - k0] * lj[k - k0];
        val_[pos(i, j)] = s / val_[pos(j, j)];
      }
      double d = val_[pos(i, i)];
      for (std::size_t k = first_[i]; k < i; ++k) d -= val_[pos(i, k)] * val_[pos(i, k)];
      if (!(d > 0.0) || !std::isfinite(d))
        throw std::runtime_error("cholesky_factor: matrix not positive definite");
      val_[pos(i, i)] = std::sqrt(d);
    }
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> perm_;   // new -> old
  std::vector<std::size_t> pinv_;   // old -> new
  std::vector<std::size_t> first_;  // first envelope column per row
  std::vector<std::size_t> off_;
  std::vector<double> val_;
  mutable std::atomic<std::uint64_t> solves_{0};
};

inline CholeskyFactor cholesky_factor(const SparseMatrix& a, Ordering ordering = Ordering::rcm) {
  return CholeskyFactor(a, ordering);
}

inline std::vector<double> cholesky_solve(const CholeskyFactor& f, std::span<const double> b) {
  return f.solve(b);
}

struct PcgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. Fallback
/// path for matrices too large to factor.
inline PcgResult pcg_solve(const SparseMatrix& a, std::span<const double> b, double tol,
                           std::size_t max_iter) {
  if (b.size() != a.n_rows || a.n_rows != a.n_cols)
    throw std::invalid_argument("pcg_solve: dimension mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("pcg_solve: tol must be positive");
  const std::size_t n = a.n_rows;

  std::vector<double> diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a.value(i, i);
  for (double d : diag)
    if (!(d > 0.0)) throw std::runtime_error("pcg_solve: non-positive diagonal");

  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  PcgResult res;
  res.x.assign(n, 0.0);
  if (bnorm == 0.0) return res;

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n), p(n), ap;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

  for (std::size_t it = 0; it < max_iter; ++it) {
    ap = spmv(a, p);
    const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (!(pap > 0.0) || !std::isfinite(pap))
      throw std::runtime_error("pcg_solve: breakdown, matrix not SPD");
    const double alpha = rz / pap;
    double rnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rnorm += r[i] * r[i];
    }
    rnorm = std::sqrt(rnorm);
    if (!std::isfinite(rnorm)) throw std::runtime_error("pcg_solve: divergence");
    res.iterations = it + 1;
    if (rnorm / bnorm <= tol) return res;
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / diag[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;  // max_iter reached; caller inspects iterations
}

/// Small dense symmetric matrix (row-major, full storage).
struct DenseSymMatrix {
  std::size_t dim = 0;
  std::vector<double> values;  // dim*dim

  static DenseSymMatrix zero(std::size_t d) { return DenseSymMatrix{d, std::vector<double>(d * d, 0.0)}; }

  double at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }
  void set_sym(std::size_t i, std::size_t j, double v) {
    values[i * dim + j] = v;
    values[j * dim + i] = v;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  void require_symmetric(double rel_tol = 1e-12) const {
    const double scale = std::max(max_abs(), 1e-300);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j)
        if (std::abs(at(i, j) - at(j, i)) > rel_tol * scale)
          throw std::invalid_argument("sym_eig_small: matrix not symmetric");
  }
};

struct SymEig {
  std::vector<double> eigenvalues;                // descending
  std::vector<std::vector<double>> eigenvectors;  // orthonormal columns
};

/// Cyclic Jacobi eigendecomposition for small symmetric matrices.
/// Sweeps until the off-diagonal Frobenius norm falls below 1e-14*||K||_F.
inline SymEig sym_eig_small(const DenseSymMatrix& k) {
  if (k.dim > 32) throw std::invalid_argument("sym_eig_small: dimension exceeds 32");
  k.require_symmetric();
  const std::size_t n = k.dim;
  std::vector<double> a = k.values;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double norm_f = 0.0;
  for (double x : a) norm_f += x * x;
  norm_f = std::sqrt(norm_f);
  const double stop = 1e-14 * norm_f;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 64 && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double app = a[p * n + p], aqq = a[q * n + q];
        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = a[q * n + p] = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const double arp = a[r * n + p], arq = a[r * n + q];
            a[r * n + p] = a[p * n + r] = arp - s * (arq + tau * arp);
            a[r * n + q] = a[q * n + r] = arq + s * (arp - tau * arq);
          }
          const double vrp = v[r * n + p], vrq = v[r * n + q];
          v[r * n + p] = vrp - s * (vrq + tau * vrp);
          v[r * n + q] = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });

  SymEig e;
  e.eigenvalues.resize(n);
  e.eigenvectors.assign(n, std::vector<double>(n));
  for (std::size_t c = 0; c < n; ++c) {
    e.eigenvalues[c] = a[idx[c] * n + idx[c]];
    for (std::size_t r = 0; r < n; ++r) e.eigenvectors[c][r] = v[r * n + idx[c]];
  }
  return e;
}

/// Dense Cholesky for the small reduced systems (dim <= 32).
struct DenseCholesky {
  std::size_t dim = 0;
  std::vector<double> lower;  // row-major, lower triangle of a full dim*dim block

  static DenseCholesky factor(const DenseSymMatrix& m) {
    DenseCholesky f;
    f.dim = m.dim;
    f.lower.assign(m.dim * m.dim, 0.0);
    const std::size_t n = m.dim;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = m.at(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= f.lower[i * n + k] * f.lower[j * n + k];
        if (i == j) {
          if (!(s > 0.0)) throw std::runtime_error("dense cholesky: matrix not positive definite");
          f.lower[i * n + i] = std::sqrt(s);
        } else {
          f.lower[i * n + j] = s / f.lower[j * n + j];
        }
      }
    }
    return f;
  }

  std::vector<double> solve(std::span<const double> b) const {
    if (b.size() != dim) throw std::invalid_argument("dense cholesky solve: dimension mismatch");
    const std::size_t n = dim;
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) y[i] -= lower[i * n + k] * y[k];
      y[i] /= lower[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= lower[k * n + ii] * y[k];
      y[ii] /= lower[ii * n + ii];
    }
    return y;
  }
};

}  // namespace heatinv

#endif  // HEATINV_LINALG_HPP
