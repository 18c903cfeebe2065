#ifndef HEATINV_MEASURE_HPP
#define HEATINV_MEASURE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatinv/mesh.hpp"
#include "heatinv/rng.hpp"

namespace heatinv {

/// Pointwise sensor readings m_i = u(x_i, T) + e_i with i.i.d. Gaussian
/// noise; sensors are the interior mesh nodes.
struct MeasurementSet {
  std::vector<double> values;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_sensors = 0;
};

inline MeasurementSet simulate_measurements(const NodalFunction& u_final, double sigma,
                                            std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("simulate_measurements: sigma must be >= 0");
  MeasurementSet m;
  m.values = u_final.values;
  m.sigma = sigma;
  m.seed = seed;
  m.n_sensors = u_final.values.size();
  if (sigma > 0.0) {
    GaussianStream noise(seed);
    for (double& v : m.values) v += sigma * noise.next();
  }
  return m;
}

/// Empirical norm ||v||_n = sqrt((1/n) sum v_i^2).
inline double empirical_norm(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("empirical_norm: empty vector");
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace heatinv

#endif  // HEATINV_MEASURE_HPP
