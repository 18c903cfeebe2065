#ifndef HEATINV_HEATINV_HPP
#define HEATINV_HEATINV_HPP

// Umbrella header for the heatinv library: parabolic inverse source
// reconstruction with interchangeable full-order (FEM/BDF2) and
// Krylov reduced-order forward solvers.

#include "heatinv/fem.hpp"
#include "heatinv/forward.hpp"
#include "heatinv/harness.hpp"
#include "heatinv/image.hpp"
#include "heatinv/inverse.hpp"
#include "heatinv/linalg.hpp"
#include "heatinv/measure.hpp"
#include "heatinv/mesh.hpp"
#include "heatinv/oracle.hpp"
#include "heatinv/rng.hpp"
#include "heatinv/rom.hpp"
#include "heatinv/sources.hpp"

#endif  // HEATINV_HEATINV_HPP
