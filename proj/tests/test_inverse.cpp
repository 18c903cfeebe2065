#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "heatinv/fem.hpp"
#include "heatinv/forward.hpp"
#include "heatinv/inverse.hpp"
#include "heatinv/oracle.hpp"
#include "heatinv/rom.hpp"
#include "heatinv/sources.hpp"
#include "test_support.hpp"

using namespace heatinv;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup {
  FemSystem sys;
  TimeGrid grid;
  ForwardOperator fem_op;
};

Setup make_setup(double h) {
  Setup s{assemble(build_mesh(1.0, 1.0, h)), TimeGrid(h, 1.0), {}};
  s.fem_op = fem_forward_operator(s.sys, s.grid);
  return s;
}

}  // namespace

TEST_CASE("consistent data at the initial guess converges immediately") {
  const Setup s = make_setup(1.0 / 16.0);
  const NodalFunction f0 = analytic_source("sin_pi_x_sin_pi_y", s.sys.mesh_ptr);
  const NodalFunction u0 = s.fem_op(f0);

  InverseConfig cfg;
  cfg.lambda_n = 1e-12;
  cfg.cg_tol = 1e-8;
  cfg.f0 = f0;
  const ReconstructionReport rep = cg_reconstruct(s.fem_op, u0.values, cfg, s.sys);

  REQUIRE(rep.iterations <= 2);
  REQUIRE(rep.forward_solve_count == 2 + 2 * rep.iterations);
  REQUIRE(rep.residual_history.back() < cfg.cg_tol);
  REQUIRE(testsupport::rel_diff2(rep.f_rec.values, f0.values) <= 1e-6);
}

TEST_CASE("spectral Tikhonov filter is recovered for an eigenmode source") {
  const Setup s = make_setup(1.0 / 32.0);
  const NodalFunction f_true = analytic_source("sin_2pi_x_sin_pi_y", s.sys.mesh_ptr);
  const NodalFunction m = s.fem_op(f_true);  // noiseless data

  InverseConfig cfg;
  cfg.lambda_n = 1e-7;
  cfg.cg_tol = 1e-8;
  cfg.f0 = analytic_source("sin_pi_x_sin_pi_y", s.sys.mesh_ptr);

  const ReconstructionReport fem_rep = cg_reconstruct(s.fem_op, m.values, cfg, s.sys);
  const double amp = m_inner(s.sys, fem_rep.f_rec.values, f_true.values) /
                     m_inner(s.sys, f_true.values, f_true.values);

  const double s_mode = oracle::spectral_forward(2, 1, 1.0, 1.0, 1.0);
  const double filter = oracle::spectral_tikhonov_filter(s_mode, 1e-7);
  REQUIRE(filter == Approx(0.999757).epsilon(1e-4));
  REQUIRE(amp == Approx(filter).epsilon(1e-2));

  // the ROM pipeline lands on the same minimizer
  const ForwardOperator rom_op = rom_forward_operator(s.sys, s.grid, 10, 1e-14);
  const ReconstructionReport rom_rep = cg_reconstruct(rom_op, m.values, cfg, s.sys);
  std::vector<double> diff(fem_rep.f_rec.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = rom_rep.f_rec.values[i] - fem_rep.f_rec.values[i];
  REQUIRE(m_norm(s.sys, diff) / m_norm(s.sys, fem_rep.f_rec.values) <= 5e-2);
}

TEST_CASE("objective value basics") {
  const Setup s = make_setup(1.0 / 8.0);
  const NodalFunction zero = NodalFunction::zero(s.sys.mesh_ptr);
  const std::vector<double> zero_m(s.sys.n(), 0.0);

  // the fem operator maps 0 to 0, so J(0) with m = 0 vanishes
  REQUIRE(objective_value(s.fem_op, s.sys, zero, zero_m, 1e-7) == 0.0);

  const std::vector<double> m = testsupport::random_vector(s.sys.n(), 17);
  const double en = empirical_norm(m);
  REQUIRE(objective_value(s.fem_op, s.sys, zero, m, 1e-7) == Approx(0.5 * en * en).epsilon(1e-13));
}

TEST_CASE("objective decreases along the CG iterates") {
  const Setup s = make_setup(1.0 / 16.0);
  const NodalFunction f_true = analytic_source("sin_2pi_x_sin_pi_y", s.sys.mesh_ptr);
  const NodalFunction m = s.fem_op(f_true);

  InverseConfig cfg;
  cfg.lambda_n = 1e-7;
  cfg.cg_tol = 1e-8;
  cfg.f0 = analytic_source("sin_pi_x_sin_pi_y", s.sys.mesh_ptr);

  std::vector<double> objectives;
  objectives.push_back(objective_value(s.fem_op, s.sys, cfg.f0, m.values, cfg.lambda_n));
  const auto observer = [&](std::size_t, const NodalFunction& fk) {
    objectives.push_back(objective_value(s.fem_op, s.sys, fk, m.values, cfg.lambda_n));
  };
  (void)cg_reconstruct(s.fem_op, m.values, cfg, s.sys, observer);

  REQUIRE(objectives.size() >= 2);
  for (std::size_t i = 1; i < objectives.size(); ++i)
    REQUIRE(objectives[i] <= objectives[i - 1] * (1.0 + 1e-12) + 1e-18);
}

TEST_CASE("algorithm residual is the exact gradient in the M geometry") {
  const Setup s = make_setup(1.0 / 16.0);
  const double lambda = 1e-5;
  const std::vector<double> m = testsupport::random_vector(s.sys.n(), 23);

  NodalFunction f = NodalFunction::zero(s.sys.mesh_ptr);
  f.values = testsupport::random_vector(s.sys.n(), 24);

  // r = S(m - S f) - lambda f
  const NodalFunction sf = s.fem_op(f);
  NodalFunction tmp = sf;
  for (std::size_t i = 0; i < tmp.values.size(); ++i) tmp.values[i] = m[i] - sf.values[i];
  NodalFunction r = s.fem_op(tmp);
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= lambda * f.values[i];

  // J_M(f) = 1/2 ||S f - m||_M^2 + lambda/2 ||f||_M^2; then (grad_M J_M, d)_M = -(r, d)_M
  const auto j_m = [&](const NodalFunction& g) {
    const NodalFunction sg = s.fem_op(g);
    std::vector<double> mis(sg.values.size());
    for (std::size_t i = 0; i < mis.size(); ++i) mis[i] = sg.values[i] - m[i];
    return 0.5 * m_inner(s.sys, mis, mis) + 0.5 * lambda * m_inner(s.sys, g.values, g.values);
  };

  const double eps = 1e-5;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    NodalFunction d = NodalFunction::zero(s.sys.mesh_ptr);
    d.values = testsupport::random_vector(s.sys.n(), 700 + trial);

    NodalFunction plus = f, minus = f;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      plus.values[i] += eps * d.values[i];
      minus.values[i] -= eps * d.values[i];
    }
    const double fd = (j_m(plus) - j_m(minus)) / (2.0 * eps);
    const double predicted = -m_inner(s.sys, r.values, d.values);
    REQUIRE(fd == Approx(predicted).epsilon(1e-4));
  }
}

TEST_CASE("empirical and M misfits differ by the constant n*h^2 on smooth fields") {
  // the two norms in the objective are linked by the mass row sums; on
  // smooth fields the ratio approaches n*h^2 with an O(h^2) quadrature gap
  const Setup s = make_setup(1.0 / 16.0);
  const NodalFunction f = analytic_source("sin_pi_x_sin_pi_y", s.sys.mesh_ptr);
  const NodalFunction sf = s.fem_op(f);
  const double mn = m_norm(s.sys, sf.values);
  const double en = empirical_norm(sf.values);
  const double h = s.sys.mesh().h;
  const double kappa = static_cast<double>(s.sys.n()) * h * h;
  REQUIRE(mn * mn / (en * en) == Approx(kappa).epsilon(2e-2));
}

TEST_CASE("search directions are conjugate and residual norms contract") {
  const Setup s = make_setup(1.0 / 16.0);
  const NodalFunction f_true = analytic_source("sin_2pi_x_sin_pi_y", s.sys.mesh_ptr);
  const NodalFunction m = s.fem_op(f_true);

  InverseConfig cfg;
  cfg.lambda_n = 1e-7;
  cfg.cg_tol = 1e-8;
  cfg.f0 = analytic_source("sin_pi_x_sin_pi_y", s.sys.mesh_ptr);

  CgTrace trace;
  trace.max_records = 5;
  (void)cg_reconstruct(s.fem_op, m.values, cfg, s.sys, {}, &trace);

  const std::size_t k = trace.p_history.size();
  REQUIRE(k >= 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double cross = m_inner(s.sys, trace.p_history[i], trace.ap_history[j]);
      const double di = m_inner(s.sys, trace.p_history[i], trace.ap_history[i]);
      const double dj = m_inner(s.sys, trace.p_history[j], trace.ap_history[j]);
      REQUIRE(std::abs(cross) <= 1e-6 * std::sqrt(di * dj));
    }
  }

  for (std::size_t i = 1; i < trace.r_norm_history.size(); ++i)
    REQUIRE(trace.r_norm_history[i] <=
            trace.r_norm_history[i - 1] * (1.0 + 1e-10) + 1e-30);
}

TEST_CASE("both engines reconstruct the same source from identical noisy data") {
  const Setup s = make_setup(1.0 / 32.0);
  const GrayscaleImage img = load_pgm(testsupport::data_path("letter_A.pgm"));
  const NodalFunction f_true = rasterize_image_source(img, s.sys.mesh_ptr, 128);
  const NodalFunction u = s.fem_op(f_true);
  const MeasurementSet meas = simulate_measurements(u, 1e-3, 7);

  InverseConfig cfg;
  cfg.f0 = analytic_source("sin_pi_x_sin_pi_y", s.sys.mesh_ptr);
  const ReconstructionReport fem_rep = cg_reconstruct(s.fem_op, meas.values, cfg, s.sys);
  const ForwardOperator rom_op = rom_forward_operator(s.sys, s.grid, 10, 1e-14);
  const ReconstructionReport rom_rep = cg_reconstruct(rom_op, meas.values, cfg, s.sys);

  std::vector<double> diff(fem_rep.f_rec.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = rom_rep.f_rec.values[i] - fem_rep.f_rec.values[i];
  REQUIRE(m_norm(s.sys, diff) / m_norm(s.sys, fem_rep.f_rec.values) <= 5e-2);
}

TEST_CASE("invalid configurations and inputs are rejected") {
  const Setup s = make_setup(1.0 / 8.0);
  InverseConfig cfg;
  cfg.f0 = NodalFunction::zero(s.sys.mesh_ptr);

  cfg.lambda_n = 0.0;
  REQUIRE_THROWS_AS(cg_reconstruct(s.fem_op, std::vector<double>(s.sys.n(), 0.0), cfg, s.sys),
                    std::invalid_argument);
  cfg.lambda_n = 1e-7;
  REQUIRE_THROWS_AS(cg_reconstruct(s.fem_op, std::vector<double>{1.0}, cfg, s.sys),
                    std::invalid_argument);

  // an engine returning non-finite values trips the positivity guard
  const ForwardOperator nan_op = [&](const NodalFunction& g) {
    NodalFunction out = g;
    for (double& v : out.values) v = std::numeric_limits<double>::quiet_NaN();
    return out;
  };
  const std::vector<double> m = testsupport::random_vector(s.sys.n(), 3);
  REQUIRE_THROWS_AS(cg_reconstruct(nan_op, m, cfg, s.sys), std::runtime_error);
}
