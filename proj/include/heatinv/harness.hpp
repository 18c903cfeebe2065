#ifndef HEATINV_HARNESS_HPP
#define HEATINV_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "heatinv/fem.hpp"
#include "heatinv/forward.hpp"
#include "heatinv/image.hpp"
#include "heatinv/inverse.hpp"
#include "heatinv/measure.hpp"
#include "heatinv/mesh.hpp"
#include "heatinv/rom.hpp"
#include "heatinv/sources.hpp"

namespace heatinv {

/// Effective parameters of one pipeline run. Defaults follow the standard
/// unit-square setup: h = dt = 1/2^8, T = 1, lambda_n = 1e-7,
/// cg_tol = 1e-8, sigma = 1e-3, ell = 10, rom_tol = 1e-14.
struct RunConfig {
  double lx = 1.0;
  double ly = 1.0;
  double h = 1.0 / 256.0;
  double dt = 1.0 / 256.0;
  double t_final = 1.0;
  std::string engine = "fem";  // fem | rom
  std::size_t ell = 10;
  double rom_tol = 1e-14;
  double lambda_n = 1e-7;
  double cg_tol = 1e-8;
  std::size_t max_iter = 1000;
  double sigma = 1e-3;
  std::uint64_t seed = 1;
  SourceSpec source = SourceSpec::analytic("sin_pi_x_sin_pi_y");
  SourceSpec initial_guess = SourceSpec::analytic("sin_pi_x_sin_pi_y");
  std::string output_dir = "out";

  void validate() const {
    if (engine != "fem" && engine != "rom")
      throw std::invalid_argument("config: engine must be 'fem' or 'rom'");
    for (auto [v, name] : {std::pair{lx, "lx"}, {ly, "ly"}, {h, "h"}, {dt, "dt"},
                           {t_final, "T"}, {rom_tol, "rom_tol"}, {lambda_n, "lambda_n"},
                           {cg_tol, "cg_tol"}})
      if (!(v > 0.0)) throw std::invalid_argument(std::string("config: ") + name + " must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("config: sigma must be >= 0");
    if (ell < 1) throw std::invalid_argument("config: ell must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("config: max_iter must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const SourceSpec& s) {
  if (s.kind == SourceSpec::Kind::analytic) {
    j = {{"kind", "analytic"}, {"name", s.name}};
  } else {
    j = {{"kind", "image"}, {"path", s.path}, {"threshold", s.threshold}};
  }
  if (!s.description.empty()) j["description"] = s.description;
}

inline void from_json(const nlohmann::json& j, SourceSpec& s) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "analytic") {
    s = SourceSpec::analytic(j.at("name").get<std::string>());
  } else if (kind == "image") {
    s = SourceSpec::image(j.at("path").get<std::string>(), j.value("threshold", 128));
  } else {
    throw std::invalid_argument("config: source kind must be 'analytic' or 'image'");
  }
  s.description = j.value("description", std::string{});
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"lx", c.lx},
                     {"ly", c.ly},
                     {"h", c.h},
                     {"dt", c.dt},
                     {"T", c.t_final},
                     {"engine", c.engine},
                     {"ell", c.ell},
                     {"rom_tol", c.rom_tol},
                     {"lambda_n", c.lambda_n},
                     {"cg_tol", c.cg_tol},
                     {"max_iter", c.max_iter},
                     {"sigma", c.sigma},
                     {"seed", c.seed},
                     {"source", c.source},
                     {"initial_guess", c.initial_guess},
                     {"output_dir", c.output_dir}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c.lx = j.value("lx", c.lx);
  c.ly = j.value("ly", c.ly);
  c.h = j.value("h", c.h);
  c.dt = j.value("dt", c.dt);
  c.t_final = j.value("T", c.t_final);
  c.engine = j.value("engine", c.engine);
  c.ell = j.value("ell", c.ell);
  c.rom_tol = j.value("rom_tol", c.rom_tol);
  c.lambda_n = j.value("lambda_n", c.lambda_n);
  c.cg_tol = j.value("cg_tol", c.cg_tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.sigma = j.value("sigma", c.sigma);
  c.seed = j.value("seed", c.seed);
  if (j.contains("source")) c.source = j.at("source").get<SourceSpec>();
  if (j.contains("initial_guess")) c.initial_guess = j.at("initial_guess").get<SourceSpec>();
  c.output_dir = j.value("output_dir", c.output_dir);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config: parse error in " + path + ": " + e.what());
  }
  RunConfig cfg = j.get<RunConfig>();
  // image paths in a config file are relative to the file, not the cwd
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (SourceSpec* s : {&cfg.source, &cfg.initial_guess})
    if (s->kind == SourceSpec::Kind::image && !s->path.empty() &&
        std::filesystem::path(s->path).is_relative())
      s->path = (base / s->path).string();
  cfg.validate();
  return cfg;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct StopWatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace detail

/// Interior field as CSV rows "x,y,value" in dof order.
inline void write_field_csv(const std::string& path, const Mesh& mesh,
                            std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x,y,value\n";
  for (std::size_t d = 0; d < values.size(); ++d) {
    const auto& c = mesh.node_coords[mesh.interior_nodes[d]];
    out << detail::fmt_double(c[0]) << ',' << detail::fmt_double(c[1]) << ','
        << detail::fmt_double(values[d]) << '\n';
  }
}

inline void write_residual_csv(const std::string& path, std::span<const double> history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "iter,residual\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << i << ',' << detail::fmt_double(history[i]) << '\n';
}

/// Renders an interior field as one pixel per interior node. The heatmap
/// convention maps min -> 0 and max -> 255; the ink convention inverts it
/// (large values dark), which source bitmaps use so that rasterizing them
/// back with the dark-is-support rule reproduces the field.
enum class PgmStyle { heatmap, ink };

inline GrayscaleImage field_to_pgm(const Mesh& mesh, std::span<const double> values,
                                   PgmStyle style, double* min_out = nullptr,
                                   double* max_out = nullptr) {
  const std::size_t w = mesh.nx - 1, h = mesh.ny - 1;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (min_out) *min_out = lo;
  if (max_out) *max_out = hi;
  const double span = hi - lo;
  GrayscaleImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(w * h);
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) {
      const std::size_t node = mesh.node_index(col + 1, mesh.ny - 1 - row);
      const double v = values[static_cast<std::size_t>(mesh.interior_map[node])];
      int g = span > 0.0 ? static_cast<int>(std::lround((v - lo) / span * 255.0)) : 0;
      if (style == PgmStyle::ink) g = 255 - g;
      img.pixels[row * w + col] = static_cast<std::uint8_t>(std::clamp(g, 0, 255));
    }
  }
  return img;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

/// Builds the configured forward engine over an assembled system.
inline ForwardOperator make_engine(const RunConfig& cfg, const FemSystem& sys,
                                   const TimeGrid& grid) {
  if (cfg.engine == "fem") return fem_forward_operator(sys, grid);
  return rom_forward_operator(sys, grid, cfg.ell, cfg.rom_tol);
}

struct ForwardArtifacts {
  NodalFunction u_final;
  double assemble_s = 0.0;
  double solve_s = 0.0;
  std::size_t rom_rank = 0;  // 0 for the fem engine
  std::size_t n_steps = 0;
};

/// forward subcommand: run the selected engine on the configured source
/// and emit u(T) as CSV + PGM heatmap with a JSON summary.
inline ForwardArtifacts run_forward(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path out(cfg.output_dir);

  detail::StopWatch t_asm;
  FemSystem sys = assemble(build_mesh(cfg.lx, cfg.ly, cfg.h));
  const TimeGrid grid(cfg.dt, cfg.t_final);

  ForwardArtifacts art;
  art.assemble_s = t_asm.seconds();
  art.n_steps = grid.n_steps;

  const NodalFunction f = make_source(cfg.source, sys.mesh_ptr);
  detail::StopWatch t_solve;
  if (f.is_zero()) {
    art.u_final = NodalFunction::zero(sys.mesh_ptr);
  } else if (cfg.engine == "rom") {
    RomSolveStats stats;
    art.u_final = rom_forward_solve(sys, f, grid, cfg.ell, cfg.rom_tol, &stats);
    art.rom_rank = stats.rank;
  } else {
    art.u_final = fem_forward_operator(sys, grid)(f);
  }
  art.solve_s = t_solve.seconds();

  write_field_csv((out / "u_T.csv").string(), sys.mesh(), art.u_final.values);
  double lo = 0.0, hi = 0.0;
  write_pgm((out / "u_T.pgm").string(),
            field_to_pgm(sys.mesh(), art.u_final.values, PgmStyle::heatmap, &lo, &hi));

  nlohmann::json summary = {{"engine", cfg.engine},
                            {"n_interior", sys.n()},
                            {"n_steps", grid.n_steps},
                            {"heatmap_min", lo},
                            {"heatmap_max", hi},
                            {"assemble_s", art.assemble_s},
                            {"solve_s", art.solve_s}};
  if (cfg.engine == "rom") summary["rom_rank"] = art.rom_rank;
  write_json((out / "summary.json").string(), summary);
  write_json((out / "config_echo.json").string(), nlohmann::json(cfg));
  return art;
}

struct InvertArtifacts {
  ReconstructionReport report;
  NodalFunction f_true;
  double rel_error_m = 0.0;    // ||f_rec - f*||_M / ||f*||_M
  double data_misfit_n = 0.0;  // ||S f_rec - m||_n with the full-order S
  double noise_level = 0.0;    // ||e||_n / ||u_T||_n
  double setup_s = 0.0;        // assembly + data generation
  double reconstruct_s = 0.0;  // engine construction + CG
};

/// invert subcommand: simulate noisy final-time data with the full-order
/// solver (ground truth never comes from the engine under test), then
/// reconstruct with the configured engine.
inline InvertArtifacts run_invert(const RunConfig& cfg, bool write_outputs = true) {
  cfg.validate();
  const std::filesystem::path out(cfg.output_dir);
  if (write_outputs) std::filesystem::create_directories(out);

  detail::StopWatch t_setup;
  FemSystem sys = assemble(build_mesh(cfg.lx, cfg.ly, cfg.h));
  const TimeGrid grid(cfg.dt, cfg.t_final);

  InvertArtifacts art;
  art.f_true = make_source(cfg.source, sys.mesh_ptr);
  const ForwardOperator fem_op = fem_forward_operator(sys, grid);
  const NodalFunction u_data =
      art.f_true.is_zero() ? NodalFunction::zero(sys.mesh_ptr) : fem_op(art.f_true);
  const MeasurementSet meas = simulate_measurements(u_data, cfg.sigma, cfg.seed);
  art.setup_s = t_setup.seconds();

  std::vector<double> noise(meas.values.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = meas.values[i] - u_data.values[i];
  const double u_norm = empirical_norm(u_data.values);
  art.noise_level = u_norm > 0.0 ? empirical_norm(noise) / u_norm : 0.0;

  detail::StopWatch t_rec;
  const ForwardOperator engine = make_engine(cfg, sys, grid);
  InverseConfig inv;
  inv.lambda_n = cfg.lambda_n;
  inv.cg_tol = cfg.cg_tol;
  inv.max_iter = cfg.max_iter;
  inv.f0 = make_source(cfg.initial_guess, sys.mesh_ptr);
  art.report = cg_reconstruct(engine, meas.values, inv, sys);
  art.reconstruct_s = t_rec.seconds();

  const std::vector<double>& frec = art.report.f_rec.values;
  std::vector<double> diff(frec.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = frec[i] - art.f_true.values[i];
  const double truth_norm = m_norm(sys, art.f_true.values);
  art.rel_error_m = truth_norm > 0.0 ? m_norm(sys, diff) / truth_norm : m_norm(sys, diff);

  const NodalFunction s_frec = fem_op(art.report.f_rec);
  std::vector<double> misfit(frec.size());
  for (std::size_t i = 0; i < misfit.size(); ++i) misfit[i] = s_frec.values[i] - meas.values[i];
  art.data_misfit_n = empirical_norm(misfit);

  if (write_outputs) {
    write_field_csv((out / "reconstruction.csv").string(), sys.mesh(), frec);
    write_pgm((out / "reconstruction.pgm").string(),
              field_to_pgm(sys.mesh(), frec, PgmStyle::ink));
    write_pgm((out / "true_source.pgm").string(),
              field_to_pgm(sys.mesh(), art.f_true.values, PgmStyle::ink));
    write_residual_csv((out / "residual_history.csv").string(), art.report.residual_history);
    const nlohmann::json metrics = {{"engine", cfg.engine},
                                    {"iterations", art.report.iterations},
                                    {"forward_solves", art.report.forward_solve_count},
                                    {"rel_error_m", art.rel_error_m},
                                    {"data_misfit_n", art.data_misfit_n},
                                    {"noise_level", art.noise_level},
                                    {"sigma", cfg.sigma},
                                    {"setup_s", art.setup_s},
                                    {"reconstruct_s", art.reconstruct_s},
                                    {"cg_wall_s", art.report.wall_time_s}};
    write_json((out / "metrics.json").string(), metrics);
    write_json((out / "config_echo.json").string(), nlohmann::json(cfg));
  }
  return art;
}

struct BenchRow {
  double h = 0.0;
  double dt = 0.0;
  double fem_time_s = 0.0;
  double rom_time_s = 0.0;
  double gain = 0.0;
  std::size_t fem_ite = 0;
  std::size_t rom_ite = 0;
  double fem_rel_err = 0.0;
  double rom_rel_err = 0.0;
};

inline void write_bench_csv(const std::string& path, std::span<const BenchRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "h,dt,fem_time_s,rom_time_s,gain,fem_ite,rom_ite,fem_rel_err,rom_rel_err\n";
  for (const BenchRow& r : rows)
    out << detail::fmt_double(r.h) << ',' << detail::fmt_double(r.dt) << ','
        << detail::fmt_double(r.fem_time_s) << ',' << detail::fmt_double(r.rom_time_s) << ','
        << detail::fmt_double(r.gain) << ',' << r.fem_ite << ',' << r.rom_ite << ','
        << detail::fmt_double(r.fem_rel_err) << ',' << detail::fmt_double(r.rom_rel_err) << '\n';
}

/// bench subcommand: for each mesh size h = dt, reconstruct the same noisy
/// data with both engines and record reconstruction wall times and the
/// efficiency gain fem_time / rom_time. Timing covers engine construction
/// plus the CG loop; assembly and data generation are shared and excluded.
inline std::vector<BenchRow> run_bench(const RunConfig& cfg_base,
                                       std::span<const double> mesh_sizes,
                                       std::size_t repeat = 1, bool write_outputs = true) {
  if (mesh_sizes.empty()) throw std::invalid_argument("run_bench: empty mesh size list");
  if (repeat < 1) throw std::invalid_argument("run_bench: repeat must be >= 1");
  std::vector<BenchRow> rows;
  for (const double h : mesh_sizes) {
    RunConfig cfg = cfg_base;
    cfg.h = h;
    cfg.dt = h;
    cfg.validate();

    FemSystem sys = assemble(build_mesh(cfg.lx, cfg.ly, cfg.h));
    const TimeGrid grid(cfg.dt, cfg.t_final);
    const NodalFunction f_true = make_source(cfg.source, sys.mesh_ptr);
    const NodalFunction u_data = fem_forward_operator(sys, grid)(f_true);
    const MeasurementSet meas = simulate_measurements(u_data, cfg.sigma, cfg.seed);

    InverseConfig inv;
    inv.lambda_n = cfg.lambda_n;
    inv.cg_tol = cfg.cg_tol;
    inv.max_iter = cfg.max_iter;
    inv.f0 = make_source(cfg.initial_guess, sys.mesh_ptr);

    const double truth_norm = m_norm(sys, f_true.values);
    auto run_engine = [&](const std::string& engine, double& time_s, std::size_t& ite,
                          double& rel_err) {
      double total = 0.0;
      for (std::size_t trial = 0; trial < repeat; ++trial) {
        RunConfig ecfg = cfg;
        ecfg.engine = engine;
        detail::StopWatch t;
        const ForwardOperator op = make_engine(ecfg, sys, grid);
        const ReconstructionReport rep = cg_reconstruct(op, meas.values, inv, sys);
        total += t.seconds();
        ite = rep.iterations;
        std::vector<double> diff(rep.f_rec.values.size());
        for (std::size_t i = 0; i < diff.size(); ++i)
          diff[i] = rep.f_rec.values[i] - f_true.values[i];
        rel_err = truth_norm > 0.0 ? m_norm(sys, diff) / truth_norm : m_norm(sys, diff);
      }
      time_s = total / static_cast<double>(repeat);
    };

    BenchRow row;
    row.h = cfg.h;
    row.dt = cfg.dt;
    run_engine("fem", row.fem_time_s, row.fem_ite, row.fem_rel_err);
    run_engine("rom", row.rom_time_s, row.rom_ite, row.rom_rel_err);
    row.gain = row.fem_time_s / row.rom_time_s;
    rows.push_back(row);
  }
  if (write_outputs) {
    std::filesystem::create_directories(cfg_base.output_dir);
    const std::filesystem::path out(cfg_base.output_dir);
    write_bench_csv((out / "bench.csv").string(), rows);
    write_json((out / "config_echo.json").string(), nlohmann::json(cfg_base));
  }
  return rows;
}

}  // namespace heatinv

#endif  // HEATINV_HARNESS_HPP
