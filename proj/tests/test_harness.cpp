#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "heatinv/harness.hpp"
#include "test_support.hpp"

using namespace heatinv;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("heatinv_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("config json round trip and partial files") {
  RunConfig cfg;
  cfg.h = 1.0 / 32.0;
  cfg.dt = 1.0 / 32.0;
  cfg.engine = "rom";
  cfg.source = SourceSpec::image("data/letter_A.pgm", 100);

  const nlohmann::json j = cfg;
  const RunConfig back = j.get<RunConfig>();
  REQUIRE(back.h == cfg.h);
  REQUIRE(back.engine == "rom");
  REQUIRE(back.source.kind == SourceSpec::Kind::image);
  REQUIRE(back.source.path == "data/letter_A.pgm");
  REQUIRE(back.source.threshold == 100);
  REQUIRE(back.lambda_n == 1e-7);

  const fs::path dir = fresh_dir("cfg");
  {
    std::ofstream out(dir / "partial.json");
    out << R"({"h": 0.0625, "dt": 0.0625, "seed": 9})";
  }
  const RunConfig partial = load_config((dir / "partial.json").string());
  REQUIRE(partial.h == 0.0625);
  REQUIRE(partial.seed == 9);
  REQUIRE(partial.t_final == 1.0);        // default kept
  REQUIRE(partial.engine == "fem");       // default kept
  REQUIRE(partial.cg_tol == 1e-8);

  {
    std::ofstream out(dir / "with_image.json");
    out << R"({"source": {"kind": "image", "path": "glyph.pgm"}})";
  }
  const RunConfig rel = load_config((dir / "with_image.json").string());
  REQUIRE(rel.source.path == (dir / "glyph.pgm").string());  // resolved against the config file

  {
    std::ofstream out(dir / "bad.json");
    out << R"({"engine": "spectral"})";
  }
  REQUIRE_THROWS_AS(load_config((dir / "bad.json").string()), std::invalid_argument);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  REQUIRE_THROWS_WITH(load_config((dir / "broken.json").string()),
                      Catch::Matchers::ContainsSubstring("broken.json"));
}

TEST_CASE("forward heatmaps from both engines agree to one intensity level") {
  RunConfig cfg;
  cfg.h = cfg.dt = 1.0 / 32.0;
  cfg.source = SourceSpec::analytic("sin_pi_x_sin_pi_y");

  const fs::path dir_fem = fresh_dir("fwd_fem");
  cfg.engine = "fem";
  cfg.output_dir = dir_fem.string();
  (void)run_forward(cfg);

  const fs::path dir_rom = fresh_dir("fwd_rom");
  cfg.engine = "rom";
  cfg.output_dir = dir_rom.string();
  const ForwardArtifacts rom_art = run_forward(cfg);
  REQUIRE(rom_art.rom_rank >= 1);

  const GrayscaleImage a = load_pgm((dir_fem / "u_T.pgm").string());
  const GrayscaleImage b = load_pgm((dir_rom / "u_T.pgm").string());
  REQUIRE(a.pixels.size() == b.pixels.size());
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const int diff = static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]);
    REQUIRE(std::abs(diff) <= 1);
  }
  // the sine mode peaks at the center node, so the heatmap does too
  REQUIRE(a.width == 31);
  REQUIRE(a.at(15, 15) == 255);
  REQUIRE(first_line(dir_fem / "u_T.csv") == "x,y,value");
  REQUIRE(fs::exists(dir_fem / "summary.json"));
  REQUIRE(fs::exists(dir_fem / "config_echo.json"));
}

TEST_CASE("an all-white source image produces the all-zero field") {
  const fs::path dir = fresh_dir("fwd_white");
  GrayscaleImage white{4, 4, std::vector<std::uint8_t>(16, 255)};
  const fs::path img_path = dir / "white.pgm";
  write_pgm(img_path.string(), white);

  RunConfig cfg;
  cfg.h = cfg.dt = 1.0 / 16.0;
  cfg.engine = "rom";  // exercises the zero-load shortcut
  cfg.source = SourceSpec::image(img_path.string());
  cfg.output_dir = (dir / "out").string();
  const ForwardArtifacts art = run_forward(cfg);
  for (double v : art.u_final.values) REQUIRE(v == 0.0);
}

TEST_CASE("invert with consistent data at the initial guess is immediate") {
  RunConfig cfg;
  cfg.h = cfg.dt = 1.0 / 16.0;
  cfg.sigma = 0.0;
  cfg.lambda_n = 1e-12;
  cfg.source = SourceSpec::analytic("sin_pi_x_sin_pi_y");
  cfg.initial_guess = SourceSpec::analytic("sin_pi_x_sin_pi_y");
  cfg.output_dir = fresh_dir("inv_consistent").string();

  const InvertArtifacts art = run_invert(cfg);
  REQUIRE(art.report.iterations <= 2);
  REQUIRE(art.rel_error_m <= 1e-6);
  REQUIRE(first_line(fs::path(cfg.output_dir) / "residual_history.csv") == "iter,residual");
}

TEST_CASE("identical configs and seeds produce byte-identical outputs") {
  RunConfig cfg;
  cfg.h = cfg.dt = 1.0 / 16.0;
  cfg.sigma = 1e-3;
  cfg.seed = 31;
  cfg.max_iter = 400;
  cfg.source = SourceSpec::image(testsupport::data_path("letter_A.pgm"));

  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  cfg.output_dir = a.string();
  (void)run_invert(cfg);
  cfg.output_dir = b.string();
  (void)run_invert(cfg);

  REQUIRE(slurp(a / "reconstruction.csv") == slurp(b / "reconstruction.csv"));
  REQUIRE(slurp(a / "residual_history.csv") == slurp(b / "residual_history.csv"));
  REQUIRE(slurp(a / "reconstruction.pgm") == slurp(b / "reconstruction.pgm"));
}

TEST_CASE("bench emits the pinned CSV schema") {
  RunConfig cfg;
  cfg.sigma = 1e-3;
  cfg.seed = 5;
  cfg.max_iter = 300;
  cfg.source = SourceSpec::image(testsupport::data_path("letter_A.pgm"));
  cfg.output_dir = fresh_dir("bench").string();

  const std::vector<double> sizes = {1.0 / 16.0};
  const std::vector<BenchRow> rows = run_bench(cfg, sizes);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].h == 1.0 / 16.0);
  REQUIRE(rows[0].fem_time_s > 0.0);
  REQUIRE(rows[0].rom_time_s > 0.0);
  REQUIRE(rows[0].gain == rows[0].fem_time_s / rows[0].rom_time_s);
  REQUIRE(rows[0].fem_ite >= 1);
  REQUIRE(rows[0].rom_ite >= 1);

  REQUIRE(first_line(fs::path(cfg.output_dir) / "bench.csv") ==
          "h,dt,fem_time_s,rom_time_s,gain,fem_ite,rom_ite,fem_rel_err,rom_rel_err");
}

TEST_CASE("config validation rejects bad values") {
  RunConfig cfg;
  cfg.engine = "magic";
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.engine = "fem";
  cfg.h = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.h = 0.25;
  cfg.sigma = -1.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}
