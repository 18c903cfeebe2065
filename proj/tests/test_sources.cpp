#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <vector>

#include "heatinv/fem.hpp"
#include "heatinv/harness.hpp"
#include "heatinv/image.hpp"
#include "heatinv/mesh.hpp"
#include "heatinv/sources.hpp"
#include "test_support.hpp"

using namespace heatinv;
using Catch::Approx;

TEST_CASE("analytic sources evaluate the registered formulas") {
  const FemSystem sys = assemble(build_mesh(1.0, 1.0, 1.0 / 16.0));
  const Mesh& m = sys.mesh();

  const NodalFunction f1 = analytic_source("sin_pi_x_sin_pi_y", sys.mesh_ptr);
  const auto center = m.interior_map[m.node_index(8, 8)];
  REQUIRE(f1.values[static_cast<std::size_t>(center)] == Approx(1.0).epsilon(1e-15));
  const auto edge = m.interior_map[m.node_index(1, 8)];
  REQUIRE(f1.values[static_cast<std::size_t>(edge)] ==
          Approx(std::sin(std::numbers::pi / 16.0)).epsilon(1e-14));

  const NodalFunction f2 = analytic_source("sin_2pi_x_sin_pi_y", sys.mesh_ptr);
  const auto quarter = m.interior_map[m.node_index(4, 8)];
  REQUIRE(f2.values[static_cast<std::size_t>(quarter)] == Approx(1.0).epsilon(1e-14));
  REQUIRE(std::abs(f2.values[static_cast<std::size_t>(center)]) <= 1e-14);

  // pointwise agreement with direct evaluation at a sample of nodes
  for (std::size_t d = 0; d < f1.values.size(); d += 37) {
    const auto& c = m.node_coords[m.interior_nodes[d]];
    REQUIRE(f1.values[d] ==
            std::sin(std::numbers::pi * c[0]) * std::sin(std::numbers::pi * c[1]));
  }

  REQUIRE_THROWS_AS(analytic_source("no_such_source", sys.mesh_ptr), std::invalid_argument);
}

TEST_CASE("rasterization of uniform and half-split images") {
  const FemSystem sys = assemble(build_mesh(1.0, 1.0, 0.25));

  GrayscaleImage white{2, 2, {255, 255, 255, 255}};
  const NodalFunction fw = rasterize_image_source(white, sys.mesh_ptr, 128);
  for (double v : fw.values) REQUIRE(v == 0.0);

  GrayscaleImage black{2, 2, {0, 0, 0, 0}};
  const NodalFunction fb = rasterize_image_source(black, sys.mesh_ptr, 128);
  for (double v : fb.values) REQUIRE(v == 1.0);

  // left half black on a 2x1 image: nodes with x < 0.5 get 1, x >= 0.5 get 0
  GrayscaleImage half{2, 1, {0, 255}};
  const NodalFunction fh = rasterize_image_source(half, sys.mesh_ptr, 128);
  const Mesh& m = sys.mesh();
  for (std::size_t d = 0; d < fh.values.size(); ++d) {
    const double x = m.node_coords[m.interior_nodes[d]][0];
    REQUIRE(fh.values[d] == (x < 0.5 ? 1.0 : 0.0));
  }
}

TEST_CASE("pgm parser handles P2, P5 and comments") {
  std::istringstream p2("P2 1 1 255\n0\n");
  const GrayscaleImage a = parse_pgm(p2);
  REQUIRE(a.width == 1);
  REQUIRE(a.height == 1);
  REQUIRE(a.pixels[0] == 0);

  const std::string p5 = std::string("P5\n2 2\n255\n") + std::string{'\x01', '\x02', '\x03', '\x04'};
  std::istringstream p5s(p5, std::ios::binary);
  const GrayscaleImage b = parse_pgm(p5s);
  REQUIRE(b.pixels == std::vector<std::uint8_t>{1, 2, 3, 4});

  std::istringstream commented("P2\n# a comment\n1 1\n# another\n255\n17\n");
  const GrayscaleImage c = parse_pgm(commented);
  REQUIRE(c.pixels[0] == 17);

  std::istringstream bad_magic("P3 1 1 255 0");
  REQUIRE_THROWS_AS(parse_pgm(bad_magic), std::runtime_error);

  std::istringstream truncated(std::string("P5\n2 2\n255\n") + std::string{'\x01'},
                               std::ios::binary);
  REQUIRE_THROWS_AS(parse_pgm(truncated), std::runtime_error);

  std::istringstream big_maxval("P2 1 1 65535\n0\n");
  REQUIRE_THROWS_AS(parse_pgm(big_maxval), std::runtime_error);
}

TEST_CASE("letter bitmaps load and rasterize to a plausible support") {
  const FemSystem sys = assemble(build_mesh(1.0, 1.0, 1.0 / 32.0));
  const GrayscaleImage img = load_pgm(testsupport::data_path("letter_A.pgm"));
  REQUIRE(img.width == 32);
  REQUIRE(img.height == 32);
  const NodalFunction f = rasterize_image_source(img, sys.mesh_ptr, 128);
  std::size_t support = 0;
  for (double v : f.values) {
    REQUIRE((v == 0.0 || v == 1.0));
    support += v == 1.0;
  }
  REQUIRE(support > 0);
  REQUIRE(support < f.values.size());
}

TEST_CASE("emitted source bitmaps rasterize back to the same indicator") {
  const FemSystem sys = assemble(build_mesh(1.0, 1.0, 1.0 / 32.0));
  const GrayscaleImage img = load_pgm(testsupport::data_path("letter_A.pgm"));
  const NodalFunction f = rasterize_image_source(img, sys.mesh_ptr, 128);

  const GrayscaleImage emitted = field_to_pgm(sys.mesh(), f.values, PgmStyle::ink);
  const auto tmp = std::filesystem::temp_directory_path() / "heatinv_idempotence.pgm";
  write_pgm(tmp.string(), emitted);
  const GrayscaleImage reloaded = load_pgm(tmp.string());
  const NodalFunction f2 = rasterize_image_source(reloaded, sys.mesh_ptr, 128);
  REQUIRE(f2.values == f.values);
  std::filesystem::remove(tmp);
}

TEST_CASE("lowering the threshold never adds support") {
  const FemSystem sys = assemble(build_mesh(1.0, 1.0, 1.0 / 32.0));
  const GrayscaleImage img = load_pgm(testsupport::data_path("letter_C.pgm"));
  const NodalFunction f64 = rasterize_image_source(img, sys.mesh_ptr, 64);
  const NodalFunction f128 = rasterize_image_source(img, sys.mesh_ptr, 128);
  const NodalFunction f192 = rasterize_image_source(img, sys.mesh_ptr, 192);
  for (std::size_t i = 0; i < f64.values.size(); ++i) {
    REQUIRE(f64.values[i] <= f128.values[i]);
    REQUIRE(f128.values[i] <= f192.values[i]);
  }
}
