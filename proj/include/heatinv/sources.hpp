#ifndef HEATINV_SOURCES_HPP
#define HEATINV_SOURCES_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "heatinv/image.hpp"
#include "heatinv/mesh.hpp"

namespace heatinv {

/// Declarative description of a source term: a registered analytic
/// expression or an indicator function rasterized from a grayscale bitmap.
struct SourceSpec {
  enum class Kind { analytic, image };
  Kind kind = Kind::analytic;
  std::string name = "sin_pi_x_sin_pi_y";  // analytic
  std::string path;                        // image
  int threshold = 128;                     // image: intensity < threshold marks support
  std::string description;

  static SourceSpec analytic(std::string name) {
    SourceSpec s;
    s.kind = Kind::analytic;
    s.name = std::move(name);
    return s;
  }
  static SourceSpec image(std::string path, int threshold = 128) {
    SourceSpec s;
    s.kind = Kind::image;
    s.path = std::move(path);
    s.threshold = threshold;
    return s;
  }
};

inline const std::map<std::string, std::function<double(double, double)>>& analytic_registry() {
  static const std::map<std::string, std::function<double(double, double)>> registry = {
      {"sin_pi_x_sin_pi_y",
       [](double x, double y) {
         return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
       }},
      {"sin_2pi_x_sin_pi_y",
       [](double x, double y) {
         return std::sin(2.0 * std::numbers::pi * x) * std::sin(std::numbers::pi * y);
       }},
  };
  return registry;
}

inline NodalFunction analytic_source(const std::string& name, std::shared_ptr<const Mesh> mesh) {
  const auto& reg = analytic_registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("analytic_source: unknown name '" + name + "'");
  return NodalFunction::from_callable(std::move(mesh), it->second);
}

/// Indicator source from a bitmap: node (x, y) samples the nearest pixel
/// (image row 0 = top of the domain) and dark pixels mark the support.
inline NodalFunction rasterize_image_source(const GrayscaleImage& img,
                                            std::shared_ptr<const Mesh> mesh, int threshold) {
  if (img.pixels.empty()) throw std::invalid_argument("rasterize_image_source: empty image");
  if (threshold < 0 || threshold > 255)
    throw std::invalid_argument("rasterize_image_source: threshold out of [0,255]");
  const double lx = mesh->lx, ly = mesh->ly;
  const double w = static_cast<double>(img.width), h = static_cast<double>(img.height);
  return NodalFunction::from_callable(std::move(mesh), [&img, lx, ly, w, h, threshold](double x, double y) {
    auto clamp_idx = [](double v, std::size_t hi) {
      if (v < 0.0) return std::size_t{0};
      const auto i = static_cast<std::size_t>(v);
      return i >= hi ? hi - 1 : i;
    };
    const std::size_t col = clamp_idx(std::floor(x / lx * w), img.width);
    const std::size_t row = clamp_idx(std::floor((1.0 - y / ly) * h), img.height);
    return img.at(row, col) < threshold ? 1.0 : 0.0;
  });
}

inline NodalFunction make_source(const SourceSpec& spec, std::shared_ptr<const Mesh> mesh) {
  if (spec.kind == SourceSpec::Kind::analytic) return analytic_source(spec.name, std::move(mesh));
  const GrayscaleImage img = load_pgm(spec.path);
  return rasterize_image_source(img, std::move(mesh), spec.threshold);
}

}  // namespace heatinv

#endif  // HEATINV_SOURCES_HPP
