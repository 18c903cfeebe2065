#ifndef HEATINV_IMAGE_HPP
#define HEATINV_IMAGE_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatinv {

/// 8-bit grayscale image, row-major with row 0 at the top.
struct GrayscaleImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

namespace detail {

// Next whitespace-delimited token, skipping '#' comments.
inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw std::runtime_error("pgm: truncated header");
  return tok;
}

inline std::size_t pgm_number(std::istream& in) {
  const std::string tok = pgm_token(in);
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(tok, &pos);
  if (pos != tok.size()) throw std::runtime_error("pgm: malformed number '" + tok + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Parses PGM data in P2 (ASCII) or P5 (binary) form, maxval <= 255.
inline GrayscaleImage parse_pgm(std::istream& in) {
  const std::string magic = detail::pgm_token(in);
  if (magic != "P2" && magic != "P5") throw std::runtime_error("pgm: unsupported magic " + magic);
  GrayscaleImage img;
  img.width = detail::pgm_number(in);
  img.height = detail::pgm_number(in);
  const std::size_t maxval = detail::pgm_number(in);
  if (img.width == 0 || img.height == 0) throw std::runtime_error("pgm: empty image");
  if (maxval == 0 || maxval > 255) throw std::runtime_error("pgm: unsupported maxval");
  const std::size_t count = img.width * img.height;
  img.pixels.resize(count);

  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t v = detail::pgm_number(in);
      if (v > maxval) throw std::runtime_error("pgm: sample exceeds maxval");
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  } else {
    // exactly one whitespace byte separates maxval from the payload
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
      throw std::runtime_error("pgm: truncated payload");
    for (std::uint8_t v : img.pixels)
      if (v > maxval) throw std::runtime_error("pgm: sample exceeds maxval");
  }
  return img;
}

inline GrayscaleImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  return parse_pgm(in);
}

/// Writes a binary (P5) PGM with maxval 255.
inline void write_pgm(const std::string& path, const GrayscaleImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot open " + path + " for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace heatinv

#endif  // HEATINV_IMAGE_HPP
