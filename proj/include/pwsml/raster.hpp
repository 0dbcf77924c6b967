#pragma once

#include "pwsml/maps.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pwsml {

inline constexpr std::uint8_t kInk = 0;
inline constexpr std::uint8_t kBackground = 255;

/// Row-major 8-bit grayscale image; row 0 is the top of the picture.
struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  static RasterImage blank(std::size_t width, std::size_t height, std::uint8_t fill = kBackground);

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  void set(std::size_t x, std::size_t y, std::uint8_t v) { pixels[y * width + x] = v; }
  std::size_t count(std::uint8_t value) const;

  bool operator==(const RasterImage&) const = default;
};

/// World-coordinate rectangle mapped onto the full pixel grid, y pointing up.
struct Window {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
};

/// Integer (Bresenham) line; pixels outside the image are skipped.
void draw_line(RasterImage& img, long x0, long y0, long x1, long y1, std::uint8_t ink = kInk);

/// Clips the world segment to `win` and rasterises what remains.
void draw_segment(RasterImage& img, const Window& win, double x0, double y0, double x1, double y1,
                  std::uint8_t ink = kInk);

/// [0,1]^2 for the tent map with mu > 0, [-1,1]^2 otherwise.
Window cobweb_window(const MapInstance& map);

/// Diagonal, sampled map graph and the cobweb polyline starting at (x0, x0).
RasterImage render_cobweb(const MapInstance& map, double x0, std::size_t n_steps, std::size_t resolution);

struct PhasePortrait {
  RasterImage image;
  std::size_t plotted = 0;
  std::size_t clipped = 0;
  bool empty = false;  // nothing to draw; image is all background
};

/// Scatter of the (x, y) components of `points`; points outside `bounds` are
/// counted as clipped.
PhasePortrait render_phase_portrait(const std::vector<State>& points, const Window& bounds, std::size_t resolution);

/// Binary P5, maxval 255.
std::string encode_pgm(const RasterImage& img);
RasterImage decode_pgm(std::string_view bytes);
void write_pgm(const RasterImage& img, const std::string& path);
RasterImage read_pgm(const std::string& path);

}  // namespace pwsml
