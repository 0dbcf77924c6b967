#include "pwsml/raster.hpp"

#include "pwsml/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pwsml {

RasterImage RasterImage::blank(std::size_t width, std::size_t height, std::uint8_t fill) {
  RasterImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(width * height, fill);
  return img;
}

std::size_t RasterImage::count(std::uint8_t value) const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), value));
}

void draw_line(RasterImage& img, long x0, long y0, long x1, long y1, std::uint8_t ink) {
  const long w = static_cast<long>(img.width);
  const long h = static_cast<long>(img.height);
  const long dx = std::labs(x1 - x0);
  const long dy = -std::labs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1;
  const long sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    if (x0 >= 0 && x0 < w && y0 >= 0 && y0 < h) {
      img.pixels[static_cast<std::size_t>(y0 * w + x0)] = ink;
    }
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

// Liang-Barsky; returns false when the segment misses the window.
bool clip(const Window& win, double& x0, double& y0, double& x1, double& y1) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {x0 - win.x_lo, win.x_hi - x0, y0 - win.y_lo, win.y_hi - y0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      if (t > t1) return false;
      t0 = std::max(t0, t);
    } else {
      if (t < t0) return false;
      t1 = std::min(t1, t);
    }
  }
  const double nx0 = x0 + t0 * dx;
  const double ny0 = y0 + t0 * dy;
  x1 = x0 + t1 * dx;
  y1 = y0 + t1 * dy;
  x0 = nx0;
  y0 = ny0;
  return true;
}

long to_px(double x, double lo, double hi, std::size_t n) {
  return std::lround((x - lo) / (hi - lo) * static_cast<double>(n - 1));
}

long to_py(double y, double lo, double hi, std::size_t n) {
  return static_cast<long>(n - 1) - std::lround((y - lo) / (hi - lo) * static_cast<double>(n - 1));
}

}  // namespace

void draw_segment(RasterImage& img, const Window& win, double x0, double y0, double x1, double y1, std::uint8_t ink) {
  if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1)) return;
  if (!clip(win, x0, y0, x1, y1)) return;
  draw_line(img, to_px(x0, win.x_lo, win.x_hi, img.width), to_py(y0, win.y_lo, win.y_hi, img.height),
            to_px(x1, win.x_lo, win.x_hi, img.width), to_py(y1, win.y_lo, win.y_hi, img.height), ink);
}

Window cobweb_window(const MapInstance& map) {
  if (map.kind() == MapKind::Tent && map.get<TentParams>().mu > 0.0) return {0.0, 1.0, 0.0, 1.0};
  return {-1.0, 1.0, -1.0, 1.0};
}

RasterImage render_cobweb(const MapInstance& map, double x0, std::size_t n_steps, std::size_t resolution) {
  if (map.dim() != 1) throw Error(ErrorCode::InvalidArgument, "cobweb diagrams need a one-dimensional map");
  if (resolution < 16) throw Error(ErrorCode::InvalidArgument, "cobweb resolution must be at least 16");
  if (!std::isfinite(x0)) throw NonFiniteStateError(0, "NonFiniteState: cobweb start is not finite");

  const Window win = cobweb_window(map);
  RasterImage img = RasterImage::blank(resolution, resolution);

  draw_segment(img, win, win.x_lo, win.x_lo, win.x_hi, win.x_hi);

  // Graph of the map; consecutive samples on different branches are not
  // joined so discontinuities stay open.
  State s(1);
  State image(1);
  double prev_x = 0.0;
  double prev_y = 0.0;
  Branch prev_branch = Branch::Left;
  for (std::size_t k = 0; k < resolution; ++k) {
    s[0] = win.x_lo + (win.x_hi - win.x_lo) * static_cast<double>(k) / static_cast<double>(resolution - 1);
    detail::step_raw(map, s, image);
    const Branch b = detail::branch_raw(map, s);
    if (k > 0 && b == prev_branch) draw_segment(img, win, prev_x, prev_y, s[0], image[0]);
    prev_x = s[0];
    prev_y = image[0];
    prev_branch = b;
  }

  State x = State::Constant(1, x0);
  State next(1);
  for (std::size_t k = 0; k < n_steps; ++k) {
    detail::step_raw(map, x, next);
    if (!is_finite(next)) {
      throw NonFiniteStateError(k + 1, "NonFiniteState: cobweb orbit diverged at iteration " + std::to_string(k + 1));
    }
    draw_segment(img, win, x[0], x[0], x[0], next[0]);
    draw_segment(img, win, x[0], next[0], next[0], next[0]);
    x = next;
  }
  return img;
}

PhasePortrait render_phase_portrait(const std::vector<State>& points, const Window& bounds, std::size_t resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "portrait resolution must be positive");
  PhasePortrait out;
  out.image = RasterImage::blank(resolution, resolution);
  out.empty = points.empty();
  for (const auto& p : points) {
    if (p.size() < 2) throw Error(ErrorCode::ShapeMismatch, "phase portraits need two-dimensional states");
    const double x = p[0];
    const double y = p[1];
    if (!(x >= bounds.x_lo && x <= bounds.x_hi && y >= bounds.y_lo && y <= bounds.y_hi)) {
      ++out.clipped;
      continue;
    }
    const long px = to_px(x, bounds.x_lo, bounds.x_hi, resolution);
    const long py = to_py(y, bounds.y_lo, bounds.y_hi, resolution);
    out.image.set(static_cast<std::size_t>(px), static_cast<std::size_t>(py), kInk);
    ++out.plotted;
  }
  return out;
}

std::string encode_pgm(const RasterImage& img) {
  if (img.width == 0 || img.height == 0) throw Error(ErrorCode::EmptyImage, "EmptyImage: zero-sized image");
  if (img.pixels.size() != img.width * img.height) {
    throw Error(ErrorCode::ShapeMismatch, "pixel buffer does not match image dimensions");
  }
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

RasterImage decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  if (next_token() != "P5") throw ParseError(1, "not a binary PGM (P5) file");
  const std::string w = next_token();
  const std::string h = next_token();
  const std::string maxval = next_token();
  char* end = nullptr;
  const unsigned long width = std::strtoul(w.c_str(), &end, 10);
  const unsigned long height = std::strtoul(h.c_str(), &end, 10);
  if (maxval != "255") throw ParseError(1, "only maxval 255 is supported");
  if (width == 0 || height == 0) throw Error(ErrorCode::EmptyImage, "EmptyImage: zero-sized image");
  ++pos;  // single whitespace byte after maxval
  if (bytes.size() < pos + width * height) throw ParseError(1, "truncated pixel data");
  RasterImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + width * height));
  return img;
}

void write_pgm(const RasterImage& img, const std::string& path) {
  const std::string bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

RasterImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pgm(bytes);
}

}  // namespace pwsml
