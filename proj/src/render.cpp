#include "srmap/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "srmap/error.hpp"

namespace srmap {

namespace {

constexpr int kCellPx = 12;
constexpr unsigned char kWallGray = 0;
constexpr double kDataFloorWithWalls = 16.0;

struct Rgb {
  double r, g, b;
};

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kNegative{33, 102, 172};
constexpr Rgb kPositive{178, 24, 43};

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(c.r)),
                static_cast<int>(std::lround(c.g)), static_cast<int>(std::lround(c.b)));
  return buf;
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

}  // namespace

std::string render_heatmap(const Matrix& field, Palette palette, const std::vector<bool>& wall_mask) {
  const std::size_t n = field.rows() * field.cols();
  if (n == 0) throw Error(ErrorKind::Render, "empty field");
  if (!wall_mask.empty() && wall_mask.size() != n) throw Error(ErrorKind::Render, "wall mask does not match the field");

  std::vector<bool> wall(n);
  bool any_wall = false;
  double lo = INFINITY, hi = -INFINITY, peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = field.data()[i];
    wall[i] = (!wall_mask.empty() && wall_mask[i]) || std::isnan(v);
    if (wall[i]) {
      any_wall = true;
      continue;
    }
    if (!std::isfinite(v)) throw Error(ErrorKind::Render, "field has infinite entries");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    peak = std::max(peak, std::abs(v));
  }
  if (lo > hi) throw Error(ErrorKind::Render, "field has no finite entries");

  if (palette == Palette::Gray) {
    std::string out = "P5\n" + std::to_string(field.cols()) + " " + std::to_string(field.rows()) + "\n255\n";
    const double floor = any_wall ? kDataFloorWithWalls : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      unsigned char px = kWallGray;
      if (!wall[i]) {
        if (hi == lo)
          px = 128;
        else
          px = static_cast<unsigned char>(std::lround(floor + (255.0 - floor) * (field.data()[i] - lo) / (hi - lo)));
      }
      out.push_back(static_cast<char>(px));
    }
    return out;
  }

  const std::size_t width = field.cols() * kCellPx;
  const std::size_t height = field.rows() * kCellPx;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
                    std::to_string(height) + "\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t r = 0; r < field.rows(); ++r) {
    for (std::size_t c = 0; c < field.cols(); ++c) {
      const std::size_t i = r * field.cols() + c;
      std::string fill = "#404040";
      if (!wall[i]) {
        const double t = peak > 0.0 ? field(r, c) / peak : 0.0;
        fill = hex(t >= 0.0 ? mix(kWhite, kPositive, t) : mix(kWhite, kNegative, -t));
      }
      out += "<rect x=\"" + std::to_string(c * kCellPx) + "\" y=\"" + std::to_string(r * kCellPx) + "\" width=\"" +
             std::to_string(kCellPx) + "\" height=\"" + std::to_string(kCellPx) + "\" fill=\"" + fill + "\"/>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace srmap
