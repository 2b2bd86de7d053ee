#include "mcct/plot.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mcct {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr std::array<Rgb, 8> kPalette{{{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                       {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}}};

// 6x11 glyphs for ASCII 32..126, one byte per row, bit 5 = leftmost column.
constexpr std::uint8_t kFont[95][11] = {
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // ' '
    {0x00, 0x00, 0x00, 0x18, 0x18, 0x18, 0x18, 0x00, 0x18, 0x00, 0x00},  // '!'
    {0x00, 0x00, 0x00, 0x14, 0x14, 0x14, 0x00, 0x00, 0x00, 0x00, 0x00},  // '"'
    {0x00, 0x00, 0x14, 0x14, 0x3e, 0x14, 0x14, 0x3e, 0x14, 0x14, 0x00},  // '#'
    {0x00, 0x08, 0x1e, 0x32, 0x3c, 0x1e, 0x06, 0x36, 0x3c, 0x08, 0x00},  // '$'
    {0x00, 0x00, 0x38, 0x2a, 0x3c, 0x08, 0x1e, 0x2a, 0x0e, 0x00, 0x00},  // '%'
    {0x00, 0x00, 0x00, 0x1c, 0x30, 0x18, 0x3e, 0x2c, 0x3e, 0x00, 0x00},  // '&'
    {0x00, 0x00, 0x0c, 0x08, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '\''
    {0x00, 0x00, 0x04, 0x08, 0x18, 0x18, 0x18, 0x18, 0x08, 0x04, 0x00},  // '('
    {0x00, 0x00, 0x10, 0x08, 0x0c, 0x0c, 0x0c, 0x0c, 0x08, 0x10, 0x00},  // ')'
    {0x00, 0x00, 0x08, 0x3c, 0x18, 0x24, 0x00, 0x00, 0x00, 0x00, 0x00},  // '*'
    {0x00, 0x00, 0x00, 0x08, 0x08, 0x3e, 0x08, 0x08, 0x00, 0x00, 0x00},  // '+'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x08, 0x10},  // ','
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x3e, 0x00, 0x00, 0x00, 0x00, 0x00},  // '-'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x00},  // '.'
    {0x00, 0x00, 0x02, 0x02, 0x04, 0x04, 0x08, 0x08, 0x10, 0x10, 0x00},  // '/'
    {0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // '0'
    {0x00, 0x00, 0x0c, 0x3c, 0x0c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // '1'
    {0x00, 0x00, 0x1c, 0x36, 0x06, 0x0c, 0x18, 0x36, 0x3e, 0x00, 0x00},  // '2'
    {0x00, 0x00, 0x1c, 0x36, 0x06, 0x1c, 0x06, 0x36, 0x1c, 0x00, 0x00},  // '3'
    {0x00, 0x00, 0x06, 0x0e, 0x16, 0x36, 0x3f, 0x06, 0x06, 0x00, 0x00},  // '4'
    {0x00, 0x00, 0x3e, 0x30, 0x3c, 0x36, 0x06, 0x26, 0x3c, 0x00, 0x00},  // '5'
    {0x00, 0x00, 0x1c, 0x36, 0x30, 0x3c, 0x36, 0x36, 0x1c, 0x00, 0x00},  // '6'
    {0x00, 0x00, 0x3e, 0x36, 0x06, 0x0c, 0x0c, 0x18, 0x18, 0x00, 0x00},  // '7'
    {0x00, 0x00, 0x1c, 0x36, 0x36, 0x1c, 0x36, 0x36, 0x1c, 0x00, 0x00},  // '8'
    {0x00, 0x00, 0x1c, 0x36, 0x36, 0x1e, 0x06, 0x36, 0x1c, 0x00, 0x00},  // '9'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x00, 0x18, 0x00, 0x00},  // ':'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x18, 0x00, 0x00, 0x18, 0x10, 0x20},  // ';'
    {0x00, 0x00, 0x00, 0x0c, 0x18, 0x30, 0x18, 0x0c, 0x00, 0x00, 0x00},  // '<'
    {0x00, 0x00, 0x00, 0x00, 0x3c, 0x00, 0x3c, 0x00, 0x00, 0x00, 0x00},  // '='
    {0x00, 0x00, 0x00, 0x18, 0x0c, 0x06, 0x0c, 0x18, 0x00, 0x00, 0x00},  // '>'
    {0x00, 0x00, 0x00, 0x1c, 0x26, 0x0c, 0x18, 0x00, 0x18, 0x00, 0x00},  // '?'
    {0x00, 0x00, 0x1c, 0x32, 0x26, 0x2a, 0x2a, 0x27, 0x30, 0x1c, 0x00},  // '@'
    {0x00, 0x00, 0x00, 0x3c, 0x1c, 0x14, 0x3e, 0x36, 0x37, 0x00, 0x00},  // 'A'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x3c, 0x36, 0x36, 0x3c, 0x00, 0x00},  // 'B'
    {0x00, 0x00, 0x00, 0x1e, 0x36, 0x30, 0x30, 0x36, 0x1c, 0x00, 0x00},  // 'C'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x36, 0x36, 0x3c, 0x00, 0x00},  // 'D'
    {0x00, 0x00, 0x00, 0x3e, 0x30, 0x3c, 0x30, 0x36, 0x3e, 0x00, 0x00},  // 'E'
    {0x00, 0x00, 0x00, 0x3e, 0x30, 0x3c, 0x30, 0x30, 0x38, 0x00, 0x00},  // 'F'
    {0x00, 0x00, 0x00, 0x1c, 0x36, 0x30, 0x3e, 0x36, 0x1e, 0x00, 0x00},  // 'G'
    {0x00, 0x00, 0x00, 0x37, 0x36, 0x3e, 0x36, 0x36, 0x37, 0x00, 0x00},  // 'H'
    {0x00, 0x00, 0x00, 0x3c, 0x18, 0x18, 0x18, 0x18, 0x3c, 0x00, 0x00},  // 'I'
    {0x00, 0x00, 0x00, 0x1e, 0x0c, 0x0c, 0x2c, 0x2c, 0x38, 0x00, 0x00},  // 'J'
    {0x00, 0x00, 0x00, 0x36, 0x34, 0x38, 0x3c, 0x36, 0x3b, 0x00, 0x00},  // 'K'
    {0x00, 0x00, 0x00, 0x38, 0x30, 0x30, 0x30, 0x36, 0x3e, 0x00, 0x00},  // 'L'
    {0x00, 0x00, 0x00, 0x22, 0x36, 0x36, 0x3e, 0x2a, 0x2a, 0x00, 0x00},  // 'M'
    {0x00, 0x00, 0x00, 0x37, 0x3a, 0x3a, 0x36, 0x36, 0x32, 0x00, 0x00},  // 'N'
    {0x00, 0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // 'O'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x3c, 0x30, 0x38, 0x00, 0x00},  // 'P'
    {0x00, 0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x06, 0x00},  // 'Q'
    {0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x3c, 0x36, 0x3b, 0x00, 0x00},  // 'R'
    {0x00, 0x00, 0x00, 0x1e, 0x32, 0x3c, 0x0e, 0x26, 0x3c, 0x00, 0x00},  // 'S'
    {0x00, 0x00, 0x00, 0x3e, 0x1a, 0x18, 0x18, 0x18, 0x3c, 0x00, 0x00},  // 'T'
    {0x00, 0x00, 0x00, 0x37, 0x36, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // 'U'
    {0x00, 0x00, 0x00, 0x37, 0x36, 0x14, 0x1c, 0x1c, 0x08, 0x00, 0x00},  // 'V'
    {0x00, 0x00, 0x00, 0x2b, 0x2a, 0x2a, 0x3e, 0x1c, 0x14, 0x00, 0x00},  // 'W'
    {0x00, 0x00, 0x00, 0x33, 0x1e, 0x0c, 0x0c, 0x1e, 0x33, 0x00, 0x00},  // 'X'
    {0x00, 0x00, 0x00, 0x33, 0x33, 0x1e, 0x0c, 0x0c, 0x1e, 0x00, 0x00},  // 'Y'
    {0x00, 0x00, 0x00, 0x3e, 0x36, 0x0c, 0x18, 0x36, 0x3e, 0x00, 0x00},  // 'Z'
    {0x00, 0x00, 0x1c, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x1c, 0x00},  // '['
    {0x00, 0x00, 0x20, 0x20, 0x10, 0x10, 0x08, 0x08, 0x04, 0x04, 0x00},  // '\\'
    {0x00, 0x00, 0x1c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x1c, 0x00},  // ']'
    {0x00, 0x00, 0x08, 0x1c, 0x36, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '^'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x3f},  // '_'
    {0x00, 0x00, 0x18, 0x08, 0x04, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '`'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x1e, 0x36, 0x3f, 0x00, 0x00},  // 'a'
    {0x00, 0x00, 0x30, 0x30, 0x3c, 0x36, 0x36, 0x36, 0x3c, 0x00, 0x00},  // 'b'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x30, 0x36, 0x1c, 0x00, 0x00},  // 'c'
    {0x00, 0x00, 0x0e, 0x06, 0x1e, 0x36, 0x36, 0x36, 0x1f, 0x00, 0x00},  // 'd'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x3e, 0x30, 0x1e, 0x00, 0x00},  // 'e'
    {0x00, 0x00, 0x0e, 0x18, 0x3e, 0x18, 0x18, 0x18, 0x3e, 0x00, 0x00},  // 'f'
    {0x00, 0x00, 0x00, 0x00, 0x1b, 0x36, 0x36, 0x36, 0x1e, 0x06, 0x3c},  // 'g'
    {0x00, 0x00, 0x30, 0x30, 0x3c, 0x36, 0x36, 0x36, 0x36, 0x00, 0x00},  // 'h'
    {0x00, 0x00, 0x0c, 0x00, 0x3c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // 'i'
    {0x00, 0x00, 0x0c, 0x00, 0x3c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x38},  // 'j'
    {0x00, 0x00, 0x30, 0x30, 0x36, 0x3c, 0x38, 0x3c, 0x37, 0x00, 0x00},  // 'k'
    {0x00, 0x00, 0x3c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // 'l'
    {0x00, 0x00, 0x00, 0x00, 0x3c, 0x3e, 0x2a, 0x2a, 0x2a, 0x00, 0x00},  // 'm'
    {0x00, 0x00, 0x00, 0x00, 0x2c, 0x36, 0x36, 0x36, 0x36, 0x00, 0x00},  // 'n'
    {0x00, 0x00, 0x00, 0x00, 0x1c, 0x36, 0x36, 0x36, 0x1c, 0x00, 0x00},  // 'o'
    {0x00, 0x00, 0x00, 0x00, 0x3c, 0x36, 0x36, 0x36, 0x3c, 0x30, 0x38},  // 'p'
    {0x00, 0x00, 0x00, 0x00, 0x1b, 0x36, 0x36, 0x36, 0x1e, 0x06, 0x0f},  // 'q'
    {0x00, 0x00, 0x00, 0x00, 0x37, 0x1d, 0x18, 0x18, 0x3c, 0x00, 0x00},  // 'r'
    {0x00, 0x00, 0x00, 0x00, 0x1e, 0x38, 0x1e, 0x07, 0x3e, 0x00, 0x00},  // 's'
    {0x00, 0x00, 0x18, 0x18, 0x3e, 0x18, 0x18, 0x1b, 0x0e, 0x00, 0x00},  // 't'
    {0x00, 0x00, 0x00, 0x00, 0x36, 0x36, 0x36, 0x36, 0x1f, 0x00, 0x00},  // 'u'
    {0x00, 0x00, 0x00, 0x00, 0x36, 0x36, 0x1c, 0x1c, 0x08, 0x00, 0x00},  // 'v'
    {0x00, 0x00, 0x00, 0x00, 0x2b, 0x2a, 0x3e, 0x1e, 0x14, 0x00, 0x00},  // 'w'
    {0x00, 0x00, 0x00, 0x00, 0x3b, 0x1e, 0x0c, 0x1e, 0x37, 0x00, 0x00},  // 'x'
    {0x00, 0x00, 0x00, 0x00, 0x37, 0x36, 0x36, 0x14, 0x1c, 0x18, 0x30},  // 'y'
    {0x00, 0x00, 0x00, 0x00, 0x3e, 0x2c, 0x18, 0x36, 0x3e, 0x00, 0x00},  // 'z'
    {0x00, 0x00, 0x06, 0x0c, 0x0c, 0x18, 0x0c, 0x0c, 0x0c, 0x06, 0x00},  // '{'
    {0x00, 0x00, 0x00, 0x08, 0x08, 0x08, 0x08, 0x08, 0x08, 0x08, 0x00},  // '|'
    {0x00, 0x00, 0x30, 0x18, 0x18, 0x0c, 0x18, 0x18, 0x18, 0x30, 0x00},  // '}'
    {0x00, 0x00, 0x00, 0x00, 0x1a, 0x2c, 0x00, 0x00, 0x00, 0x00, 0x00},  // '~'
};

struct Series {
  std::string id;
  std::vector<double> t, v, gap;
};

struct Axis {
  double lo = 0.0, hi = 1.0;
  std::vector<double> ticks;
};

Axis nice_axis(double lo, double hi, double target_ticks = 5.0) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double raw = (hi - lo) / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  Axis a;
  a.lo = std::floor(lo / step) * step;
  a.hi = std::ceil(hi / step) * step;
  for (double x = a.lo; x <= a.hi + step * 1e-9; x += step) a.ticks.push_back(std::abs(x) < step * 1e-9 ? 0.0 : x);
  return a;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Panel {
  std::string title;
  std::string y_label;
  bool gap = false;
  double x0, y0, w, h;  // pixel box of the plot area
  Axis xa, ya;
  double px(double t) const { return x0 + (t - xa.lo) / (xa.hi - xa.lo) * w; }
  double py(double v) const { return y0 + h - (v - ya.lo) / (ya.hi - ya.lo) * h; }
};

struct Figure {
  std::vector<Series> series;
  std::vector<Panel> panels;
  int width, height;
};

Figure layout(const Telemetry& tel, const PlotOptions& opt) {
  Figure f;
  f.width = opt.width;
  f.height = opt.height;
  std::map<std::string, Series> by_id;
  for (const auto& r : tel.rows) {
    if (opt.t_start && r.t < *opt.t_start) continue;
    if (opt.t_end && r.t > *opt.t_end) continue;
    auto& s = by_id[r.id];
    s.id = r.id;
    s.t.push_back(r.t);
    s.v.push_back(r.v);
    s.gap.push_back(r.gap);
  }
  for (const auto& v : tel.header.vehicles)
    if (by_id.count(v.id)) f.series.push_back(by_id[v.id]);
  if (f.series.empty()) throw std::invalid_argument("telemetry has no rows in the requested time range");

  double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
  double v_lo = t_lo, v_hi = t_hi, g_lo = t_lo, g_hi = t_hi;
  for (std::size_t i = 0; i < f.series.size(); ++i) {
    const auto& s = f.series[i];
    t_lo = std::min(t_lo, s.t.front());
    t_hi = std::max(t_hi, s.t.back());
    v_lo = std::min(v_lo, *std::min_element(s.v.begin(), s.v.end()));
    v_hi = std::max(v_hi, *std::max_element(s.v.begin(), s.v.end()));
    if (i > 0) {
      g_lo = std::min(g_lo, *std::min_element(s.gap.begin(), s.gap.end()));
      g_hi = std::max(g_hi, *std::max_element(s.gap.begin(), s.gap.end()));
    }
  }
  if (f.series.size() < 2) g_lo = g_hi = 0.0;
  const double left = 70, right = 110, top = 30, mid = 60, bottom = 45;
  const double ph = (f.height - top - mid - bottom) / 2.0;
  const Axis xa = nice_axis(t_lo, t_hi, 8.0);
  f.panels.push_back({"Velocity", "v [m/s]", false, left, top, f.width - left - right, ph, xa, nice_axis(v_lo, v_hi)});
  f.panels.push_back(
      {"Gap to predecessor", "gap [m]", true, left, top + ph + mid, f.width - left - right, ph, xa, nice_axis(g_lo, g_hi)});
  return f;
}

// --- raster drawing ---------------------------------------------------------

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void dot(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void line(double x0, double y0, double x1, double y1, Rgb c, int thick = 1) {
    const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int n = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= n; ++i) {
      const double u = static_cast<double>(i) / n;
      const int x = static_cast<int>(std::lround(x0 + u * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + u * (y1 - y0)));
      for (int dx = 0; dx < thick; ++dx)
        for (int dy = 0; dy < thick; ++dy) dot(x + dx, y + dy, c);
    }
  }

  void text(double x, double y, const std::string& s, Rgb c) {
    int cx = static_cast<int>(std::lround(x));
    const int cy = static_cast<int>(std::lround(y));
    for (char ch : s) {
      const int code = static_cast<unsigned char>(ch);
      if (code >= 32 && code < 127)
        for (int row = 0; row < 11; ++row)
          for (int col = 0; col < 6; ++col)
            if (kFont[code - 32][row] >> (5 - col) & 1) dot(cx + col, cy + row, c);
      cx += 6;
    }
  }

  Raster take() { return {w_, h_, std::move(px_)}; }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

}  // namespace

std::string render_svg(const Telemetry& tel, const PlotOptions& opt) {
  const Figure f = layout(tel, opt);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& p : f.panels) {
    out << "<text x=\"" << p.x0 << "\" y=\"" << p.y0 - 8 << "\" font-size=\"14\">" << p.title << "</text>\n";
    for (double v : p.ya.ticks) {
      out << "<line x1=\"" << p.x0 << "\" x2=\"" << p.x0 + p.w << "\" y1=\"" << p.py(v) << "\" y2=\"" << p.py(v)
          << "\" stroke=\"#ddd\"/>\n";
      out << "<text x=\"" << p.x0 - 6 << "\" y=\"" << p.py(v) + 4 << "\" text-anchor=\"end\">" << label(v)
          << "</text>\n";
    }
    for (double t : p.xa.ticks) {
      out << "<line x1=\"" << p.px(t) << "\" x2=\"" << p.px(t) << "\" y1=\"" << p.y0 << "\" y2=\"" << p.y0 + p.h
          << "\" stroke=\"#eee\"/>\n";
      out << "<text x=\"" << p.px(t) << "\" y=\"" << p.y0 + p.h + 16 << "\" text-anchor=\"middle\">" << label(t)
          << "</text>\n";
    }
    out << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w << "\" height=\"" << p.h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text transform=\"translate(" << p.x0 - 50 << "," << p.y0 + p.h / 2 << ") rotate(-90)\" "
        << "text-anchor=\"middle\">" << p.y_label << "</text>\n";
    out << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 + p.h + 34 << "\" text-anchor=\"middle\">t [s]</text>\n";
    for (std::size_t i = 0; i < f.series.size(); ++i) {
      if (p.gap && i == 0) continue;
      const auto& s = f.series[i];
      const auto& ys = p.gap ? s.gap : s.v;
      const Rgb c = kPalette[i % kPalette.size()];
      out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"rgb(" << int(c.r) << "," << int(c.g) << ","
          << int(c.b) << ")\" points=\"";
      for (std::size_t k = 0; k < s.t.size(); ++k) out << p.px(s.t[k]) << "," << p.py(ys[k]) << " ";
      out << "\"/>\n";
    }
  }
  const auto& top = f.panels.front();
  for (std::size_t i = 0; i < f.series.size(); ++i) {
    const Rgb c = kPalette[i % kPalette.size()];
    const double y = top.y0 + 10 + 18.0 * i;
    const double x = top.x0 + top.w + 15;
    out << "<line x1=\"" << x << "\" x2=\"" << x + 20 << "\" y1=\"" << y << "\" y2=\"" << y << "\" stroke=\"rgb("
        << int(c.r) << "," << int(c.g) << "," << int(c.b) << ")\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << x + 25 << "\" y=\"" << y + 4 << "\">vehicle " << f.series[i].id << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

Raster render_raster(const Telemetry& tel, const PlotOptions& opt) {
  const Figure f = layout(tel, opt);
  Canvas cv(f.width, f.height);
  const Rgb black{0, 0, 0}, grid{221, 221, 221};
  for (const auto& p : f.panels) {
    cv.text(p.x0, p.y0 - 18, p.title, black);
    for (double v : p.ya.ticks) {
      cv.line(p.x0, p.py(v), p.x0 + p.w, p.py(v), grid);
      const std::string l = label(v);
      cv.text(p.x0 - 6 - 6.0 * l.size(), p.py(v) - 5, l, black);
    }
    for (double t : p.xa.ticks) {
      cv.line(p.px(t), p.y0, p.px(t), p.y0 + p.h, grid);
      const std::string l = label(t);
      cv.text(p.px(t) - 3.0 * l.size(), p.y0 + p.h + 6, l, black);
    }
    cv.text(p.x0 + p.w / 2 - 15, p.y0 + p.h + 22, "t [s]", black);
    cv.text(p.x0 + p.w - 6.0 * p.y_label.size(), p.y0 - 18, p.y_label, black);
    for (std::size_t i = 0; i < f.series.size(); ++i) {
      if (p.gap && i == 0) continue;
      const auto& s = f.series[i];
      const auto& ys = p.gap ? s.gap : s.v;
      const Rgb c = kPalette[i % kPalette.size()];
      for (std::size_t k = 1; k < s.t.size(); ++k)
        cv.line(p.px(s.t[k - 1]), p.py(ys[k - 1]), p.px(s.t[k]), p.py(ys[k]), c, 2);
    }
    cv.line(p.x0, p.y0, p.x0 + p.w, p.y0, black);
    cv.line(p.x0, p.y0 + p.h, p.x0 + p.w, p.y0 + p.h, black);
    cv.line(p.x0, p.y0, p.x0, p.y0 + p.h, black);
    cv.line(p.x0 + p.w, p.y0, p.x0 + p.w, p.y0 + p.h, black);
  }
  const auto& top = f.panels.front();
  for (std::size_t i = 0; i < f.series.size(); ++i) {
    const Rgb c = kPalette[i % kPalette.size()];
    const double y = top.y0 + 10 + 18.0 * i;
    const double x = top.x0 + top.w + 15;
    cv.line(x, y, x + 20, y, c, 2);
    cv.text(x + 25, y - 5, "vehicle " + f.series[i].id, black);
  }
  return cv.take();
}

void write_png(const Raster& r, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng failed writing " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, r.width, r.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < r.height; ++y)
    png_write_row(png, const_cast<png_bytep>(&r.rgb[static_cast<std::size_t>(y) * r.width * 3]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace mcct
