#pragma once

#include "mcct/telemetry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcct {

struct PlotOptions {
  int width = 1000;
  int height = 720;
  std::optional<double> t_start;
  std::optional<double> t_end;
};

/// Velocity-vs-time (top) and gap-vs-time (bottom) panels, one line per
/// vehicle in formation order.
std::string render_svg(const Telemetry& t, const PlotOptions& opt = {});

/// Same figure rasterized to 8-bit RGB.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};
Raster render_raster(const Telemetry& t, const PlotOptions& opt = {});
void write_png(const Raster& r, const std::string& path);

}  // namespace mcct
