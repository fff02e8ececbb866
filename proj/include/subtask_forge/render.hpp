#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "subtask_forge/domains.hpp"

namespace subtask_forge::render {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

/// Viridis-like ramp, t clamped to [0, 1].
Rgb colormap(double t);

/// Static SVG shading each interior state by value / max(value). Rooms are
/// drawn as a grid with closed walls, taxi as its five passenger-location
/// copies side by side, the ring as an annulus of wedges.
std::string heatmap_svg(const Domain& domain, const Vector& values, std::string_view title);

}  // namespace subtask_forge::render
