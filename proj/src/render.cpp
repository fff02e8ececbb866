#include "subtask_forge/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace subtask_forge::render {

namespace {

constexpr int kCell = 16;
constexpr int kMargin = 24;

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool connected(const Lmdp& l, std::size_t a, std::size_t b) {
  return l.dynamics.interior.coeff(static_cast<Index>(b), static_cast<Index>(a)) > 0.0;
}

std::string header(int width, int height, std::string_view title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                  "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
                  std::to_string(width) + " " + std::to_string(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(kMargin) + "\" y=\"16\" font-family=\"sans-serif\" "
       "font-size=\"12\">" + escape(title) + "</text>\n";
  return s;
}

// Cells of one grid copy plus walls wherever adjacent cells are not connected.
void draw_grid(std::string& s, const Domain& d, const Vector& t, std::size_t first, int x0, int y0) {
  const int rows = d.grid_rows;
  const int cols = d.grid_cols;
  const auto at = [&](int r, int c) { return first + static_cast<std::size_t>(r * cols + c); };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto st = at(r, c);
      s += "<rect x=\"" + std::to_string(x0 + c * kCell) + "\" y=\"" + std::to_string(y0 + r * kCell) +
           "\" width=\"" + std::to_string(kCell) + "\" height=\"" + std::to_string(kCell) +
           "\" fill=\"" + hex(colormap(t[static_cast<Index>(st)])) + "\"/>\n";
    }
  }
  std::string walls;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols && !connected(d.lmdp, at(r, c), at(r, c + 1))) {
        const int x = x0 + (c + 1) * kCell;
        walls += "M" + std::to_string(x) + " " + std::to_string(y0 + r * kCell) + "v" + std::to_string(kCell);
      }
      if (r + 1 < rows && !connected(d.lmdp, at(r, c), at(r + 1, c))) {
        const int y = y0 + (r + 1) * kCell;
        walls += "M" + std::to_string(x0 + c * kCell) + " " + std::to_string(y) + "h" + std::to_string(kCell);
      }
    }
  }
  if (!walls.empty()) {
    s += "<path d=\"" + walls + "\" stroke=\"black\" stroke-width=\"2\" fill=\"none\"/>\n";
  }
  s += "<rect x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(y0) + "\" width=\"" +
       std::to_string(cols * kCell) + "\" height=\"" + std::to_string(rows * kCell) +
       "\" stroke=\"black\" stroke-width=\"2\" fill=\"none\"/>\n";
}

}  // namespace

Rgb colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops{{{68, 1, 84},
                                                                {59, 82, 139},
                                                                {33, 145, 140},
                                                                {94, 201, 98},
                                                                {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double pos = t * static_cast<double>(kStops.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double f = pos - static_cast<double>(lo);
  auto mix = [&](int ch) {
    return static_cast<std::uint8_t>(
        std::lround(kStops[lo][static_cast<std::size_t>(ch)] * (1.0 - f) +
                    kStops[lo + 1][static_cast<std::size_t>(ch)] * f));
  };
  return {mix(0), mix(1), mix(2)};
}

std::string heatmap_svg(const Domain& domain, const Vector& values, std::string_view title) {
  if (static_cast<std::size_t>(values.size()) != domain.lmdp.n_interior()) {
    throw InvalidInput("heatmap needs one value per interior state");
  }
  const double peak = values.maxCoeff();
  const Vector t = peak > 0.0 ? Vector(values / peak) : Vector::Zero(values.size());
  std::string s;
  switch (domain.spec.kind()) {
    case DomainKind::rooms: {
      const int w = domain.grid_cols * kCell + 2 * kMargin;
      const int h = domain.grid_rows * kCell + 2 * kMargin;
      s = header(w, h, title);
      draw_grid(s, domain, t, 0, kMargin, kMargin);
      break;
    }
    case DomainKind::taxi: {
      const int block = domain.grid_cols * kCell;
      const int gap = kCell;
      const int w = 5 * block + 4 * gap + 2 * kMargin;
      const int h = domain.grid_rows * kCell + 2 * kMargin + 14;
      s = header(w, h, title);
      static constexpr std::array<const char*, 5> kNames{"A", "B", "C", "D", "*"};
      const auto per_block = static_cast<std::size_t>(domain.grid_rows * domain.grid_cols);
      for (int loc = 0; loc < 5; ++loc) {
        const int x0 = kMargin + loc * (block + gap);
        draw_grid(s, domain, t, static_cast<std::size_t>(loc) * per_block, x0, kMargin);
        s += "<text x=\"" + std::to_string(x0 + block / 2) + "\" y=\"" +
             std::to_string(kMargin + domain.grid_rows * kCell + 16) +
             "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">passenger " +
             kNames[static_cast<std::size_t>(loc)] + "</text>\n";
      }
      break;
    }
    case DomainKind::ring: {
      constexpr double outer = 160.0;
      constexpr double inner = 110.0;
      const double cx = kMargin + outer;
      const double cy = kMargin + outer;
      const int size = static_cast<int>(2 * outer) + 2 * kMargin;
      s = header(size, size, title);
      const auto n = static_cast<double>(values.size());
      for (Index i = 0; i < values.size(); ++i) {
        const double a0 = 2.0 * std::numbers::pi * static_cast<double>(i) / n - std::numbers::pi / 2;
        const double a1 = 2.0 * std::numbers::pi * static_cast<double>(i + 1) / n - std::numbers::pi / 2;
        auto pt = [&](double r, double a) { return num(cx + r * std::cos(a)) + " " + num(cy + r * std::sin(a)); };
        s += "<path d=\"M" + pt(inner, a0) + " L" + pt(outer, a0) + " A" + num(outer) + " " + num(outer) +
             " 0 0 1 " + pt(outer, a1) + " L" + pt(inner, a1) + " A" + num(inner) + " " + num(inner) +
             " 0 0 0 " + pt(inner, a0) + " Z\" fill=\"" + hex(colormap(t[i])) + "\"/>\n";
      }
      break;
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace subtask_forge::render
