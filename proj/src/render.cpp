#include "ravenforge/pgm/render.hpp"

#include <algorithm>
#include <cmath>

#include "ravenforge/error.hpp"

namespace rvf::pgm {

namespace {

// Colour level 1..10 -> gray ink, light to dark, always below background.
uint8_t ink_of(int colour_level) {
  return static_cast<uint8_t>(230 - 21 * (colour_level - 1));
}

struct Canvas {
  int res;
  std::vector<uint8_t>& px;

  void put(int x, int y, uint8_t ink) {
    if (x < 0 || y < 0 || x >= res || y >= res) return;
    uint8_t& p = px[static_cast<size_t>(y) * res + x];
    p = std::min(p, ink);  // darker ink wins where glyphs overlap
  }
};

// Point-in-glyph test for glyph types 1..7, in unit coordinates relative to
// the glyph center (dx, dy in pixels, radius r).
bool inside_glyph(int type, double dx, double dy, double r) {
  const double ax = std::fabs(dx), ay = std::fabs(dy);
  switch (type) {
    case 1:  // filled circle
      return dx * dx + dy * dy <= r * r;
    case 2:  // filled square
      return ax <= r * 0.82 && ay <= r * 0.82;
    case 3:  // diamond
      return ax + ay <= r;
    case 4:  // upward triangle
      return dy <= r * 0.75 && ay <= r &&
             (dy + r * 0.75) >= 1.5 * ax;
    case 5:  // plus cross
      return (ax <= r * 0.34 && ay <= r) || (ay <= r * 0.34 && ax <= r);
    case 6:  // hexagon (flat-topped)
      return ay <= r * 0.87 && ax <= r && (0.87 * ax + 0.5 * ay) <= r * 0.87;
    case 7:  // ring (annulus)
      {
        const double d2 = dx * dx + dy * dy;
        return d2 <= r * r && d2 >= (0.45 * r) * (0.45 * r);
      }
    default:
      return false;
  }
}

void draw_shape(Canvas& c, const ShapeObject& s) {
  const int res = c.res;
  // Cell bounds on the 3x3 lattice.
  const int col = s.position % 3, row = s.position / 3;
  const int x0 = col * res / 3, x1 = (col + 1) * res / 3;
  const int y0 = row * res / 3, y1 = (row + 1) * res / 3;
  const double cx = 0.5 * (x0 + x1 - 1), cy = 0.5 * (y0 + y1 - 1);
  const double rmax = 0.5 * std::min(x1 - x0, y1 - y0) - 0.5;
  const double r = rmax * (0.36 + 0.064 * s.size);
  const uint8_t ink = ink_of(s.colour);
  // 4x4 supersampled coverage: sub-pixel size steps shade boundary pixels,
  // which keeps all ten size levels distinct even in 13-px cells.
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          const double px = x + (sx + 0.5) / 4.0 - 0.5 - cx;
          const double py = y + (sy + 0.5) / 4.0 - 0.5 - cy;
          if (inside_glyph(s.shape_type, px, py, r)) ++hits;
        }
      if (hits == 0) continue;
      const double blend = 255.0 + (ink - 255.0) * (hits / 16.0);
      c.put(x, y, static_cast<uint8_t>(std::lround(blend)));
    }
}

void draw_line_motif(Canvas& c, const LineMotif& l) {
  const int res = c.res;
  const int t = res >= 80 ? 2 : 1;  // stroke thickness
  const uint8_t ink = ink_of(l.colour);
  const int mid = res / 2;
  switch (l.motif) {
    case 1:  // horizontal center line
      for (int y = mid - t; y < mid + t; ++y)
        for (int x = 0; x < res; ++x) c.put(x, y, ink);
      break;
    case 2:  // vertical center line
      for (int x = mid - t; x < mid + t; ++x)
        for (int y = 0; y < res; ++y) c.put(x, y, ink);
      break;
    case 3:  // main diagonal
      for (int i = 0; i < res; ++i)
        for (int d = -t; d < t; ++d) c.put(i + d, i, ink);
      break;
    case 4:  // anti-diagonal
      for (int i = 0; i < res; ++i)
        for (int d = -t; d < t; ++d) c.put(i + d, res - 1 - i, ink);
      break;
    case 5: {  // border frame
      for (int i = 1; i < res - 1; ++i)
        for (int d = 0; d < t; ++d) {
          c.put(i, 1 + d, ink);
          c.put(i, res - 2 - d, ink);
          c.put(1 + d, i, ink);
          c.put(res - 2 - d, i, ink);
        }
      break;
    }
    case 6: {  // center ring
      const double rr = res / 3.0;
      for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
          const double dx = x - (res - 1) * 0.5, dy = y - (res - 1) * 0.5;
          const double d = std::sqrt(dx * dx + dy * dy);
          if (std::fabs(d - rr) <= t) c.put(x, y, ink);
        }
      break;
    }
    default:
      break;
  }
}

}  // namespace

std::vector<uint8_t> render_panel(const PanelSpec& spec, int resolution) {
  if (resolution != 40 && resolution != 80)
    throw ValueError("render_panel: resolution must be 40 or 80, got " +
                     std::to_string(resolution));
  std::vector<uint8_t> px(static_cast<size_t>(resolution) * resolution, 255);
  Canvas canvas{resolution, px};
  for (const auto& l : spec.lines) draw_line_motif(canvas, l);
  for (const auto& s : spec.shapes) draw_shape(canvas, s);
  return px;
}

}  // namespace rvf::pgm
