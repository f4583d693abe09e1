#pragma once

#include <cstdint>
#include <vector>

#include "ravenforge/pgm/types.hpp"

namespace rvf::pgm {

// Deterministic rasterization of a panel spec onto a white (255) canvas;
// glyph ink darkens with increasing colour level. Supported resolutions are
// 40 (desk scale) and 80 (paper scale). Same spec -> bit-identical image.
std::vector<uint8_t> render_panel(const PanelSpec& spec, int resolution);

}  // namespace rvf::pgm
