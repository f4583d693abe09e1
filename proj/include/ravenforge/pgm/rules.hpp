#pragma once

#include "ravenforge/pgm/types.hpp"

namespace rvf::pgm {

// Verification oracle: true iff every triple's relation holds on all three
// rows of the 3x3 grid. Implemented independently of the generator (no shared
// rule code paths) so it can audit realize_grid / generate_choices output.
bool check_rules(const Structure& s, const Grid& grid);

}  // namespace rvf::pgm
