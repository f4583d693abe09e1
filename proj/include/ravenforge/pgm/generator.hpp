#pragma once

#include "ravenforge/pgm/splits.hpp"
#include "ravenforge/pgm/types.hpp"
#include "ravenforge/rng.hpp"

namespace rvf::pgm {

// Samples |S| uniform over {1..4}, then triples uniformly without replacement
// from the compatible list, rejecting until `filter` admits the structure.
// Throws GenerationError when the filter stays unsatisfied within the retry
// budget.
Structure sample_structure(Rng& rng, const StructureFilter& filter);

// Realizes a full 3x3 grid whose rows all satisfy the structure's relations;
// ungoverned attributes are held constant within each row.
Grid realize_grid(const Structure& s, Rng& rng);

struct ChoiceSet {
  std::array<PanelSpec, 8> choices;
  int target;  // index whose panel equals the true grid panel 9
};

// Builds 8 choices: the true answer at a uniform index plus 7 distractors,
// each a copy of the answer with exactly one governed attribute perturbed and
// rejected until substituting it at grid position 9 fails check_rules.
ChoiceSet generate_choices(const Grid& grid, const Structure& s, Rng& rng);

// One full problem from a filter-admitted structure.
Problem generate_problem(const StructureFilter& filter, Rng& rng);

}  // namespace rvf::pgm
