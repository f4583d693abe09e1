#include "ravenforge/pgm/generator.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "ravenforge/error.hpp"
#include "ravenforge/pgm/rules.hpp"

namespace rvf::pgm {

namespace {

constexpr int kStructureRetries = 20000;
constexpr int kGridRetries = 100;
constexpr int kDistractorRetries = 100;

bool is_set_relation(Relation r) {
  return r == Relation::kXor || r == Relation::kOr || r == Relation::kAnd;
}

// Highest level of a scalar attribute.
int attr_levels(ObjectKind o, Attribute a) {
  switch (a) {
    case Attribute::kSize:
      return kSizeLevels;
    case Attribute::kType:
      return o == ObjectKind::kShape ? kShapeTypes : kLineMotifs;
    case Attribute::kColour:
      return kColourLevels;
    case Attribute::kNumber:
      return kMaxNumber;
    default:
      return 0;
  }
}

std::vector<int> sample_distinct_cells(Rng& rng, int count) {
  std::vector<int> cells(kCells);
  for (int i = 0; i < kCells; ++i) cells[i] = i;
  rng.shuffle(cells);
  cells.resize(count);
  std::sort(cells.begin(), cells.end());
  return cells;
}

void canonicalize(PanelSpec& p) {
  std::sort(p.shapes.begin(), p.shapes.end(),
            [](const ShapeObject& a, const ShapeObject& b) {
              return a.position < b.position;
            });
  std::sort(p.lines.begin(), p.lines.end(),
            [](const LineMotif& a, const LineMotif& b) {
              return a.motif < b.motif;
            });
}

// 3x3 grid of scalar values for one governed (object, attribute) pair.
using ValueGrid = std::array<int, 9>;

ValueGrid realize_scalar_pattern(const Triple& t, Rng& rng) {
  const int levels = attr_levels(t.object, t.attribute);
  ValueGrid v{};
  if (t.relation == Relation::kProgression) {
    // Ascending arithmetic rows sharing one step across the grid.
    const int max_step = levels >= 5 ? 2 : 1;
    const int d = rng.uniform_int(1, max_step);
    for (int row = 0; row < 3; ++row) {
      const int start = rng.uniform_int(1, levels - 2 * d);
      for (int col = 0; col < 3; ++col) v[row * 3 + col] = start + col * d;
    }
    return v;
  }
  // Consistent union: one multiset of three distinct values, permuted per row.
  std::vector<int> pool(levels);
  for (int i = 0; i < levels; ++i) pool[i] = i + 1;
  rng.shuffle(pool);
  std::vector<int> values(pool.begin(), pool.begin() + 3);
  for (int row = 0; row < 3; ++row) {
    rng.shuffle(values);
    for (int col = 0; col < 3; ++col) v[row * 3 + col] = values[col];
  }
  return v;
}

int parity_of(Relation r, int a, int b) {
  switch (r) {
    case Relation::kXor:
      return a ^ b;
    case Relation::kOr:
      return a | b;
    default:
      return a & b;
  }
}

// Per-panel object placement: count plus cell set.
struct Placement {
  std::array<std::vector<int>, 9> cells;
};

Placement realize_positions_setop(const Triple& t, Rng& rng) {
  Placement out;
  for (int row = 0; row < 3; ++row) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kGridRetries)
        throw GenerationError("position rule unsatisfiable within retry budget");
      auto a = sample_distinct_cells(rng, rng.uniform_int(1, 4));
      auto b = sample_distinct_cells(rng, rng.uniform_int(1, 4));
      std::vector<int> c;
      switch (t.relation) {
        case Relation::kXor:
          std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                        std::back_inserter(c));
          break;
        case Relation::kOr:
          std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                         std::back_inserter(c));
          break;
        case Relation::kAnd:
          std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                std::back_inserter(c));
          break;
        default:
          throw GenerationError("bad position relation");
      }
      if (c.empty()) continue;
      out.cells[row * 3 + 0] = std::move(a);
      out.cells[row * 3 + 1] = std::move(b);
      out.cells[row * 3 + 2] = std::move(c);
      break;
    }
  }
  return out;
}

Placement realize_positions_from_counts(const ValueGrid& counts, Rng& rng) {
  Placement out;
  for (int i = 0; i < 9; ++i)
    out.cells[i] = sample_distinct_cells(rng, counts[i]);
  return out;
}

ValueGrid realize_number_parity(const Triple& t, Rng& rng) {
  ValueGrid v{};
  for (int row = 0; row < 3; ++row) {
    const int c1 = rng.uniform_int(1, kMaxNumber);
    const int c2 = rng.uniform_int(1, kMaxNumber);
    const int want = parity_of(t.relation, c1 & 1, c2 & 1);
    // counts 1..9 with the required parity: odds {1,3,5,7,9}, evens {2,4,6,8}
    const int c3 = want ? 1 + 2 * rng.uniform_int(0, 4)
                        : 2 + 2 * rng.uniform_int(0, 3);
    v[row * 3 + 0] = c1;
    v[row * 3 + 1] = c2;
    v[row * 3 + 2] = c3;
  }
  return v;
}

struct GoverningTriples {
  std::optional<Triple> position;
  std::optional<Triple> number;
  std::optional<Triple> shape_size;
  std::optional<Triple> shape_type;
  std::optional<Triple> shape_colour;
  std::optional<Triple> line_type;
  std::optional<Triple> line_colour;
};

GoverningTriples classify(const Structure& s) {
  GoverningTriples g;
  for (const auto& t : s.triples) {
    if (t.object == ObjectKind::kShape) {
      switch (t.attribute) {
        case Attribute::kPosition:
          g.position = t;
          break;
        case Attribute::kNumber:
          g.number = t;
          break;
        case Attribute::kSize:
          g.shape_size = t;
          break;
        case Attribute::kType:
          g.shape_type = t;
          break;
        case Attribute::kColour:
          g.shape_colour = t;
          break;
      }
    } else {
      if (t.attribute == Attribute::kType) g.line_type = t;
      if (t.attribute == Attribute::kColour) g.line_colour = t;
    }
  }
  return g;
}

Grid realize_grid_once(const Structure& s, Rng& rng) {
  const GoverningTriples gov = classify(s);

  // Object placement: governed by position or number rules, else row noise.
  Placement placement;
  if (gov.position) {
    placement = realize_positions_setop(*gov.position, rng);
  } else if (gov.number) {
    ValueGrid counts = is_set_relation(gov.number->relation)
                           ? realize_number_parity(*gov.number, rng)
                           : realize_scalar_pattern(*gov.number, rng);
    placement = realize_positions_from_counts(counts, rng);
  } else {
    // Noise: constant within each row; at least two objects so partial
    // perturbations of scalar attributes are available to the distractor
    // builder.
    for (int row = 0; row < 3; ++row) {
      auto cells = sample_distinct_cells(rng, rng.uniform_int(2, 4));
      for (int col = 0; col < 3; ++col) placement.cells[row * 3 + col] = cells;
    }
  }

  // Scalar shape attributes: rule pattern or per-row constant noise.
  auto scalar_plan = [&](const std::optional<Triple>& t,
                         Attribute attr) -> ValueGrid {
    if (t) return realize_scalar_pattern(*t, rng);
    ValueGrid v{};
    for (int row = 0; row < 3; ++row) {
      const int val = rng.uniform_int(1, attr_levels(ObjectKind::kShape, attr));
      for (int col = 0; col < 3; ++col) v[row * 3 + col] = val;
    }
    return v;
  };
  const ValueGrid sizes = scalar_plan(gov.shape_size, Attribute::kSize);
  const ValueGrid types = scalar_plan(gov.shape_type, Attribute::kType);
  const ValueGrid colours = scalar_plan(gov.shape_colour, Attribute::kColour);

  // Line component.
  std::array<std::vector<int>, 9> line_motifs;
  ValueGrid line_colours{};
  if (gov.line_type) {
    const ValueGrid motif_values = realize_scalar_pattern(*gov.line_type, rng);
    for (int i = 0; i < 9; ++i) line_motifs[i] = {motif_values[i]};
  } else if (gov.line_colour) {
    for (int row = 0; row < 3; ++row) {
      const int count = rng.uniform_int(1, 2);
      std::vector<int> pool(kLineMotifs);
      for (int i = 0; i < kLineMotifs; ++i) pool[i] = i + 1;
      rng.shuffle(pool);
      std::vector<int> motifs(pool.begin(), pool.begin() + count);
      std::sort(motifs.begin(), motifs.end());
      for (int col = 0; col < 3; ++col) line_motifs[row * 3 + col] = motifs;
    }
  } else {
    for (int row = 0; row < 3; ++row) {
      if (rng.bernoulli(0.5)) continue;  // rows without decoration stay empty
      const int motif = rng.uniform_int(1, kLineMotifs);
      for (int col = 0; col < 3; ++col) line_motifs[row * 3 + col] = {motif};
    }
  }
  if (gov.line_colour) {
    line_colours = realize_scalar_pattern(*gov.line_colour, rng);
  } else {
    for (int row = 0; row < 3; ++row) {
      const int val = rng.uniform_int(1, kColourLevels);
      for (int col = 0; col < 3; ++col) line_colours[row * 3 + col] = val;
    }
  }

  Grid grid;
  for (int i = 0; i < 9; ++i) {
    PanelSpec& p = grid[i];
    for (int cell : placement.cells[i])
      p.shapes.push_back({cell, types[i], sizes[i], colours[i]});
    for (int motif : line_motifs[i]) p.lines.push_back({motif, line_colours[i]});
    canonicalize(p);
  }
  return grid;
}

// ---- distractor perturbations ----

std::vector<int> free_cells(const PanelSpec& p) {
  std::array<bool, kCells> used{};
  for (const auto& s : p.shapes) used[s.position] = true;
  std::vector<int> out;
  for (int i = 0; i < kCells; ++i)
    if (!used[i]) out.push_back(i);
  return out;
}

int different_level(Rng& rng, int current, int levels) {
  int v = rng.uniform_int(1, levels - 1);
  if (v >= current) ++v;
  return v;
}

// Applies one random perturbation of the given governed attribute to `p`.
// Returns false when no perturbation is possible.
bool perturb(PanelSpec& p, const Triple& t, Rng& rng) {
  if (t.object == ObjectKind::kShape) {
    switch (t.attribute) {
      case Attribute::kSize:
      case Attribute::kType:
      case Attribute::kColour: {
        if (p.shapes.empty()) return false;
        const int levels = attr_levels(t.object, t.attribute);
        auto value_of = [&](ShapeObject& s) -> int& {
          if (t.attribute == Attribute::kSize) return s.size;
          if (t.attribute == Attribute::kType) return s.shape_type;
          return s.colour;
        };
        // Either move the whole panel to a new level or break one object
        // out of the shared value; both violate the governed relation.
        if (p.shapes.size() >= 2 && rng.bernoulli(0.5)) {
          auto& obj = p.shapes[rng.uniform_int(
              0, static_cast<int>(p.shapes.size()) - 1)];
          value_of(obj) = different_level(rng, value_of(obj), levels);
        } else {
          const int next = different_level(rng, value_of(p.shapes[0]), levels);
          for (auto& s : p.shapes) value_of(s) = next;
        }
        return true;
      }
      case Attribute::kPosition: {
        if (p.shapes.empty()) return false;
        auto free = free_cells(p);
        if (!free.empty() && (p.shapes.size() == 1 || rng.bernoulli(0.8))) {
          auto& obj = p.shapes[rng.uniform_int(
              0, static_cast<int>(p.shapes.size()) - 1)];
          obj.position = free[rng.uniform_int(
              0, static_cast<int>(free.size()) - 1)];
        } else {
          if (p.shapes.size() <= 1) return false;
          p.shapes.erase(p.shapes.begin() +
                         rng.uniform_int(0, static_cast<int>(p.shapes.size()) - 1));
        }
        canonicalize(p);
        return true;
      }
      case Attribute::kNumber: {
        const int current = static_cast<int>(p.shapes.size());
        const int next = different_level(rng, current, kMaxNumber);
        const ShapeObject proto =
            p.shapes.empty() ? ShapeObject{0, 1, 5, 5} : p.shapes.front();
        while (static_cast<int>(p.shapes.size()) > next)
          p.shapes.erase(p.shapes.begin() +
                         rng.uniform_int(0, static_cast<int>(p.shapes.size()) - 1));
        while (static_cast<int>(p.shapes.size()) < next) {
          auto free = free_cells(p);
          if (free.empty()) return false;
          ShapeObject add = proto;
          add.position =
              free[rng.uniform_int(0, static_cast<int>(free.size()) - 1)];
          p.shapes.push_back(add);
        }
        canonicalize(p);
        return true;
      }
    }
    return false;
  }

  // Line attributes.
  if (t.attribute == Attribute::kColour) {
    if (p.lines.empty()) return false;
    if (p.lines.size() >= 2 && rng.bernoulli(0.5)) {
      auto& l = p.lines[rng.uniform_int(0, static_cast<int>(p.lines.size()) - 1)];
      l.colour = different_level(rng, l.colour, kColourLevels);
    } else {
      const int next = different_level(rng, p.lines[0].colour, kColourLevels);
      for (auto& l : p.lines) l.colour = next;
    }
    return true;
  }
  if (t.attribute == Attribute::kType) {
    if (p.lines.empty()) return false;
    const int roll = rng.uniform_int(0, 10);
    if (roll == 0) {
      p.lines.clear();
      return true;
    }
    if (roll <= 5 && p.lines.size() < kLineMotifs) {
      std::array<bool, kLineMotifs + 1> used{};
      for (const auto& l : p.lines) used[l.motif] = true;
      std::vector<int> avail;
      for (int m = 1; m <= kLineMotifs; ++m)
        if (!used[m]) avail.push_back(m);
      p.lines.push_back(
          {avail[rng.uniform_int(0, static_cast<int>(avail.size()) - 1)],
           p.lines.front().colour});
    } else {
      auto& l = p.lines[rng.uniform_int(0, static_cast<int>(p.lines.size()) - 1)];
      l.motif = different_level(rng, l.motif, kLineMotifs);
    }
    canonicalize(p);
    return true;
  }
  return false;
}

}  // namespace

// ---- compatibility table / structure validity ----

const char* to_string(Relation r) {
  switch (r) {
    case Relation::kProgression:
      return "progression";
    case Relation::kXor:
      return "XOR";
    case Relation::kOr:
      return "OR";
    case Relation::kAnd:
      return "AND";
    case Relation::kConsistentUnion:
      return "consistent_union";
  }
  return "?";
}

const char* to_string(ObjectKind o) {
  return o == ObjectKind::kShape ? "shape" : "line";
}

const char* to_string(Attribute a) {
  switch (a) {
    case Attribute::kSize:
      return "size";
    case Attribute::kType:
      return "type";
    case Attribute::kColour:
      return "colour";
    case Attribute::kPosition:
      return "position";
    case Attribute::kNumber:
      return "number";
  }
  return "?";
}

const std::vector<Triple>& compatible_triples() {
  static const std::vector<Triple> table = [] {
    std::vector<Triple> t;
    const auto scalar = {Relation::kProgression, Relation::kConsistentUnion};
    for (auto r : scalar) {
      t.push_back({r, ObjectKind::kShape, Attribute::kSize});
      t.push_back({r, ObjectKind::kShape, Attribute::kType});
      t.push_back({r, ObjectKind::kShape, Attribute::kColour});
      t.push_back({r, ObjectKind::kShape, Attribute::kNumber});
      t.push_back({r, ObjectKind::kLine, Attribute::kType});
      t.push_back({r, ObjectKind::kLine, Attribute::kColour});
    }
    for (auto r : {Relation::kXor, Relation::kOr, Relation::kAnd}) {
      t.push_back({r, ObjectKind::kShape, Attribute::kPosition});
      t.push_back({r, ObjectKind::kShape, Attribute::kNumber});
    }
    return t;
  }();
  return table;
}

bool triples_conflict(const Triple& a, const Triple& b) {
  if (a.object == b.object && a.attribute == b.attribute) return true;
  // Position rules fix object counts, so a second count-governing rule on the
  // same object kind is unsatisfiable in general.
  auto counts = [](const Triple& t) {
    return t.object == ObjectKind::kShape &&
           (t.attribute == Attribute::kPosition ||
            t.attribute == Attribute::kNumber);
  };
  return counts(a) && counts(b);
}

bool structure_valid(const Structure& s) {
  if (s.triples.empty() || s.triples.size() > 4) return false;
  const auto& table = compatible_triples();
  for (size_t i = 0; i < s.triples.size(); ++i) {
    if (std::find(table.begin(), table.end(), s.triples[i]) == table.end())
      return false;
    for (size_t j = i + 1; j < s.triples.size(); ++j)
      if (triples_conflict(s.triples[i], s.triples[j])) return false;
  }
  return true;
}

// ---- operations ----

Structure sample_structure(Rng& rng, const StructureFilter& filter) {
  for (int attempt = 0; attempt < kStructureRetries; ++attempt) {
    const int want =
        rng.uniform_int(filter.min_triples, filter.max_triples);
    std::vector<Triple> pool = compatible_triples();
    Structure s;
    while (static_cast<int>(s.triples.size()) < want && !pool.empty()) {
      const int pick = rng.uniform_int(0, static_cast<int>(pool.size()) - 1);
      const Triple chosen = pool[pick];
      s.triples.push_back(chosen);
      std::erase_if(pool, [&](const Triple& t) {
        return triples_conflict(chosen, t);
      });
    }
    if (static_cast<int>(s.triples.size()) != want) continue;
    if (filter.admits(s)) return s;
  }
  throw GenerationError("no admissible structure within retry budget");
}

Grid realize_grid(const Structure& s, Rng& rng) {
  if (!structure_valid(s)) throw GenerationError("invalid structure");
  for (int attempt = 0; attempt < 3; ++attempt) {
    Grid g = realize_grid_once(s, rng);
    if (check_rules(s, g)) return g;
  }
  throw GenerationError("realized grid failed rule audit");
}

ChoiceSet generate_choices(const Grid& grid, const Structure& s, Rng& rng) {
  if (!check_rules(s, grid))
    throw GenerationError("generate_choices: grid does not satisfy structure");
  ChoiceSet out;
  out.target = rng.uniform_int(0, 7);
  out.choices[out.target] = grid[8];

  std::vector<PanelSpec> accepted;
  for (int slot = 0; slot < 8; ++slot) {
    if (slot == out.target) continue;
    bool ok = false;
    for (int attempt = 0; attempt < kDistractorRetries; ++attempt) {
      PanelSpec candidate = grid[8];
      const auto& t =
          s.triples[rng.uniform_int(0, static_cast<int>(s.triples.size()) - 1)];
      if (!perturb(candidate, t, rng)) continue;
      if (candidate == grid[8]) continue;
      if (std::find(accepted.begin(), accepted.end(), candidate) !=
          accepted.end())
        continue;
      Grid probe = grid;
      probe[8] = candidate;
      if (check_rules(s, probe)) continue;  // still solves the matrix
      out.choices[slot] = candidate;
      accepted.push_back(std::move(candidate));
      ok = true;
      break;
    }
    if (!ok)
      throw GenerationError(
          "could not build 7 distinct failing distractors within budget");
  }
  return out;
}

Problem generate_problem(const StructureFilter& filter, Rng& rng) {
  const Structure s = sample_structure(rng, filter);
  const Grid grid = realize_grid(s, rng);
  const ChoiceSet cs = generate_choices(grid, s, rng);
  Problem p;
  for (int i = 0; i < 8; ++i) p.context[i] = grid[i];
  p.choices = cs.choices;
  p.target = cs.target;
  p.structure = s;
  return p;
}

}  // namespace rvf::pgm
