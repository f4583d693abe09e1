#include "ravenforge/pgm/rules.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace rvf::pgm {

namespace {

// Scalar attribute value of a panel, or nullopt when undefined (no carrier
// objects, or objects disagree on a governed attribute).
std::optional<int> scalar_value(const PanelSpec& p, ObjectKind o, Attribute a) {
  if (o == ObjectKind::kShape) {
    if (a == Attribute::kNumber) {
      return static_cast<int>(p.shapes.size());
    }
    if (p.shapes.empty()) return std::nullopt;
    int v;
    switch (a) {
      case Attribute::kSize:
        v = p.shapes.front().size;
        for (const auto& s : p.shapes)
          if (s.size != v) return std::nullopt;
        return v;
      case Attribute::kType:
        v = p.shapes.front().shape_type;
        for (const auto& s : p.shapes)
          if (s.shape_type != v) return std::nullopt;
        return v;
      case Attribute::kColour:
        v = p.shapes.front().colour;
        for (const auto& s : p.shapes)
          if (s.colour != v) return std::nullopt;
        return v;
      default:
        return std::nullopt;
    }
  }
  // Line object.
  if (p.lines.empty()) return std::nullopt;
  switch (a) {
    case Attribute::kColour: {
      const int v = p.lines.front().colour;
      for (const auto& l : p.lines)
        if (l.colour != v) return std::nullopt;
      return v;
    }
    case Attribute::kType:
      // A governed line type means exactly one motif per panel.
      if (p.lines.size() != 1) return std::nullopt;
      return p.lines.front().motif;
    default:
      return std::nullopt;
  }
}

std::set<int> position_set(const PanelSpec& p) {
  std::set<int> cells;
  for (const auto& s : p.shapes) cells.insert(s.position);
  return cells;
}

bool check_progression(const Structure&, const Triple& t, const Grid& g) {
  std::optional<int> common_step;
  for (int row = 0; row < 3; ++row) {
    std::array<int, 3> v;
    for (int col = 0; col < 3; ++col) {
      auto val = scalar_value(g[row * 3 + col], t.object, t.attribute);
      if (!val) return false;
      v[col] = *val;
    }
    const int d = v[1] - v[0];
    if (v[2] - v[1] != d) return false;
    if (d != 1 && d != 2) return false;
    if (common_step && *common_step != d) return false;
    common_step = d;
  }
  return true;
}

bool check_consistent_union(const Triple& t, const Grid& g) {
  std::optional<std::multiset<int>> reference;
  for (int row = 0; row < 3; ++row) {
    std::multiset<int> values;
    for (int col = 0; col < 3; ++col) {
      auto val = scalar_value(g[row * 3 + col], t.object, t.attribute);
      if (!val) return false;
      values.insert(*val);
    }
    if (reference && *reference != values) return false;
    reference = std::move(values);
  }
  return true;
}

bool check_position_setop(const Triple& t, const Grid& g) {
  for (int row = 0; row < 3; ++row) {
    const auto a = position_set(g[row * 3 + 0]);
    const auto b = position_set(g[row * 3 + 1]);
    const auto c = position_set(g[row * 3 + 2]);
    std::set<int> expect;
    switch (t.relation) {
      case Relation::kXor:
        std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                      std::inserter(expect, expect.end()));
        break;
      case Relation::kOr:
        std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                       std::inserter(expect, expect.end()));
        break;
      case Relation::kAnd:
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                              std::inserter(expect, expect.end()));
        break;
      default:
        return false;
    }
    if (c != expect) return false;
  }
  return true;
}

bool check_number_parity(const Triple& t, const Grid& g) {
  for (int row = 0; row < 3; ++row) {
    const int a = static_cast<int>(g[row * 3 + 0].shapes.size()) & 1;
    const int b = static_cast<int>(g[row * 3 + 1].shapes.size()) & 1;
    const int c = static_cast<int>(g[row * 3 + 2].shapes.size()) & 1;
    int expect;
    switch (t.relation) {
      case Relation::kXor:
        expect = a ^ b;
        break;
      case Relation::kOr:
        expect = a | b;
        break;
      case Relation::kAnd:
        expect = a & b;
        break;
      default:
        return false;
    }
    if (c != expect) return false;
  }
  return true;
}

bool check_triple(const Structure& s, const Triple& t, const Grid& g) {
  const bool set_relation = t.relation == Relation::kXor ||
                            t.relation == Relation::kOr ||
                            t.relation == Relation::kAnd;
  if (set_relation) {
    if (t.object != ObjectKind::kShape) return false;
    if (t.attribute == Attribute::kPosition) return check_position_setop(t, g);
    if (t.attribute == Attribute::kNumber) return check_number_parity(t, g);
    return false;
  }
  if (t.relation == Relation::kProgression) return check_progression(s, t, g);
  return check_consistent_union(t, g);
}

}  // namespace

bool check_rules(const Structure& s, const Grid& grid) {
  for (const auto& t : s.triples)
    if (!check_triple(s, t, grid)) return false;
  return true;
}

}  // namespace rvf::pgm
