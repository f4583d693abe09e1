#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace rvf::pgm {

enum class Relation : uint8_t {
  kProgression = 0,
  kXor = 1,
  kOr = 2,
  kAnd = 3,
  kConsistentUnion = 4,
};

enum class ObjectKind : uint8_t {
  kShape = 0,
  kLine = 1,
};

enum class Attribute : uint8_t {
  kSize = 0,
  kType = 1,
  kColour = 2,
  kPosition = 3,
  kNumber = 4,
};

const char* to_string(Relation r);
const char* to_string(ObjectKind o);
const char* to_string(Attribute a);

// One generative rule [relation, object, attribute].
struct Triple {
  Relation relation;
  ObjectKind object;
  Attribute attribute;

  bool operator==(const Triple&) const = default;
  bool operator<(const Triple& o) const {
    return std::tie(relation, object, attribute) <
           std::tie(o.relation, o.object, o.attribute);
  }
};

// The rule set governing one matrix problem, 1 <= |triples| <= 4, no two
// triples on the same (object, attribute) pair.
struct Structure {
  std::vector<Triple> triples;

  bool contains(const Triple& t) const {
    for (const auto& x : triples)
      if (x == t) return true;
    return false;
  }
};

// Discrete attribute vocabularies.
inline constexpr int kSizeLevels = 10;      // 1..10
inline constexpr int kColourLevels = 10;    // 1..10 (grayscale intensity)
inline constexpr int kShapeTypes = 7;       // 1..7 glyphs
inline constexpr int kCells = 9;            // 3x3 placement lattice, 0..8
inline constexpr int kMaxNumber = 9;        // counts 1..9
inline constexpr int kLineMotifs = 6;       // 1..6

struct ShapeObject {
  int position;    // 0..8
  int shape_type;  // 1..7
  int size;        // 1..10
  int colour;      // 1..10
  bool operator==(const ShapeObject&) const = default;
};

struct LineMotif {
  int motif;   // 1..6
  int colour;  // 1..10
  bool operator==(const LineMotif&) const = default;
};

// One panel: shapes on the lattice plus an optional set of line motifs.
// Shapes within a panel share their scalar attributes whenever that
// attribute is governed; positions are unique.
struct PanelSpec {
  std::vector<ShapeObject> shapes;  // kept sorted by position
  std::vector<LineMotif> lines;     // kept sorted by motif
  bool operator==(const PanelSpec&) const = default;
};

using Grid = std::array<PanelSpec, 9>;

struct Problem {
  std::array<PanelSpec, 8> context;  // grid positions 0..7, row-major
  std::array<PanelSpec, 8> choices;
  int target = 0;  // 0..7
  Structure structure;
};

// All [relation, object, attribute] combinations this implementation admits:
// set relations only on position (sets) and number (count parity); scalar
// relations (progression, consistent union) on the scalar attributes; line
// objects support colour and type only.
const std::vector<Triple>& compatible_triples();

bool triples_conflict(const Triple& a, const Triple& b);

bool structure_valid(const Structure& s);

}  // namespace rvf::pgm
