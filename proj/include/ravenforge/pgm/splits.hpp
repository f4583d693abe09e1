#pragma once

#include <utility>
#include <vector>

#include "ravenforge/pgm/types.hpp"
#include "ravenforge/rng.hpp"

namespace rvf::pgm {

enum class Regime : uint8_t {
  kNeutral = 0,
  kHoTriplePairs = 1,
  kHoAttributePairs = 2,
  kHoTriples = 3,
};

const char* to_string(Regime r);
Regime regime_from_string(const std::string& name);

enum class SplitRole : uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

// Structure admission predicate for one split of one regime. Train and val
// exclude the held-out material; test requires it.
struct StructureFilter {
  Regime regime = Regime::kNeutral;
  SplitRole role = SplitRole::kTrain;
  std::vector<Triple> held_triples;
  std::vector<std::pair<Attribute, Attribute>> held_attribute_pairs;
  std::vector<std::pair<Triple, Triple>> held_triple_pairs;

  bool admits(const Structure& s) const;

  // Restricts sampling to single-triple structures (desk-scale datasets).
  int max_triples = 4;
  int min_triples = 1;
};

struct SplitFilters {
  StructureFilter train;
  StructureFilter val;
  StructureFilter test;
};

// Derives the regime's held-out material from `rng` and returns the three
// split filters. Val always mirrors the train distribution.
SplitFilters make_split(Regime regime, Rng& rng);

}  // namespace rvf::pgm
