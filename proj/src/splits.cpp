#include "ravenforge/pgm/splits.hpp"

#include <algorithm>

#include "ravenforge/error.hpp"

namespace rvf::pgm {

namespace {

std::pair<Attribute, Attribute> norm_pair(Attribute a, Attribute b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::pair<Triple, Triple> norm_pair(const Triple& a, const Triple& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

bool has_held_triple(const StructureFilter& f, const Structure& s) {
  for (const auto& t : s.triples)
    if (std::find(f.held_triples.begin(), f.held_triples.end(), t) !=
        f.held_triples.end())
      return true;
  return false;
}

bool has_held_attribute_pair(const StructureFilter& f, const Structure& s) {
  for (size_t i = 0; i < s.triples.size(); ++i)
    for (size_t j = i + 1; j < s.triples.size(); ++j) {
      const auto p = norm_pair(s.triples[i].attribute, s.triples[j].attribute);
      if (std::find(f.held_attribute_pairs.begin(),
                    f.held_attribute_pairs.end(),
                    p) != f.held_attribute_pairs.end())
        return true;
    }
  return false;
}

bool has_held_triple_pair(const StructureFilter& f, const Structure& s) {
  for (size_t i = 0; i < s.triples.size(); ++i)
    for (size_t j = i + 1; j < s.triples.size(); ++j) {
      const auto p = norm_pair(s.triples[i], s.triples[j]);
      if (std::find(f.held_triple_pairs.begin(), f.held_triple_pairs.end(),
                    p) != f.held_triple_pairs.end())
        return true;
    }
  return false;
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kNeutral:
      return "neutral";
    case Regime::kHoTriplePairs:
      return "ho_triple_pairs";
    case Regime::kHoAttributePairs:
      return "ho_attribute_pairs";
    case Regime::kHoTriples:
      return "ho_triples";
  }
  return "?";
}

Regime regime_from_string(const std::string& name) {
  if (name == "neutral") return Regime::kNeutral;
  if (name == "ho_triple_pairs") return Regime::kHoTriplePairs;
  if (name == "ho_attribute_pairs") return Regime::kHoAttributePairs;
  if (name == "ho_triples") return Regime::kHoTriples;
  throw ValueError("unknown regime: " + name);
}

bool StructureFilter::admits(const Structure& s) const {
  const int n = static_cast<int>(s.triples.size());
  if (n < min_triples || n > max_triples) return false;
  switch (regime) {
    case Regime::kNeutral:
      return true;
    case Regime::kHoTriples: {
      const bool held = has_held_triple(*this, s);
      return role == SplitRole::kTest ? held : !held;
    }
    case Regime::kHoAttributePairs: {
      const bool held = has_held_attribute_pair(*this, s);
      return role == SplitRole::kTest ? held : !held;
    }
    case Regime::kHoTriplePairs: {
      const bool held = has_held_triple_pair(*this, s);
      return role == SplitRole::kTest ? held : !held;
    }
  }
  return false;
}

SplitFilters make_split(Regime regime, Rng& rng) {
  StructureFilter proto;
  proto.regime = regime;
  switch (regime) {
    case Regime::kNeutral:
      break;
    case Regime::kHoTriples: {
      auto pool = compatible_triples();
      rng.shuffle(pool);
      proto.held_triples.assign(pool.begin(), pool.begin() + 3);
      break;
    }
    case Regime::kHoAttributePairs: {
      std::vector<std::pair<Attribute, Attribute>> pairs;
      const Attribute all[] = {Attribute::kSize, Attribute::kType,
                               Attribute::kColour, Attribute::kPosition,
                               Attribute::kNumber};
      for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) pairs.push_back({all[i], all[j]});
      rng.shuffle(pairs);
      proto.held_attribute_pairs.assign(pairs.begin(), pairs.begin() + 2);
      break;
    }
    case Regime::kHoTriplePairs: {
      const auto& table = compatible_triples();
      std::vector<std::pair<Triple, Triple>> pairs;
      for (size_t i = 0; i < table.size(); ++i)
        for (size_t j = i + 1; j < table.size(); ++j)
          if (!triples_conflict(table[i], table[j]))
            pairs.push_back(norm_pair(table[i], table[j]));
      rng.shuffle(pairs);
      proto.held_triple_pairs.assign(pairs.begin(), pairs.begin() + 12);
      break;
    }
  }
  SplitFilters out{proto, proto, proto};
  out.train.role = SplitRole::kTrain;
  out.val.role = SplitRole::kVal;
  out.test.role = SplitRole::kTest;
  return out;
}

}  // namespace rvf::pgm
