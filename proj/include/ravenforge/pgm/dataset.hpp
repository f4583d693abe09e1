#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ravenforge/pgm/splits.hpp"
#include "ravenforge/pgm/types.hpp"

namespace rvf::pgm {

struct ProblemRecord {
  // Panels in order context 0..7 then choices 0..7, each resolution^2 bytes.
  std::array<std::vector<uint8_t>, 16> panels;
  uint8_t target = 0;
  Structure structure;
  uint8_t regime = 0;
};

struct Dataset {
  uint16_t version = 1;
  uint16_t resolution = 40;
  std::vector<ProblemRecord> records;
};

// Binary container: magic "PGMD", little-endian, header {version u16,
// resolution u16, count u32}; per record 16*res^2 panel bytes, target u8,
// count-prefixed triple codes (3 bytes each), regime u8.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Human-inspectable JSON-lines sidecar mirroring the per-record metadata.
void save_metadata_jsonl(const Dataset& ds, const std::string& path);

// Generates `count` problems for one split. Every problem derives its own
// stream from (seed, stream_tag, index), so any thread schedule produces the
// same records after index-ordered assembly.
Dataset generate_split(const StructureFilter& filter, int count,
                       int resolution, uint64_t seed, uint64_t stream_tag,
                       int threads = 1);

struct BuildCounts {
  int train = 0;
  int val = 0;
  int test = 0;
};

// Writes {train,val,test}.pgmd plus .meta.jsonl sidecars under out_dir.
void build_dataset(Regime regime, const BuildCounts& counts, int resolution,
                   uint64_t seed, const std::string& out_dir, int threads = 1,
                   int max_triples = 4, int min_triples = 1);

}  // namespace rvf::pgm
