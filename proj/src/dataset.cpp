#include "ravenforge/pgm/dataset.hpp"

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ravenforge/error.hpp"
#include "ravenforge/pgm/generator.hpp"
#include "ravenforge/pgm/render.hpp"

namespace rvf::pgm {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'M', 'D'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, 4);
  put<uint16_t>(out, ds.version);
  put<uint16_t>(out, ds.resolution);
  put<uint32_t>(out, static_cast<uint32_t>(ds.records.size()));
  const size_t panel_bytes =
      static_cast<size_t>(ds.resolution) * ds.resolution;
  for (const auto& r : ds.records) {
    for (const auto& panel : r.panels) {
      if (panel.size() != panel_bytes)
        throw IoError("panel byte count does not match resolution");
      out.write(reinterpret_cast<const char*>(panel.data()),
                static_cast<std::streamsize>(panel.size()));
    }
    put<uint8_t>(out, r.target);
    put<uint8_t>(out, static_cast<uint8_t>(r.structure.triples.size()));
    for (const auto& t : r.structure.triples) {
      put<uint8_t>(out, static_cast<uint8_t>(t.relation));
      put<uint8_t>(out, static_cast<uint8_t>(t.object));
      put<uint8_t>(out, static_cast<uint8_t>(t.attribute));
    }
    put<uint8_t>(out, r.regime);
  }
  if (!out) throw IoError("write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad dataset magic in " + path);
  Dataset ds;
  ds.version = get<uint16_t>(in);
  ds.resolution = get<uint16_t>(in);
  const uint32_t count = get<uint32_t>(in);
  const size_t panel_bytes =
      static_cast<size_t>(ds.resolution) * ds.resolution;
  ds.records.resize(count);
  for (auto& r : ds.records) {
    for (auto& panel : r.panels) {
      panel.resize(panel_bytes);
      in.read(reinterpret_cast<char*>(panel.data()),
              static_cast<std::streamsize>(panel_bytes));
    }
    r.target = get<uint8_t>(in);
    const uint8_t n = get<uint8_t>(in);
    r.structure.triples.resize(n);
    for (auto& t : r.structure.triples) {
      t.relation = static_cast<Relation>(get<uint8_t>(in));
      t.object = static_cast<ObjectKind>(get<uint8_t>(in));
      t.attribute = static_cast<Attribute>(get<uint8_t>(in));
    }
    r.regime = get<uint8_t>(in);
    if (!in) throw IoError("truncated dataset " + path);
  }
  return ds;
}

void save_metadata_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    nlohmann::json j;
    j["index"] = i;
    j["target"] = r.target;
    j["regime"] = to_string(static_cast<Regime>(r.regime));
    nlohmann::json st = nlohmann::json::array();
    for (const auto& t : r.structure.triples)
      st.push_back({to_string(t.relation), to_string(t.object),
                    to_string(t.attribute)});
    j["structure"] = st;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

Dataset generate_split(const StructureFilter& filter, int count,
                       int resolution, uint64_t seed, uint64_t stream_tag,
                       int threads) {
  if (count <= 0) throw ValueError("generate_split: count must be positive");
  Dataset ds;
  ds.resolution = static_cast<uint16_t>(resolution);
  ds.records.resize(count);

  auto make_one = [&](int i) {
    Rng rng = Rng::derive(seed, {stream_tag, static_cast<uint64_t>(i)});
    const Problem p = generate_problem(filter, rng);
    ProblemRecord& r = ds.records[i];
    for (int k = 0; k < 8; ++k)
      r.panels[k] = render_panel(p.context[k], resolution);
    for (int k = 0; k < 8; ++k)
      r.panels[8 + k] = render_panel(p.choices[k], resolution);
    r.target = static_cast<uint8_t>(p.target);
    r.structure = p.structure;
    r.regime = static_cast<uint8_t>(filter.regime);
  };

  if (threads <= 1) {
    for (int i = 0; i < count; ++i) make_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < count; i += threads) make_one(i);
      });
    for (auto& t : pool) t.join();
  }
  return ds;
}

void build_dataset(Regime regime, const BuildCounts& counts, int resolution,
                   uint64_t seed, const std::string& out_dir, int threads,
                   int max_triples, int min_triples) {
  if (counts.train <= 0 || counts.val <= 0 || counts.test <= 0)
    throw ValueError("build_dataset: counts must be positive");
  std::filesystem::create_directories(out_dir);

  Rng split_rng = Rng::derive(seed, {0x5117ULL});
  SplitFilters filters = make_split(regime, split_rng);
  for (auto* f : {&filters.train, &filters.val, &filters.test}) {
    f->max_triples = max_triples;
    f->min_triples = min_triples;
  }

  const struct {
    const char* name;
    const StructureFilter* filter;
    int count;
    uint64_t tag;
  } jobs[] = {
      {"train", &filters.train, counts.train, 1},
      {"val", &filters.val, counts.val, 2},
      {"test", &filters.test, counts.test, 3},
  };
  for (const auto& job : jobs) {
    Dataset ds = generate_split(*job.filter, job.count, resolution, seed,
                                job.tag, threads);
    const std::string base = out_dir + "/" + job.name;
    save_dataset(ds, base + ".pgmd");
    save_metadata_jsonl(ds, base + ".meta.jsonl");
  }
}

}  // namespace rvf::pgm
