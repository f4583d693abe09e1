#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ravenforge/tensor.hpp"

namespace rvf {

// One named tensor in an RVF1 container. Values are always 32-bit floats on
// disk regardless of the runtime scalar type.
struct CheckpointEntry {
  Shape shape;
  std::vector<float> data;
};

using StateDict = std::map<std::string, CheckpointEntry>;

// Binary container: magic "RVF1", little-endian, u32 record count, then per
// record {u32 name length, UTF-8 name, u32 rank, u32 dims..., f32 values...},
// then CRC32 over everything after the magic. Save/load round-trips bit-exactly.
void save_rvf(const std::string& path, const StateDict& state);
StateDict load_rvf(const std::string& path);

uint32_t crc32_of(const void* data, size_t len);
uint32_t crc32_of_file(const std::string& path);

template <typename T>
CheckpointEntry to_entry(const Tensor<T>& t) {
  CheckpointEntry e;
  e.shape = t.shape();
  e.data.assign(t.value().begin(), t.value().end());
  return e;
}

template <typename T>
CheckpointEntry to_entry(const Shape& shape, const std::vector<T>& v) {
  CheckpointEntry e;
  e.shape = shape;
  e.data.assign(v.begin(), v.end());
  return e;
}

template <typename T>
void load_into(const StateDict& state, const std::string& name, Tensor<T>& t) {
  auto it = state.find(name);
  if (it == state.end()) throw IoError("checkpoint: missing tensor " + name);
  if (it->second.shape != t.shape())
    throw ShapeError("checkpoint: shape mismatch for " + name + ": stored " +
                     shape_str(it->second.shape) + " vs model " +
                     shape_str(t.shape()));
  auto dst = t.value_mut();
  for (size_t i = 0; i < dst.size(); ++i)
    dst[i] = static_cast<T>(it->second.data[i]);
}

template <typename T>
void load_into(const StateDict& state, const std::string& name,
               std::vector<T>& v) {
  auto it = state.find(name);
  if (it == state.end()) throw IoError("checkpoint: missing tensor " + name);
  if (it->second.data.size() != v.size())
    throw ShapeError("checkpoint: size mismatch for " + name);
  for (size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<T>(it->second.data[i]);
}

}  // namespace rvf
