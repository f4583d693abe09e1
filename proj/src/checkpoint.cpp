#include "ravenforge/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "ravenforge/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "RVF1 containers are little-endian; big-endian hosts unsupported");

namespace rvf {

namespace {

constexpr char kMagic[4] = {'R', 'V', 'F', '1'};

void put_u32(std::string& buf, uint32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 4);
}

uint32_t get_u32(const std::string& buf, size_t& at) {
  if (at + 4 > buf.size()) throw IoError("checkpoint: truncated container");
  uint32_t v;
  std::memcpy(&v, buf.data() + at, 4);
  at += 4;
  return v;
}

}  // namespace

uint32_t crc32_of(const void* data, size_t len) {
  return static_cast<uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

uint32_t crc32_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  uint32_t crc = static_cast<uint32_t>(::crc32(0L, nullptr, 0));
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    crc = static_cast<uint32_t>(::crc32(crc, reinterpret_cast<Bytef*>(buf),
                                        static_cast<uInt>(in.gcount())));
  }
  return crc;
}

void save_rvf(const std::string& path, const StateDict& state) {
  std::string payload;
  put_u32(payload, static_cast<uint32_t>(state.size()));
  for (const auto& [name, entry] : state) {
    put_u32(payload, static_cast<uint32_t>(name.size()));
    payload.append(name);
    put_u32(payload, static_cast<uint32_t>(entry.shape.size()));
    int64_t n = 1;
    for (int d : entry.shape) {
      if (d <= 0) throw IoError("checkpoint: non-positive dimension in " + name);
      put_u32(payload, static_cast<uint32_t>(d));
      n *= d;
    }
    if (n != static_cast<int64_t>(entry.data.size()))
      throw IoError("checkpoint: data length mismatch in " + name);
    payload.append(reinterpret_cast<const char*>(entry.data.data()),
                   entry.data.size() * sizeof(float));
  }
  const uint32_t crc = crc32_of(payload.data(), payload.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, 4);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(&crc), 4);
  if (!out) throw IoError("write failed for " + path);
}

StateDict load_rvf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string all((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (all.size() < 12 || std::memcmp(all.data(), kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const std::string payload = all.substr(4, all.size() - 8);
  uint32_t stored_crc;
  std::memcpy(&stored_crc, all.data() + all.size() - 4, 4);
  if (crc32_of(payload.data(), payload.size()) != stored_crc)
    throw IoError("checkpoint: CRC mismatch in " + path);

  StateDict state;
  size_t at = 0;
  const uint32_t count = get_u32(payload, at);
  for (uint32_t r = 0; r < count; ++r) {
    const uint32_t name_len = get_u32(payload, at);
    if (at + name_len > payload.size())
      throw IoError("checkpoint: truncated record name");
    std::string name = payload.substr(at, name_len);
    at += name_len;
    const uint32_t rank = get_u32(payload, at);
    CheckpointEntry e;
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      const uint32_t dim = get_u32(payload, at);
      e.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    if (at + n * sizeof(float) > payload.size())
      throw IoError("checkpoint: truncated record data");
    e.data.resize(static_cast<size_t>(n));
    std::memcpy(e.data.data(), payload.data() + at, n * sizeof(float));
    at += n * sizeof(float);
    state.emplace(std::move(name), std::move(e));
  }
  return state;
}

}  // namespace rvf
