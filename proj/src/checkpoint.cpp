// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/checkpoint.h"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "sxf/error.h"

namespace sxf {

Digest sha256(const std::string& data) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

std::string digest_hex(const Digest& d) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (uint8_t b : d) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

void Checkpoint::put(const std::string& name, const Tensor& t) {
  put_values(name, t.shape(), std::vector<float>(t.data(), t.data() + t.numel()));
}

void Checkpoint::put_values(const std::string& name, Shape shape,
                            std::vector<float> values) {
  if (values.size() != shape.numel())
    raise(ErrorCategory::shape, "checkpoint: " + name + " has " +
                                    std::to_string(values.size()) +
                                    " values for shape " + shape.str());
  for (auto& e : entries_)
    if (e.name == name) {
      e.shape = shape;
      e.values = std::move(values);
      return;
    }
  entries_.push_back({name, shape, std::move(values)});
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const Checkpoint::Entry& Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  raise(ErrorCategory::format, "checkpoint: missing entry '" + name + "'");
}

Tensor Checkpoint::get(const std::string& name) const {
  const Entry& e = find(name);
  return Tensor::from_vector(e.shape, e.values);
}

float Checkpoint::get_scalar(const std::string& name) const {
  const Entry& e = find(name);
  if (e.values.size() != 1)
    raise(ErrorCategory::format, "checkpoint: '" + name + "' is not scalar");
  return e.values[0];
}

std::vector<float> Checkpoint::get_values(const std::string& name) const {
  return find(name).values;
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

namespace {

template <typename T>
void write_raw(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) raise(ErrorCategory::format, "checkpoint: truncated file");
  return v;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) raise(ErrorCategory::io, "checkpoint: cannot write " + tmp);
    os.write("SXF1", 4);
    write_raw<uint16_t>(os, kVersion);
    os.write(reinterpret_cast<const char*>(digest.data()), digest.size());
    write_raw<uint32_t>(os, static_cast<uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      write_raw<uint32_t>(os, static_cast<uint32_t>(e.name.size()));
      os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      write_raw<uint32_t>(os, 4);
      write_raw<uint32_t>(os, static_cast<uint32_t>(e.shape.n));
      write_raw<uint32_t>(os, static_cast<uint32_t>(e.shape.c));
      write_raw<uint32_t>(os, static_cast<uint32_t>(e.shape.h));
      write_raw<uint32_t>(os, static_cast<uint32_t>(e.shape.w));
      os.write(reinterpret_cast<const char*>(e.values.data()),
               static_cast<std::streamsize>(e.values.size() * sizeof(float)));
    }
    if (!os) raise(ErrorCategory::io, "checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    raise(ErrorCategory::io, "checkpoint: cannot rename " + tmp + " to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(ErrorCategory::io, "checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SXF1", 4) != 0)
    raise(ErrorCategory::format, "checkpoint: bad magic in " + path);
  const uint16_t version = read_raw<uint16_t>(is);
  if (version != kVersion)
    raise(ErrorCategory::format, "checkpoint: unsupported version " +
                                     std::to_string(version) + " in " + path);
  Checkpoint ck;
  is.read(reinterpret_cast<char*>(ck.digest.data()), ck.digest.size());
  const uint32_t count = read_raw<uint32_t>(is);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_raw<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t rank = read_raw<uint32_t>(is);
    if (rank != 4)
      raise(ErrorCategory::format, "checkpoint: entry '" + name +
                                       "' has unsupported rank " +
                                       std::to_string(rank));
    Shape s;
    s.n = static_cast<int>(read_raw<uint32_t>(is));
    s.c = static_cast<int>(read_raw<uint32_t>(is));
    s.h = static_cast<int>(read_raw<uint32_t>(is));
    s.w = static_cast<int>(read_raw<uint32_t>(is));
    std::vector<float> values(s.numel());
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!is) raise(ErrorCategory::format, "checkpoint: truncated entry '" + name + "'");
    ck.entries_.push_back({std::move(name), s, std::move(values)});
  }
  return ck;
}

}  // namespace sxf
