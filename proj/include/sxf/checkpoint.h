// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "sxf/tensor.h"

namespace sxf {

using Digest = std::array<uint8_t, 32>;

Digest sha256(const std::string& data);
std::string digest_hex(const Digest& d);

// Ordered named-tensor container with a config digest in the header.
// On-disk layout (little-endian):
//   "SXF1" | u16 version | 32-byte digest | u32 count |
//   per entry: u32 name_len | name | u32 rank | u32 extents[rank] | f32 values
class Checkpoint {
 public:
  static constexpr uint16_t kVersion = 1;

  Digest digest{};

  void put(const std::string& name, const Tensor& t);
  void put_values(const std::string& name, Shape shape, std::vector<float> values);
  bool has(const std::string& name) const;
  // Returns a fresh leaf tensor (no graph state).
  Tensor get(const std::string& name) const;
  float get_scalar(const std::string& name) const;
  std::vector<float> get_values(const std::string& name) const;
  std::vector<std::string> names() const;
  size_t size() const { return entries_.size(); }

  // Atomic write-then-rename.
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<float> values;
  };
  const Entry& find(const std::string& name) const;
  std::vector<Entry> entries_;
};

}  // namespace sxf
