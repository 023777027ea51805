// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/fmap.h"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "sxf/error.h"

namespace sxf {

namespace {
constexpr uint16_t kVersion = 1;
}

Tensor read_fmap(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(ErrorCategory::io, "fmap: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FMAP", 4) != 0)
    raise(ErrorCategory::format, "fmap: bad magic in " + path);
  uint16_t version = 0, channels = 0;
  uint32_t height = 0, width = 0;
  is.read(reinterpret_cast<char*>(&version), 2);
  is.read(reinterpret_cast<char*>(&channels), 2);
  is.read(reinterpret_cast<char*>(&height), 4);
  is.read(reinterpret_cast<char*>(&width), 4);
  if (!is || version != kVersion)
    raise(ErrorCategory::format, "fmap: unsupported header in " + path);
  if (channels == 0 || height == 0 || width == 0)
    raise(ErrorCategory::format, "fmap: degenerate extents in " + path);
  Shape s{1, channels, static_cast<int>(height), static_cast<int>(width)};
  std::vector<float> data(s.numel());
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!is) raise(ErrorCategory::format, "fmap: truncated data in " + path);
  return Tensor::from_vector(s, std::move(data));
}

void write_fmap(const std::string& path, const Tensor& map) {
  const Shape& s = map.shape();
  if (s.n != 1)
    raise(ErrorCategory::shape, "fmap: map must have batch 1, got " + s.str());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) raise(ErrorCategory::io, "fmap: cannot write " + tmp);
    os.write("FMAP", 4);
    const uint16_t version = kVersion;
    const uint16_t channels = static_cast<uint16_t>(s.c);
    const uint32_t height = static_cast<uint32_t>(s.h);
    const uint32_t width = static_cast<uint32_t>(s.w);
    os.write(reinterpret_cast<const char*>(&version), 2);
    os.write(reinterpret_cast<const char*>(&channels), 2);
    os.write(reinterpret_cast<const char*>(&height), 4);
    os.write(reinterpret_cast<const char*>(&width), 4);
    os.write(reinterpret_cast<const char*>(map.data()),
             static_cast<std::streamsize>(map.numel() * sizeof(float)));
    if (!os) raise(ErrorCategory::io, "fmap: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    raise(ErrorCategory::io, "fmap: cannot rename " + tmp + " to " + path);
}

}  // namespace sxf
