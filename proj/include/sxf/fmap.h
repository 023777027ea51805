// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "sxf/tensor.h"

namespace sxf {

// Float-map container for flows, disparities and masks. Layout
// (little-endian): "FMAP" | u16 version | u16 channels | u32 height |
// u32 width | row-major f32 planes, channel-major.
Tensor read_fmap(const std::string& path);
void write_fmap(const std::string& path, const Tensor& map);  // atomic

}  // namespace sxf
