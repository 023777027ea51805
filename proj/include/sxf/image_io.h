// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "sxf/tensor.h"

namespace sxf {

// 8-bit RGB PNG -> (1, 3, H, W) in [0, 1]. Grayscale and RGBA inputs are
// expanded / stripped to RGB.
Tensor read_png(const std::string& path);

// Clamps to [0, 1], quantizes to 8-bit RGB, writes atomically
// (write-then-rename). Input must be (1, 3, H, W) or (1, 1, H, W).
void write_png(const std::string& path, const Tensor& image);

}  // namespace sxf
