// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "refkernels.h"

#include <algorithm>
#include <cmath>

namespace sxf::ref {

void conv2d(const float* in, const float* weight, const float* bias, float* out,
            int in_channels, int out_channels, int in_h, int in_w, int kernel_h,
            int kernel_w, int stride, int pad) {
  const int oh = (in_h + 2 * pad - kernel_h) / stride + 1;
  const int ow = (in_w + 2 * pad - kernel_w) / stride + 1;
  for (int oc = 0; oc < out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        float acc = bias ? bias[oc] : 0.0f;
        for (int ic = 0; ic < in_channels; ++ic)
          for (int ky = 0; ky < kernel_h; ++ky)
            for (int kx = 0; kx < kernel_w; ++kx) {
              const int iy = oy * stride + ky - pad;
              const int ix = ox * stride + kx - pad;
              if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) continue;
              acc += weight[((oc * in_channels + ic) * kernel_h + ky) * kernel_w + kx] *
                     in[(ic * in_h + iy) * in_w + ix];
            }
        out[(oc * oh + oy) * ow + ox] = acc;
      }
}

void upsample2x(const float* in, float* out, int c, int h, int w) {
  const int oh = 2 * h, ow = 2 * w;
  for (int k = 0; k < c; ++k)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const float sy = 0.5f * (oy + 0.5f) - 0.5f;
        const float sx = 0.5f * (ox + 0.5f) - 0.5f;
        const int y0 = static_cast<int>(std::floor(sy));
        const int x0 = static_cast<int>(std::floor(sx));
        const float fy = sy - y0;
        const float fx = sx - x0;
        const int y0c = std::clamp(y0, 0, h - 1), y1c = std::clamp(y0 + 1, 0, h - 1);
        const int x0c = std::clamp(x0, 0, w - 1), x1c = std::clamp(x0 + 1, 0, w - 1);
        const float v00 = in[(k * h + y0c) * w + x0c];
        const float v01 = in[(k * h + y0c) * w + x1c];
        const float v10 = in[(k * h + y1c) * w + x0c];
        const float v11 = in[(k * h + y1c) * w + x1c];
        out[(k * oh + oy) * ow + ox] = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                       fy * ((1 - fx) * v10 + fx * v11);
      }
}

void grid_sample(const float* src, const float* sample_x, const float* sample_y,
                 float* out, int c, int sh, int sw, int oh, int ow) {
  for (int k = 0; k < c; ++k)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const float x = std::clamp(sample_x[oy * ow + ox], 0.0f, static_cast<float>(sw - 1));
        const float y = std::clamp(sample_y[oy * ow + ox], 0.0f, static_cast<float>(sh - 1));
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const float fx = x - x0;
        const float fy = y - y0;
        const int x1 = std::min(x0 + 1, sw - 1);
        const int y1 = std::min(y0 + 1, sh - 1);
        const float v00 = src[(k * sh + y0) * sw + x0];
        const float v01 = src[(k * sh + y0) * sw + x1];
        const float v10 = src[(k * sh + y1) * sw + x0];
        const float v11 = src[(k * sh + y1) * sw + x1];
        out[(k * oh + oy) * ow + ox] = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                       fy * ((1 - fx) * v10 + fx * v11);
      }
}

}  // namespace sxf::ref
