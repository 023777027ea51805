// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Serial reference kernels. Straight nested loops, no parallelism, no
// blocking: the independent oracle the fast kernels are tested against, and
// the baseline for the kernel benchmark.

namespace sxf::ref {

// out[oc][oy][ox] = bias[oc] + sum_{ic,ky,kx} w[oc][ic][ky][kx] *
//                   in[ic][oy*stride+ky-pad][ox*stride+kx-pad]  (zero padding)
void conv2d(const float* in, const float* weight, const float* bias, float* out,
            int in_channels, int out_channels, int in_h, int in_w, int kernel_h,
            int kernel_w, int stride, int pad);

void upsample2x(const float* in, float* out, int c, int h, int w);

void grid_sample(const float* src, const float* sample_x, const float* sample_y,
                 float* out, int c, int sh, int sw, int oh, int ow);

}  // namespace sxf::ref
