// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

// Dense image kernels over packed CHW float buffers (batch handled by the
// caller; everything here is one image). All kernels are OpenMP-parallel and
// bit-deterministic for any thread count: each output element is produced by
// exactly one thread with a fixed evaluation order, and reductions use
// fixed-shape lane blocks combined in index order.

namespace sxf::kernels {

void set_max_threads(int n);
int max_threads();

// ---- conv2d (cross-correlation), zero padding -----------------------------

struct Conv2dDims {
  int in_channels;
  int out_channels;
  int in_h, in_w;
  int kernel_h, kernel_w;
  int stride;
  int pad;
  int out_h, out_w;
};

void conv2d_forward(const float* in, const float* weight, const float* bias,
                    float* out, const Conv2dDims& d);
// gin must be zero-filled by the caller; the kernel accumulates.
void conv2d_backward_input(const float* weight, const float* gout, float* gin,
                           const Conv2dDims& d);
void conv2d_backward_weight(const float* in, const float* gout, float* gweight,
                            const Conv2dDims& d);
void conv2d_backward_bias(const float* gout, float* gbias, const Conv2dDims& d);

// ---- bilinear 2x upsampling (align_corners = false) ------------------------

void upsample2x_forward(const float* in, float* out, int c, int h, int w);
// gin accumulated (caller zero-fills).
void upsample2x_backward(const float* gout, float* gin, int c, int h, int w);

// ---- bilinear grid sampling, absolute pixel coords, clamp-to-edge ----------

// src: c x sh x sw; sample_x/sample_y: oh x ow; out: c x oh x ow.
void grid_sample_forward(const float* src, const float* sample_x,
                         const float* sample_y, float* out, int c, int sh,
                         int sw, int oh, int ow);
void grid_sample_backward_src(const float* gout, const float* sample_x,
                              const float* sample_y, float* gsrc, int c, int sh,
                              int sw, int oh, int ow);
// Coordinate gradients; gsx/gsy accumulated (caller zero-fills). Samples that
// were clamped receive zero gradient in the clamped direction.
void grid_sample_backward_coords(const float* src, const float* gout,
                                 const float* sample_x, const float* sample_y,
                                 float* gsx, float* gsy, int c, int sh, int sw,
                                 int oh, int ow);

// ---- per-channel horizontal shift, linear interp, edge replication ---------

// out[k](x) = in[k](x + shift[k]); positive shift moves content left.
void shift_channels_forward(const float* in, const float* shifts, float* out,
                            int c, int h, int w);
void shift_channels_backward(const float* gout, const float* shifts, float* gin,
                             int c, int h, int w);

// ---- deterministic reductions ----------------------------------------------

// Fixed-order blocked summation, double accumulators. Identical result for
// any thread count.
double block_sum(const float* x, size_t n);
double block_sum_abs(const float* x, size_t n);
double block_sum_mul(const float* x, const float* y, size_t n);
double block_sum_abs_mul(const float* x, const float* y, size_t n);

}  // namespace sxf::kernels
