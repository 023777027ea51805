// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "sxf/coords.h"
#include "sxf/tensor.h"

namespace sxf {

// Plane anchors d_1 < ... < d_K with a uniform gap; d_1 = 0 holds the
// background. Plane contents live at canonical (center-view) positions and
// are shifted by d_k * u at reconstruction.
struct MultiPlaneSpec {
  std::vector<float> disparities;
  float gap = 0.0f;

  static MultiPlaneSpec uniform(int count, float gap);
  int count() const { return static_cast<int>(disparities.size()); }
  void validate() const;
};

enum class PlaneMerge { max, sum };

// Shift every plane by d_k * u, then merge per pixel. planes: (1, K, H, W),
// result (1, 1, H, W); differentiable w.r.t. the plane values.
Tensor reconstruct_jacobian(const Tensor& planes, const MultiPlaneSpec& spec,
                            float u, PlaneMerge merge = PlaneMerge::max);

// Horizontal displacement map for a backward warp: dx = -(u_to - u_from) * J.
// J holds non-negative disparity magnitudes; the epipolar sign is applied
// here, once.
Tensor view_flow(const Tensor& jacobian, float u_from, float u_to);

// Time displacement: (t_to - t_from) * J, J signed, 2 channels (x, y). The
// branch must match the warp direction: J_a only moves forward in time, J_b
// only backward.
Tensor time_flow(const Tensor& jacobian, TimeBranch branch, float t_from,
                 float t_to);

// Sample image at p + flow(p); flow is (1,1,H,W) horizontal or (1,2,H,W).
Tensor backward_warp(const Tensor& image, const Tensor& flow);

// Left-right consistency: pixel p of "this" view is visible iff the other
// view's disparity, sampled where p lands, agrees within tol_px. Binary mask,
// 0 = occluded. Inputs are guidance maps; no gradients flow.
Tensor occlusion_mask_from_guidance(const Tensor& j_this, const Tensor& j_other,
                                    float u_this, float u_other,
                                    float tol_px = 1.0f);

// Forward-backward round-trip weights: w = exp(-|fwd(p) + bwd(p+fwd(p))| / sigma).
Tensor consistency_weights(const Tensor& flow_fwd, const Tensor& flow_bwd,
                           float sigma = 1.0f);

struct GuidanceDecomposition {
  Tensor planes;  // (1, K, H, W): guidance masked per band
  Tensor masks;   // (1, K, H, W): binary, half-open bands, top band closed above
};

// Band k selects guidance in [d_k - l/2, d_k + l/2); masks partition the image.
GuidanceDecomposition decompose_guidance(const Tensor& j_tilde,
                                         const MultiPlaneSpec& spec);

// Flags horizontal stretch regions: threshold |d flow_x / dx|, dilate with a
// 1x7 kernel, erode with 1x3 (net expansion). Binary (1,1,H,W).
Tensor residual_edge_mask(const Tensor& flow, float grad_threshold = 0.5f,
                          int dilate_width = 7, int erode_width = 3);

// Zeroes weights wherever the mask flags a stretch region.
Tensor combine_residual_mask(const Tensor& weights, const Tensor& mask);

}  // namespace sxf
