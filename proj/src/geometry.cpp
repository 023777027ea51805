// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/geometry.h"

#include <algorithm>
#include <cmath>

#include "sxf/error.h"

namespace sxf {

MultiPlaneSpec MultiPlaneSpec::uniform(int count, float gap) {
  MultiPlaneSpec s;
  s.gap = gap;
  s.disparities.resize(count);
  for (int k = 0; k < count; ++k) s.disparities[k] = gap * static_cast<float>(k);
  s.validate();
  return s;
}

void MultiPlaneSpec::validate() const {
  if (disparities.empty())
    raise(ErrorCategory::domain, "multiplane: needs at least one plane");
  if (disparities[0] != 0.0f)
    raise(ErrorCategory::domain, "multiplane: d_1 must be 0 (background plane)");
  for (size_t k = 1; k < disparities.size(); ++k) {
    const float step = disparities[k] - disparities[k - 1];
    if (step <= 0.0f)
      raise(ErrorCategory::domain, "multiplane: anchors must strictly ascend");
    if (std::abs(step - gap) > 1e-4f * std::max(1.0f, gap))
      raise(ErrorCategory::domain, "multiplane: anchor gap must be uniform");
  }
  if (disparities.size() == 1 && gap <= 0.0f)
    raise(ErrorCategory::domain, "multiplane: gap must be positive");
}

Tensor reconstruct_jacobian(const Tensor& planes, const MultiPlaneSpec& spec,
                            float u, PlaneMerge merge) {
  const Shape& s = planes.shape();
  if (s.c != spec.count())
    raise(ErrorCategory::shape, "reconstruct: " + std::to_string(spec.count()) +
                                    " anchors for planes " + s.str());
  std::vector<float> shifts(spec.disparities.size());
  for (size_t k = 0; k < shifts.size(); ++k) shifts[k] = spec.disparities[k] * u;
  Tensor shifted = shift_channels(planes, shifts);
  if (merge == PlaneMerge::max) return channel_max(shifted).values;
  Tensor acc = narrow_channels(shifted, 0, 1);
  for (int k = 1; k < s.c; ++k) acc = add(acc, narrow_channels(shifted, k, 1));
  return acc;
}

Tensor view_flow(const Tensor& jacobian, float u_from, float u_to) {
  if (jacobian.shape().c != 1)
    raise(ErrorCategory::shape,
          "view_flow: expected single-channel disparity, got " +
              jacobian.shape().str());
  return mul(jacobian, -(u_to - u_from));
}

Tensor time_flow(const Tensor& jacobian, TimeBranch branch, float t_from,
                 float t_to) {
  if (jacobian.shape().c != 2)
    raise(ErrorCategory::shape, "time_flow: expected 2-channel Jacobian, got " +
                                    jacobian.shape().str());
  if (branch == TimeBranch::next && t_to < t_from)
    raise(ErrorCategory::domain, "time_flow: next-frame branch cannot warp backward");
  if (branch == TimeBranch::prev && t_to > t_from)
    raise(ErrorCategory::domain, "time_flow: prev-frame branch cannot warp forward");
  return mul(jacobian, t_to - t_from);
}

namespace {

// Constant pixel-index grids for warp targets.
Tensor base_grid_x(int h, int w) {
  std::vector<float> v(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[static_cast<size_t>(y) * w + x] = static_cast<float>(x);
  return Tensor::from_vector({1, 1, h, w}, std::move(v));
}

Tensor base_grid_y(int h, int w) {
  std::vector<float> v(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[static_cast<size_t>(y) * w + x] = static_cast<float>(y);
  return Tensor::from_vector({1, 1, h, w}, std::move(v));
}

}  // namespace

Tensor backward_warp(const Tensor& image, const Tensor& flow) {
  const Shape& is = image.shape();
  const Shape& fs = flow.shape();
  if (fs.h != is.h || fs.w != is.w)
    raise(ErrorCategory::shape, "backward_warp: image " + is.str() +
                                    " vs flow " + fs.str());
  if (fs.c != 1 && fs.c != 2)
    raise(ErrorCategory::shape, "backward_warp: flow must have 1 or 2 channels");
  Tensor sx = add(base_grid_x(is.h, is.w), narrow_channels(flow, 0, 1));
  Tensor sy = fs.c == 2 ? add(base_grid_y(is.h, is.w), narrow_channels(flow, 1, 1))
                        : base_grid_y(is.h, is.w);
  return grid_sample_bilinear(image, sx, sy);
}

Tensor occlusion_mask_from_guidance(const Tensor& j_this, const Tensor& j_other,
                                    float u_this, float u_other, float tol_px) {
  const Shape& s = j_this.shape();
  if (!(s == j_other.shape()))
    raise(ErrorCategory::shape, "occlusion_mask: " + s.str() + " vs " +
                                    j_other.shape().str());
  NoGradGuard ng;
  Tensor flow = view_flow(j_this, u_this, u_other);
  Tensor sampled = backward_warp(j_other, flow);
  std::vector<float> mask(s.numel());
  const float* a = j_this.data();
  const float* b = sampled.data();
  for (size_t i = 0; i < mask.size(); ++i)
    mask[i] = std::abs(a[i] - b[i]) <= tol_px ? 1.0f : 0.0f;
  return Tensor::from_vector(s, std::move(mask));
}

Tensor consistency_weights(const Tensor& flow_fwd, const Tensor& flow_bwd,
                           float sigma) {
  const Shape& s = flow_fwd.shape();
  if (!(s == flow_bwd.shape()))
    raise(ErrorCategory::shape, "consistency_weights: " + s.str() + " vs " +
                                    flow_bwd.shape().str());
  NoGradGuard ng;
  Tensor round_trip = backward_warp(flow_bwd, flow_fwd);
  const size_t plane = static_cast<size_t>(s.h) * s.w;
  std::vector<float> weights(plane);
  const float* f = flow_fwd.data();
  const float* b = round_trip.data();
  for (size_t p = 0; p < plane; ++p) {
    float e2 = 0.0f;
    for (int k = 0; k < s.c; ++k) {
      const float r = f[k * plane + p] + b[k * plane + p];
      e2 += r * r;
    }
    weights[p] = std::exp(-std::sqrt(e2) / sigma);
  }
  return Tensor::from_vector({1, 1, s.h, s.w}, std::move(weights));
}

GuidanceDecomposition decompose_guidance(const Tensor& j_tilde,
                                         const MultiPlaneSpec& spec) {
  spec.validate();
  const Shape& s = j_tilde.shape();
  if (s.c != 1)
    raise(ErrorCategory::shape, "decompose_guidance: expected single channel, got " +
                                    s.str());
  const int K = spec.count();
  const size_t plane = static_cast<size_t>(s.h) * s.w;
  std::vector<float> masks(static_cast<size_t>(K) * plane, 0.0f);
  std::vector<float> planes(static_cast<size_t>(K) * plane, 0.0f);
  const float* j = j_tilde.data();
  const float half = spec.gap * 0.5f;
  for (size_t p = 0; p < plane; ++p) {
    const float v = j[p];
    int k = K - 1;
    for (int c = 0; c < K; ++c) {
      // half-open band [d_k - l/2, d_k + l/2); the top band closes at +inf
      if (v < spec.disparities[c] + half) {
        k = c;
        break;
      }
    }
    masks[static_cast<size_t>(k) * plane + p] = 1.0f;
    planes[static_cast<size_t>(k) * plane + p] = v;
  }
  GuidanceDecomposition out;
  out.masks = Tensor::from_vector({1, K, s.h, s.w}, std::move(masks));
  out.planes = Tensor::from_vector({1, K, s.h, s.w}, std::move(planes));
  return out;
}

namespace {

// Horizontal morphology on a binary map.
std::vector<float> dilate_h(const std::vector<float>& in, int h, int w, int radius) {
  std::vector<float> out(in.size(), 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(w - 1, x + radius);
      float v = 0.0f;
      for (int i = lo; i <= hi; ++i) v = std::max(v, in[static_cast<size_t>(y) * w + i]);
      out[static_cast<size_t>(y) * w + x] = v;
    }
  return out;
}

std::vector<float> erode_h(const std::vector<float>& in, int h, int w, int radius) {
  std::vector<float> out(in.size(), 1.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(w - 1, x + radius);
      float v = 1.0f;
      for (int i = lo; i <= hi; ++i) v = std::min(v, in[static_cast<size_t>(y) * w + i]);
      out[static_cast<size_t>(y) * w + x] = v;
    }
  return out;
}

}  // namespace

Tensor residual_edge_mask(const Tensor& flow, float grad_threshold,
                          int dilate_width, int erode_width) {
  const Shape& s = flow.shape();
  const int h = s.h, w = s.w;
  const float* f = flow.data();  // x displacement = channel 0
  std::vector<float> edges(static_cast<size_t>(h) * w, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) {
      const float g = f[static_cast<size_t>(y) * w + x + 1] -
                      f[static_cast<size_t>(y) * w + x];
      if (std::abs(g) > grad_threshold) {
        edges[static_cast<size_t>(y) * w + x] = 1.0f;
        edges[static_cast<size_t>(y) * w + x + 1] = 1.0f;
      }
    }
  edges = dilate_h(edges, h, w, dilate_width / 2);
  edges = erode_h(edges, h, w, erode_width / 2);
  return Tensor::from_vector({1, 1, h, w}, std::move(edges));
}

Tensor combine_residual_mask(const Tensor& weights, const Tensor& mask) {
  const Shape& s = weights.shape();
  if (!(s == mask.shape()))
    raise(ErrorCategory::shape, "combine_residual_mask: " + s.str() + " vs " +
                                    mask.shape().str());
  std::vector<float> out(s.numel());
  const float* wv = weights.data();
  const float* mv = mask.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = wv[i] * (1.0f - mv[i]);
  return Tensor::from_vector(s, std::move(out));
}

}  // namespace sxf
