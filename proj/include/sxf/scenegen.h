// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "sxf/coords.h"
#include "sxf/tensor.h"

namespace sxf {

// Trajectory knot: integer frame index, center position in pixels at the
// canonical (u = 0) view. Piecewise-linear between knots, so adjacent-frame
// flows are exact constants per segment.
struct Knot {
  int frame = 0;
  float x = 0.0f;
  float y = 0.0f;
};

enum class TextureKind { noise, shapes };

struct LayerSpec {
  std::string name;
  int z_order = 0;          // higher occludes lower
  float disparity = 0.0f;   // pixels, >= 0; drawn at x_c(t) - disparity * u
  int tex_w = 0, tex_h = 0;
  uint64_t texture_seed = 0;
  TextureKind kind = TextureKind::noise;
  bool is_background = false;
  std::vector<Knot> knots;  // ascending frame indices

  void position(float frame_coord, float& x, float& y) const;
  // Velocity (px per frame) on the segment containing [frame, frame+dir].
  void segment_velocity(int frame, int dir, float& vx, float& vy) const;
};

struct SceneSpec {
  int width = 0, height = 0, n_frames = 0;
  uint64_t seed = 0;
  std::string preset = "custom";
  int plane_count = 6;     // recommended anchors: k * plane_gap
  float plane_gap = 0.0f;
  float gain_jitter = 0.0f;  // per-frame global gain amplitude; 0 = off
  std::vector<LayerSpec> layers;

  float delta() const { return 1.0f / static_cast<float>(n_frames - 1); }
  float frame_time(int i) const { return static_cast<float>(i) * delta(); }
  void validate() const;
};

// Deterministic rasterizer + analytic oracle for a scene. Rendering
// composites layers back-to-front with premultiplied-alpha bilinear
// sampling, so integer layer offsets reproduce texels exactly.
class SceneRenderer {
 public:
  explicit SceneRenderer(const SceneSpec& spec);

  Tensor render(float u, float t) const;              // (1,3,H,W) in [0,1]
  Tensor disparity_map(float u, float t) const;       // (1,1,H,W)
  Tensor flow_map(float u, int frame, TimeBranch branch) const;  // (1,2,H,W), px per unit t
  std::vector<int> layer_ids(float u, float t) const;  // top layer per pixel, -1 = none
  float frame_gain(int i) const;                       // 1 unless gain_jitter > 0

  const SceneSpec& spec() const { return spec_; }

 private:
  struct Raster {
    int w = 0, h = 0;
    std::vector<float> premul;  // 3 planes, premultiplied by alpha
    std::vector<float> alpha;
  };
  SceneSpec spec_;
  std::vector<Raster> rasters_;
  std::vector<int> draw_order_;  // layer indices sorted by z
  std::vector<float> gains_;
};

struct SceneBundle {
  SceneSpec spec;
  // Indexed [frame][view], view 0 = left (u = -0.5), 1 = right (+0.5).
  std::vector<std::array<Tensor, 2>> frames;
  std::vector<std::array<Tensor, 2>> guidance_disparity;
  std::vector<std::array<Tensor, 2>> occlusion;  // 1 = visible in the other view
  std::vector<std::array<Tensor, 2>> flow_next;  // defined for i < N-1
  std::vector<std::array<Tensor, 2>> flow_prev;  // defined for i > 0

  static constexpr float kLeftU = -0.5f;
  static constexpr float kRightU = 0.5f;
  static float view_u(int v) { return v == 0 ? kLeftU : kRightU; }

  float delta() const { return spec.delta(); }
  float frame_time(int i) const { return spec.frame_time(i); }
};

// Renders all frames at u = +-0.5 and computes the oracle guidance:
// disparities, adjacent-frame flows and exact-visibility occlusion masks.
SceneBundle emit_bundle(const SceneSpec& spec);

void save_bundle(const SceneBundle& bundle, const std::string& dir);
SceneBundle load_bundle(const std::string& dir);

void write_manifest(const SceneSpec& spec, const std::string& path);
SceneSpec read_manifest(const std::string& path);

// Named acceptance fixtures. frames/height/width of 0 keep preset defaults.
SceneSpec preset(const std::string& name, uint64_t seed, int frames = 0,
                 int height = 0, int width = 0);

// Scene family for blending-network training; scene i derives its seed from
// (seed, i). Sizes are divisible by 32 so the UNet accepts them directly.
std::vector<SceneSpec> blender_corpus(uint64_t seed, int count, int size = 64);

}  // namespace sxf
