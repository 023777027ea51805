// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/scenegen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sxf/error.h"
#include "sxf/fmap.h"
#include "sxf/geometry.h"
#include "sxf/image_io.h"
#include "sxf/rng.h"

namespace fs = std::filesystem;

namespace sxf {

// ---- layer trajectory ---------------------------------------------------

void LayerSpec::position(float frame_coord, float& x, float& y) const {
  if (knots.empty()) raise(ErrorCategory::domain, "layer '" + name + "' has no knots");
  if (frame_coord <= static_cast<float>(knots.front().frame)) {
    x = knots.front().x;
    y = knots.front().y;
    return;
  }
  if (frame_coord >= static_cast<float>(knots.back().frame)) {
    x = knots.back().x;
    y = knots.back().y;
    return;
  }
  for (size_t k = 1; k < knots.size(); ++k) {
    const float f0 = static_cast<float>(knots[k - 1].frame);
    const float f1 = static_cast<float>(knots[k].frame);
    if (frame_coord <= f1) {
      const float a = (frame_coord - f0) / (f1 - f0);
      x = knots[k - 1].x + a * (knots[k].x - knots[k - 1].x);
      y = knots[k - 1].y + a * (knots[k].y - knots[k - 1].y);
      return;
    }
  }
  x = knots.back().x;
  y = knots.back().y;
}

void LayerSpec::segment_velocity(int frame, int dir, float& vx, float& vy) const {
  const float f0 = static_cast<float>(frame);
  const float f1 = static_cast<float>(frame + dir);
  float x0, y0, x1, y1;
  position(f0, x0, y0);
  position(f1, x1, y1);
  vx = (x1 - x0) * static_cast<float>(dir);
  vy = (y1 - y0) * static_cast<float>(dir);
}

void SceneSpec::validate() const {
  if (width <= 0 || height <= 0)
    raise(ErrorCategory::domain, "scene: extents must be positive");
  if (n_frames < 2) raise(ErrorCategory::domain, "scene: needs at least 2 frames");
  if (layers.empty()) raise(ErrorCategory::domain, "scene: needs at least one layer");
  for (const auto& l : layers) {
    if (l.disparity < 0.0f)
      raise(ErrorCategory::domain, "scene: layer '" + l.name + "' has negative disparity");
    if (l.tex_w <= 0 || l.tex_h <= 0)
      raise(ErrorCategory::domain, "scene: layer '" + l.name + "' has empty texture");
    for (size_t k = 1; k < l.knots.size(); ++k)
      if (l.knots[k].frame <= l.knots[k - 1].frame)
        raise(ErrorCategory::domain, "scene: layer '" + l.name + "' knots not ascending");
  }
}

// ---- texture rasterization ------------------------------------------------

namespace {

// Smooth value noise: coarse random color grid, bilinearly upsampled.
void add_value_noise(std::vector<float>& rgb, int w, int h, int cell, float lo,
                     float hi, float amplitude, Rng& rng) {
  const int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<float> grid(static_cast<size_t>(gw) * gh * 3);
  for (auto& v : grid) v = rng.uniform(lo, hi);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float gx = static_cast<float>(x) / cell;
        const float gy = static_cast<float>(y) / cell;
        const int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
        const float fx = gx - x0, fy = gy - y0;
        auto at = [&](int yy, int xx) {
          return grid[(static_cast<size_t>(c) * gh + yy) * gw + xx];
        };
        const float v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                        fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
        rgb[(static_cast<size_t>(c) * h + y) * w + x] += amplitude * v;
      }
}

}  // namespace

SceneRenderer::SceneRenderer(const SceneSpec& spec) : spec_(spec) {
  spec_.validate();
  rasters_.resize(spec_.layers.size());
  for (size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& ls = spec_.layers[i];
    Raster& r = rasters_[i];
    r.w = ls.tex_w;
    r.h = ls.tex_h;
    const size_t plane = static_cast<size_t>(r.w) * r.h;

    Rng rng(ls.texture_seed, 0x746578ULL);
    std::vector<float> rgb(3 * plane, 0.0f);
    add_value_noise(rgb, r.w, r.h, ls.is_background ? 10 : 6, 0.15f, 0.85f, 1.0f, rng);
    add_value_noise(rgb, r.w, r.h, 3, -0.12f, 0.12f, 1.0f, rng);
    if (ls.kind == TextureKind::shapes) {
      const int count = 2 + rng.uniform_int(3);
      for (int s = 0; s < count; ++s) {
        const int sw = 3 + rng.uniform_int(std::max(1, r.w / 3));
        const int sh = 3 + rng.uniform_int(std::max(1, r.h / 3));
        const int sx = rng.uniform_int(std::max(1, r.w - sw));
        const int sy = rng.uniform_int(std::max(1, r.h - sh));
        const bool ellipse = rng.uniform() < 0.5f;
        float col[3] = {rng.uniform(0.1f, 0.9f), rng.uniform(0.1f, 0.9f),
                        rng.uniform(0.1f, 0.9f)};
        for (int y = sy; y < sy + sh; ++y)
          for (int x = sx; x < sx + sw; ++x) {
            if (ellipse) {
              const float dx = (x - (sx + sw * 0.5f)) / (sw * 0.5f);
              const float dy = (y - (sy + sh * 0.5f)) / (sh * 0.5f);
              if (dx * dx + dy * dy > 1.0f) continue;
            }
            for (int c = 0; c < 3; ++c)
              rgb[(static_cast<size_t>(c) * r.h + y) * r.w + x] =
                  0.3f * rgb[(static_cast<size_t>(c) * r.h + y) * r.w + x] +
                  0.7f * col[c];
          }
      }
    }
    for (auto& v : rgb) v = std::clamp(v, 0.02f, 0.98f);

    r.alpha.assign(plane, 1.0f);
    if (!ls.is_background) {
      // binary elliptical footprint inscribed in the patch
      const float cx = (r.w - 1) * 0.5f, cy = (r.h - 1) * 0.5f;
      const float rx = r.w * 0.5f, ry = r.h * 0.5f;
      for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) {
          const float dx = (x - cx) / rx, dy = (y - cy) / ry;
          r.alpha[static_cast<size_t>(y) * r.w + x] =
              dx * dx + dy * dy <= 1.0f ? 1.0f : 0.0f;
        }
    }
    r.premul.resize(3 * plane);
    for (int c = 0; c < 3; ++c)
      for (size_t p = 0; p < plane; ++p)
        r.premul[c * plane + p] = rgb[c * plane + p] * r.alpha[p];
  }

  draw_order_.resize(spec_.layers.size());
  for (size_t i = 0; i < draw_order_.size(); ++i) draw_order_[i] = static_cast<int>(i);
  std::stable_sort(draw_order_.begin(), draw_order_.end(), [&](int a, int b) {
    return spec_.layers[a].z_order < spec_.layers[b].z_order;
  });

  gains_.assign(spec_.n_frames, 1.0f);
  if (spec_.gain_jitter > 0.0f) {
    Rng rng(spec_.seed, 0x6761696eULL);
    for (auto& g : gains_) g = 1.0f + spec_.gain_jitter * (rng.uniform() - 0.5f) * 2.0f;
  }
}

float SceneRenderer::frame_gain(int i) const { return gains_.at(i); }

namespace {

struct LayerSample {
  float r, g, b, a;
};

// Premultiplied bilinear sample; outside the patch everything is zero.
inline LayerSample sample_raster(const std::vector<float>& premul,
                                 const std::vector<float>& alpha, int tw, int th,
                                 float x, float y) {
  LayerSample s{0, 0, 0, 0};
  if (x <= -1.0f || y <= -1.0f || x >= static_cast<float>(tw) ||
      y >= static_cast<float>(th))
    return s;
  const float fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const float ax = x - fx, ay = y - fy;
  const size_t plane = static_cast<size_t>(tw) * th;
  auto tap = [&](int yy, int xx, float wgt, LayerSample& acc) {
    if (xx < 0 || yy < 0 || xx >= tw || yy >= th || wgt == 0.0f) return;
    const size_t p = static_cast<size_t>(yy) * tw + xx;
    acc.r += wgt * premul[p];
    acc.g += wgt * premul[plane + p];
    acc.b += wgt * premul[2 * plane + p];
    acc.a += wgt * alpha[p];
  };
  tap(y0, x0, (1 - ay) * (1 - ax), s);
  tap(y0, x0 + 1, (1 - ay) * ax, s);
  tap(y0 + 1, x0, ay * (1 - ax), s);
  tap(y0 + 1, x0 + 1, ay * ax, s);
  return s;
}

}  // namespace

Tensor SceneRenderer::render(float u, float t) const {
  const int W = spec_.width, H = spec_.height;
  const size_t plane = static_cast<size_t>(H) * W;
  std::vector<float> out(3 * plane, 0.0f);
  const float f = t * static_cast<float>(spec_.n_frames - 1);

  for (int idx : draw_order_) {
    const LayerSpec& ls = spec_.layers[idx];
    const Raster& r = rasters_[idx];
    float cx, cy;
    ls.position(f, cx, cy);
    const float ox = cx - ls.disparity * u - static_cast<float>(r.w) * 0.5f;
    const float oy = cy - static_cast<float>(r.h) * 0.5f;
    const int x_lo = std::max(0, static_cast<int>(std::floor(ox)) - 1);
    const int x_hi = std::min(W, static_cast<int>(std::ceil(ox)) + r.w + 1);
    const int y_lo = std::max(0, static_cast<int>(std::floor(oy)) - 1);
    const int y_hi = std::min(H, static_cast<int>(std::ceil(oy)) + r.h + 1);
    for (int y = y_lo; y < y_hi; ++y)
      for (int x = x_lo; x < x_hi; ++x) {
        const LayerSample s = sample_raster(r.premul, r.alpha, r.w, r.h,
                                            static_cast<float>(x) - ox,
                                            static_cast<float>(y) - oy);
        if (s.a == 0.0f) continue;
        const size_t p = static_cast<size_t>(y) * W + x;
        out[p] = s.r + (1.0f - s.a) * out[p];
        out[plane + p] = s.g + (1.0f - s.a) * out[plane + p];
        out[2 * plane + p] = s.b + (1.0f - s.a) * out[2 * plane + p];
      }
  }
  return Tensor::from_vector({1, 3, H, W}, std::move(out));
}

std::vector<int> SceneRenderer::layer_ids(float u, float t) const {
  const int W = spec_.width, H = spec_.height;
  std::vector<int> ids(static_cast<size_t>(H) * W, -1);
  const float f = t * static_cast<float>(spec_.n_frames - 1);
  // front-to-back: first alpha >= 0.5 wins
  for (auto it = draw_order_.rbegin(); it != draw_order_.rend(); ++it) {
    const int idx = *it;
    const LayerSpec& ls = spec_.layers[idx];
    const Raster& r = rasters_[idx];
    float cx, cy;
    ls.position(f, cx, cy);
    const float ox = cx - ls.disparity * u - static_cast<float>(r.w) * 0.5f;
    const float oy = cy - static_cast<float>(r.h) * 0.5f;
    const int x_lo = std::max(0, static_cast<int>(std::floor(ox)));
    const int x_hi = std::min(W, static_cast<int>(std::ceil(ox)) + r.w + 1);
    const int y_lo = std::max(0, static_cast<int>(std::floor(oy)));
    const int y_hi = std::min(H, static_cast<int>(std::ceil(oy)) + r.h + 1);
    for (int y = y_lo; y < y_hi; ++y)
      for (int x = x_lo; x < x_hi; ++x) {
        const size_t p = static_cast<size_t>(y) * W + x;
        if (ids[p] >= 0) continue;
        const LayerSample s = sample_raster(r.premul, r.alpha, r.w, r.h,
                                            static_cast<float>(x) - ox,
                                            static_cast<float>(y) - oy);
        if (s.a >= 0.5f) ids[p] = idx;
      }
  }
  return ids;
}

Tensor SceneRenderer::disparity_map(float u, float t) const {
  const auto ids = layer_ids(u, t);
  std::vector<float> d(ids.size(), 0.0f);
  for (size_t p = 0; p < ids.size(); ++p)
    if (ids[p] >= 0) d[p] = spec_.layers[ids[p]].disparity;
  return Tensor::from_vector({1, 1, spec_.height, spec_.width}, std::move(d));
}

Tensor SceneRenderer::flow_map(float u, int frame, TimeBranch branch) const {
  const int dir = branch == TimeBranch::next ? 1 : -1;
  if (frame + dir < 0 || frame + dir >= spec_.n_frames)
    raise(ErrorCategory::domain, "flow_map: no " +
                                     std::string(dir > 0 ? "next" : "previous") +
                                     " frame for index " + std::to_string(frame));
  const auto ids = layer_ids(u, spec_.frame_time(frame));
  const size_t plane = ids.size();
  std::vector<float> flow(2 * plane, 0.0f);
  const float per_unit_t = static_cast<float>(spec_.n_frames - 1);
  for (size_t p = 0; p < plane; ++p) {
    if (ids[p] < 0) continue;
    float vx, vy;
    spec_.layers[ids[p]].segment_velocity(frame, dir, vx, vy);
    flow[p] = vx * per_unit_t;
    flow[plane + p] = vy * per_unit_t;
  }
  return Tensor::from_vector({1, 2, spec_.height, spec_.width}, std::move(flow));
}

// ---- bundle -----------------------------------------------------------------

namespace {

void enforce_inside_frame(const SceneSpec& spec) {
  for (const auto& ls : spec.layers) {
    if (ls.is_background) continue;
    for (const auto& k : ls.knots) {
      const float half_w = static_cast<float>(ls.tex_w) * 0.5f;
      const float half_h = static_cast<float>(ls.tex_h) * 0.5f;
      const float reach = ls.disparity * 0.5f;  // |u| <= 0.5
      if (k.x - reach - half_w < 1.0f ||
          k.x + reach + half_w > static_cast<float>(spec.width - 2) ||
          k.y - half_h < 1.0f || k.y + half_h > static_cast<float>(spec.height - 2))
        raise(ErrorCategory::domain,
              "scene: layer '" + ls.name + "' leaves the frame at knot " +
                  std::to_string(k.frame));
    }
  }
}

Tensor quantize_frame(const Tensor& img) {
  std::vector<float> v(img.data(), img.data() + img.numel());
  for (auto& x : v) {
    const float c = std::clamp(x, 0.0f, 1.0f);
    x = static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
  }
  return Tensor::from_vector(img.shape(), std::move(v));
}

}  // namespace

SceneBundle emit_bundle(const SceneSpec& spec) {
  if (spec.n_frames < 3)
    raise(ErrorCategory::domain, "emit_bundle: needs at least 3 frames");
  enforce_inside_frame(spec);
  SceneRenderer renderer(spec);
  const int N = spec.n_frames, W = spec.width, H = spec.height;

  SceneBundle b;
  b.spec = spec;
  b.frames.resize(N);
  b.guidance_disparity.resize(N);
  b.occlusion.resize(N);
  b.flow_next.resize(N);
  b.flow_prev.resize(N);

  std::vector<std::array<std::vector<int>, 2>> ids(N);
  for (int i = 0; i < N; ++i) {
    const float t = spec.frame_time(i);
    for (int v = 0; v < 2; ++v) {
      const float u = SceneBundle::view_u(v);
      Tensor img = renderer.render(u, t);
      const float gain = renderer.frame_gain(i);
      if (gain != 1.0f) {
        std::vector<float> scaled(img.data(), img.data() + img.numel());
        for (auto& x : scaled) x = std::clamp(x * gain, 0.0f, 1.0f);
        img = Tensor::from_vector(img.shape(), std::move(scaled));
      }
      // Match the 8-bit files byte for byte so in-memory and on-disk
      // pipelines agree exactly.
      b.frames[i][v] = quantize_frame(img);
      b.guidance_disparity[i][v] = renderer.disparity_map(u, t);
      ids[i][v] = renderer.layer_ids(u, t);
      if (i + 1 < N) b.flow_next[i][v] = renderer.flow_map(u, i, TimeBranch::next);
      if (i > 0) b.flow_prev[i][v] = renderer.flow_map(u, i, TimeBranch::prev);
    }
  }

  // Exact visibility: pixel p of view v is visible in the other view iff the
  // other view shows the same layer at p's epipolar target.
  for (int i = 0; i < N; ++i) {
    for (int v = 0; v < 2; ++v) {
      const int other = 1 - v;
      const float du = SceneBundle::view_u(other) - SceneBundle::view_u(v);
      const float* disp = b.guidance_disparity[i][v].data();
      std::vector<float> mask(static_cast<size_t>(H) * W, 0.0f);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const size_t p = static_cast<size_t>(y) * W + x;
          const float dx = -du * disp[p];
          const long qx = std::lround(static_cast<float>(x) + dx);
          if (qx < 0 || qx >= W) continue;
          if (ids[i][other][static_cast<size_t>(y) * W + qx] == ids[i][v][p])
            mask[p] = 1.0f;
        }
      b.occlusion[i][v] = Tensor::from_vector({1, 1, H, W}, std::move(mask));
    }
  }
  return b;
}

// ---- manifest -----------------------------------------------------------------

namespace {

std::string fmt_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

const char* kind_name(TextureKind k) {
  return k == TextureKind::noise ? "noise" : "shapes";
}

TextureKind kind_from(const std::string& s) {
  if (s == "noise") return TextureKind::noise;
  if (s == "shapes") return TextureKind::shapes;
  raise(ErrorCategory::format, "manifest: unknown texture kind '" + s + "'");
}

}  // namespace

void write_manifest(const SceneSpec& spec, const std::string& path) {
  std::ostringstream os;
  os << "format_version: 1\n";
  os << "preset: " << spec.preset << "\n";
  os << "seed: " << spec.seed << "\n";
  os << "width: " << spec.width << "\n";
  os << "height: " << spec.height << "\n";
  os << "frames: " << spec.n_frames << "\n";
  os << "plane_count: " << spec.plane_count << "\n";
  os << "plane_gap: " << fmt_float(spec.plane_gap) << "\n";
  os << "gain_jitter: " << fmt_float(spec.gain_jitter) << "\n";
  for (const auto& l : spec.layers) {
    os << "layer {\n";
    os << "  name: " << l.name << "\n";
    os << "  z: " << l.z_order << "\n";
    os << "  disparity: " << fmt_float(l.disparity) << "\n";
    os << "  tex: " << l.tex_w << " " << l.tex_h << "\n";
    os << "  texture_seed: " << l.texture_seed << "\n";
    os << "  kind: " << kind_name(l.kind) << "\n";
    os << "  background: " << (l.is_background ? 1 : 0) << "\n";
    for (const auto& k : l.knots)
      os << "  knot: " << k.frame << " " << fmt_float(k.x) << " " << fmt_float(k.y)
         << "\n";
    os << "}\n";
  }
  for (int i = 0; i < spec.n_frames; ++i) {
    os << "frame {\n";
    os << "  index: " << i << "\n";
    os << "  t: " << fmt_float(spec.frame_time(i)) << "\n";
    os << "  left: viewL_f" << i << ".png\n";
    os << "  right: viewR_f" << i << ".png\n";
    os << "}\n";
  }
  os << "guidance {\n";
  os << "  disparity: disp{V}_f{I}.fmap\n";
  os << "  occlusion: occ{V}_f{I}.fmap\n";
  os << "  flow_next: flow{V}_next_f{I}.fmap\n";
  os << "  flow_prev: flow{V}_prev_f{I}.fmap\n";
  os << "}\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) raise(ErrorCategory::io, "manifest: cannot write " + tmp);
    f << os.str();
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    raise(ErrorCategory::io, "manifest: cannot rename " + tmp);
}

SceneSpec read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCategory::io, "manifest: cannot open " + path);
  SceneSpec spec;
  spec.layers.clear();
  LayerSpec* layer = nullptr;
  std::string block;
  std::string line;
  int lineno = 0;
  bool saw_version = false;
  while (std::getline(f, line)) {
    ++lineno;
    // strip whitespace
    size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    size_t z = line.find_last_not_of(" \t\r");
    line = line.substr(a, z - a + 1);
    if (line.empty() || line[0] == '#') continue;
    if (line == "}") {
      block.clear();
      layer = nullptr;
      continue;
    }
    if (line.size() > 1 && line.back() == '{') {
      block = line.substr(0, line.find_first_of(" \t{"));
      if (block == "layer") {
        spec.layers.emplace_back();
        layer = &spec.layers.back();
      }
      continue;
    }
    const size_t colon = line.find(':');
    if (colon == std::string::npos)
      raise(ErrorCategory::format, "manifest: bad line " + std::to_string(lineno) +
                                       " in " + path);
    const std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);

    if (block.empty()) {
      if (key == "format_version") {
        if (value != "1")
          raise(ErrorCategory::format, "manifest: unsupported version " + value);
        saw_version = true;
      } else if (key == "preset") {
        spec.preset = value;
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else if (key == "width") {
        spec.width = std::stoi(value);
      } else if (key == "height") {
        spec.height = std::stoi(value);
      } else if (key == "frames") {
        spec.n_frames = std::stoi(value);
      } else if (key == "plane_count") {
        spec.plane_count = std::stoi(value);
      } else if (key == "plane_gap") {
        spec.plane_gap = std::strtof(value.c_str(), nullptr);
      } else if (key == "gain_jitter") {
        spec.gain_jitter = std::strtof(value.c_str(), nullptr);
      }
      // unknown top-level keys are ignored for forward compatibility
    } else if (block == "layer" && layer) {
      std::istringstream vs(value);
      if (key == "name") {
        layer->name = value;
      } else if (key == "z") {
        layer->z_order = std::stoi(value);
      } else if (key == "disparity") {
        layer->disparity = std::strtof(value.c_str(), nullptr);
      } else if (key == "tex") {
        vs >> layer->tex_w >> layer->tex_h;
      } else if (key == "texture_seed") {
        layer->texture_seed = std::stoull(value);
      } else if (key == "kind") {
        layer->kind = kind_from(value);
      } else if (key == "background") {
        layer->is_background = value == "1";
      } else if (key == "knot") {
        Knot k;
        vs >> k.frame >> k.x >> k.y;
        layer->knots.push_back(k);
      }
    }
    // frame/guidance blocks carry derivable bindings; the fixed patterns are
    // validated on load instead of stored.
  }
  if (!saw_version)
    raise(ErrorCategory::format, "manifest: missing format_version in " + path);
  spec.validate();
  return spec;
}

// ---- bundle I/O -----------------------------------------------------------------

void save_bundle(const SceneBundle& b, const std::string& dir) {
  fs::create_directories(dir);
  write_manifest(b.spec, dir + "/scene.manifest");
  const char* vn[2] = {"L", "R"};
  for (int i = 0; i < b.spec.n_frames; ++i) {
    for (int v = 0; v < 2; ++v) {
      const std::string fi = std::to_string(i);
      write_png(dir + "/view" + vn[v] + "_f" + fi + ".png", b.frames[i][v]);
      write_fmap(dir + "/disp" + vn[v] + "_f" + fi + ".fmap",
                 b.guidance_disparity[i][v]);
      write_fmap(dir + "/occ" + vn[v] + "_f" + fi + ".fmap", b.occlusion[i][v]);
      if (b.flow_next[i][v].defined())
        write_fmap(dir + "/flow" + vn[v] + "_next_f" + fi + ".fmap",
                   b.flow_next[i][v]);
      if (b.flow_prev[i][v].defined())
        write_fmap(dir + "/flow" + vn[v] + "_prev_f" + fi + ".fmap",
                   b.flow_prev[i][v]);
    }
  }
}

SceneBundle load_bundle(const std::string& dir) {
  const std::string manifest = dir + "/scene.manifest";
  if (!fs::exists(manifest))
    raise(ErrorCategory::io, "bundle: no scene.manifest in " + dir);
  SceneBundle b;
  b.spec = read_manifest(manifest);
  const int N = b.spec.n_frames;
  b.frames.resize(N);
  b.guidance_disparity.resize(N);
  b.occlusion.resize(N);
  b.flow_next.resize(N);
  b.flow_prev.resize(N);
  const char* vn[2] = {"L", "R"};
  for (int i = 0; i < N; ++i) {
    for (int v = 0; v < 2; ++v) {
      const std::string fi = std::to_string(i);
      const std::string img = dir + "/view" + vn[v] + "_f" + fi + ".png";
      if (!fs::exists(img)) raise(ErrorCategory::io, "bundle: missing " + img);
      b.frames[i][v] = read_png(img);

      const std::string disp = dir + "/disp" + vn[v] + "_f" + fi + ".fmap";
      if (fs::exists(disp)) b.guidance_disparity[i][v] = read_fmap(disp);

      const std::string occ = dir + "/occ" + vn[v] + "_f" + fi + ".fmap";
      if (fs::exists(occ)) b.occlusion[i][v] = read_fmap(occ);

      const std::string fnext = dir + "/flow" + vn[v] + "_next_f" + fi + ".fmap";
      if (fs::exists(fnext)) b.flow_next[i][v] = read_fmap(fnext);
      const std::string fprev = dir + "/flow" + vn[v] + "_prev_f" + fi + ".fmap";
      if (fs::exists(fprev)) b.flow_prev[i][v] = read_fmap(fprev);
    }
  }
  // Consistency-check fallback when exact masks are absent but disparities
  // exist (file-based guidance from an external estimator).
  for (int i = 0; i < N; ++i)
    for (int v = 0; v < 2; ++v)
      if (!b.occlusion[i][v].defined() && b.guidance_disparity[i][v].defined() &&
          b.guidance_disparity[i][1 - v].defined()) {
        b.occlusion[i][v] = occlusion_mask_from_guidance(
            b.guidance_disparity[i][v], b.guidance_disparity[i][1 - v],
            SceneBundle::view_u(v), SceneBundle::view_u(1 - v));
      }
  return b;
}

// ---- presets -----------------------------------------------------------------

namespace {

float even_gap(float max_disparity) {
  int g = static_cast<int>(std::ceil(max_disparity / 5.0f));
  if (g % 2 != 0) g += 1;
  return static_cast<float>(std::max(g, 2));
}

LayerSpec background(int w, int h, uint64_t seed) {
  LayerSpec l;
  l.name = "background";
  l.z_order = 0;
  l.disparity = 0.0f;
  l.tex_w = w + 8;
  l.tex_h = h + 8;
  l.texture_seed = seed;
  l.kind = TextureKind::noise;
  l.is_background = true;
  l.knots = {{0, w * 0.5f, h * 0.5f}};
  return l;
}

LayerSpec sprite(const std::string& name, int z, float d, int tw, int th,
                 uint64_t seed, TextureKind kind, std::vector<Knot> knots) {
  LayerSpec l;
  l.name = name;
  l.z_order = z;
  l.disparity = d;
  l.tex_w = tw;
  l.tex_h = th;
  l.texture_seed = seed;
  l.kind = kind;
  l.is_background = false;
  l.knots = std::move(knots);
  return l;
}

}  // namespace

SceneSpec preset(const std::string& name, uint64_t seed, int frames, int height,
                 int width) {
  SceneSpec s;
  s.seed = seed;
  s.preset = name;
  Rng rng(seed, 0x707265ULL);
  const uint64_t ts = seed * 1000003ULL;

  if (name == "reference") {
    s.width = width > 0 ? width : 160;
    s.height = height > 0 ? height : 96;
    s.n_frames = frames > 0 ? frames : 9;
    s.plane_gap = even_gap(24.0f);  // 6 -> anchors 0..30
    s.plane_count = 6;
    s.layers.push_back(background(s.width, s.height, ts + 1));
    s.layers.push_back(sprite("far", 1, 12.0f, 34, 26, ts + 2, TextureKind::shapes,
                              {{0, 46, 30}, {8, 54, 30}}));
    s.layers.push_back(sprite("mid", 2, 18.0f, 28, 24, ts + 3, TextureKind::noise,
                              {{0, 40, 70}, {8, 32, 70}}));
    s.layers.push_back(sprite("near", 3, 24.0f, 40, 30, ts + 4, TextureKind::shapes,
                              {{0, 98, 62}, {4, 106, 58}, {8, 98, 62}}));
  } else if (name == "large-disparity") {
    s.width = width > 0 ? width : 320;
    s.height = height > 0 ? height : 96;
    s.n_frames = frames > 0 ? frames : 9;
    s.plane_gap = even_gap(48.0f);  // 10 -> anchors 0..50
    s.plane_count = 6;
    s.layers.push_back(background(s.width, s.height, ts + 1));
    s.layers.push_back(sprite("far", 1, 10.0f, 32, 26, ts + 2, TextureKind::noise,
                              {{0, 60, 36}, {8, 68, 36}}));
    s.layers.push_back(sprite("mid", 2, 24.0f, 36, 28, ts + 3, TextureKind::shapes,
                              {{0, 240, 60}, {8, 232, 60}}));
    s.layers.push_back(sprite("near", 3, 48.0f, 44, 32, ts + 4, TextureKind::shapes,
                              {{0, 140, 48}, {8, 156, 48}}));
  } else if (name == "motion-spike") {
    s.width = width > 0 ? width : 160;
    s.height = height > 0 ? height : 96;
    s.n_frames = frames > 0 ? frames : 9;
    s.plane_gap = even_gap(8.0f);
    s.plane_count = 6;
    s.layers.push_back(background(s.width, s.height, ts + 1));
    // one 4x velocity discontinuity at segment [4,5]; zig-zag elsewhere
    s.layers.push_back(sprite("mover", 1, 8.0f, 36, 30, ts + 2, TextureKind::shapes,
                              {{0, 60, 48},
                               {1, 62, 48},
                               {2, 64, 48},
                               {3, 62, 48},
                               {4, 64, 48},
                               {5, 72, 48},
                               {6, 70, 48},
                               {7, 72, 48},
                               {8, 70, 48}}));
  } else if (name == "nonlinear") {
    s.width = width > 0 ? width : 160;
    s.height = height > 0 ? height : 96;
    s.n_frames = frames > 0 ? frames : 9;
    s.plane_gap = even_gap(12.0f);
    s.plane_count = 6;
    s.layers.push_back(background(s.width, s.height, ts + 1));
    // parabolic height sampled at the frames, linear drift in x
    std::vector<Knot> knots;
    for (int f = 0; f <= 8; ++f) {
      const float y = 48.0f + static_cast<float>((f - 4) * (f - 4));
      knots.push_back({f, 50.0f + 2.0f * static_cast<float>(f), y});
    }
    s.layers.push_back(
        sprite("arc", 1, 12.0f, 34, 28, ts + 2, TextureKind::shapes, std::move(knots)));
  } else {
    raise(ErrorCategory::usage, "unknown preset '" + name + "'");
  }
  s.validate();
  return s;
}

std::vector<SceneSpec> blender_corpus(uint64_t seed, int count, int size) {
  if (size % 32 != 0)
    raise(ErrorCategory::domain, "blender_corpus: size must be divisible by 32");
  std::vector<SceneSpec> scenes;
  scenes.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, 0xc0c0ULL + static_cast<uint64_t>(i));
    SceneSpec s;
    s.seed = seed + static_cast<uint64_t>(i) * 7919ULL;
    s.preset = "blender-corpus";
    s.width = size;
    s.height = size;
    s.n_frames = 3;
    s.plane_gap = even_gap(16.0f);
    s.plane_count = 6;
    s.layers.push_back(background(size, size, s.seed * 31ULL + 1));

    const int n_sprites = 1 + rng.uniform_int(2);
    for (int k = 0; k < n_sprites; ++k) {
      const float d = static_cast<float>(4 + 4 * rng.uniform_int(4));  // 4..16
      const int tw = 16 + 2 * rng.uniform_int(5);
      const int th = 16 + 2 * rng.uniform_int(5);
      const float margin = d * 0.5f + tw * 0.5f + 5.0f;
      const float lo = margin, hi = static_cast<float>(size) - margin;
      if (hi <= lo) continue;
      const float x0 = lo + std::floor(rng.uniform() * (hi - lo));
      const float y0 = th * 0.5f + 3.0f +
                       std::floor(rng.uniform() * (size - th - 6));
      const float vx = static_cast<float>(rng.uniform_int(5) - 2);
      const float vy = static_cast<float>(rng.uniform_int(3) - 1);
      std::vector<Knot> knots = {{0, x0, y0}, {2, x0 + 2 * vx, y0 + 2 * vy}};
      s.layers.push_back(sprite("sprite" + std::to_string(k), k + 1, d, tw, th,
                                s.seed * 31ULL + 2 + static_cast<uint64_t>(k),
                                rng.uniform() < 0.5f ? TextureKind::noise
                                                     : TextureKind::shapes,
                                std::move(knots)));
    }
    // keep sprites legal; shrink motions that would leave the frame
    for (auto& l : s.layers) {
      if (l.is_background) continue;
      for (auto& k : l.knots) {
        const float reach = l.disparity * 0.5f + l.tex_w * 0.5f + 1.0f;
        k.x = std::clamp(k.x, reach + 1.0f, static_cast<float>(s.width) - reach - 3.0f);
        const float ry = l.tex_h * 0.5f + 1.0f;
        k.y = std::clamp(k.y, ry + 1.0f, static_cast<float>(s.height) - ry - 3.0f);
      }
    }
    s.validate();
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace sxf
