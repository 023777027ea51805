// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sxf/geometry.h"
#include "sxf/gradcheck.h"
#include "sxf/scenegen.h"
#include "test_util.h"

using namespace sxf;

namespace {

Tensor block_plane(int h, int w, int x_lo, int x_hi, float value) {
  std::vector<float> v(static_cast<size_t>(h) * w, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = x_lo; x < x_hi; ++x) v[static_cast<size_t>(y) * w + x] = value;
  return Tensor::from_vector({1, 1, h, w}, std::move(v));
}

}  // namespace

TEST_CASE("reconstruct at u=0 is the plain channel max") {
  Rng rng(3);
  auto planes = test::rand_tensor({1, 3, 4, 8}, rng);
  auto spec = MultiPlaneSpec::uniform(3, 20.0f);
  auto recon = reconstruct_jacobian(planes, spec, 0.0f);
  auto direct = channel_max(planes).values;
  CHECK(test::max_abs_diff(recon, direct) == 0.0f);
}

TEST_CASE("reconstruct shifts a block by d_k * u") {
  const int h = 4, w = 96;
  auto p1 = Tensor::zeros({1, 1, h, w});
  auto p2 = block_plane(h, w, 40, 50, 22.0f);
  auto planes = concat_channels({p1, p2});
  auto spec = MultiPlaneSpec::uniform(2, 20.0f);

  auto right = reconstruct_jacobian(planes, spec, 0.5f);  // shift +10 => left
  for (int x = 0; x < w; ++x) {
    const float expect = (x >= 30 && x < 40) ? 22.0f : 0.0f;
    CHECK(right.at(0, 0, 2, x) == expect);
  }
  auto left = reconstruct_jacobian(planes, spec, -0.5f);  // content moves right
  for (int x = 0; x < w; ++x) {
    const float expect = (x >= 50 && x < 60) ? 22.0f : 0.0f;
    CHECK(left.at(0, 0, 1, x) == expect);
  }
}

TEST_CASE("sum merge adds the shifted planes") {
  auto p1 = Tensor::full({1, 1, 2, 6}, 1.0f);
  auto p2 = Tensor::full({1, 1, 2, 6}, 2.0f);
  auto planes = concat_channels({p1, p2});
  auto spec = MultiPlaneSpec::uniform(2, 4.0f);
  auto sum = reconstruct_jacobian(planes, spec, 0.0f, PlaneMerge::sum);
  for (int x = 0; x < 6; ++x) CHECK(sum.at(0, 0, 0, x) == 3.0f);
}

TEST_CASE("view_flow sign convention") {
  auto j = Tensor::full({1, 1, 2, 3}, 20.0f);
  CHECK(test::max_abs_diff(view_flow(j, -0.5f, -0.5f), Tensor::zeros({1, 1, 2, 3})) ==
        0.0f);
  auto full = view_flow(j, -0.5f, 0.5f);
  CHECK(full.data()[0] == -20.0f);
  auto half = view_flow(j, -0.5f, 0.0f);
  CHECK(half.data()[0] == -10.0f);
}

TEST_CASE("time_flow scales by the time difference and checks direction") {
  auto j = Tensor::from_vector({1, 2, 1, 1}, {3.0f, -1.0f});
  auto f = time_flow(j, TimeBranch::next, 0.25f, 0.5f);
  CHECK(f.data()[0] == doctest::Approx(0.75f));
  CHECK(f.data()[1] == doctest::Approx(-0.25f));
  CHECK(time_flow(j, TimeBranch::next, 0.5f, 0.5f).data()[0] == 0.0f);
  CHECK_THROWS_AS(time_flow(j, TimeBranch::next, 0.5f, 0.25f), Error);
  CHECK_THROWS_AS(time_flow(j, TimeBranch::prev, 0.25f, 0.5f), Error);
}

TEST_CASE("backward_warp basics") {
  Rng rng(5);
  auto img = test::rand_tensor({1, 3, 4, 6}, rng);
  auto zero = Tensor::zeros({1, 2, 4, 6});
  CHECK(test::max_abs_diff(backward_warp(img, zero), img) == 0.0f);

  // constant flow (-1, 0): output pixel x samples source at x-1
  auto edge = block_plane(4, 6, 3, 6, 1.0f);
  std::vector<float> fv(2 * 4 * 6, 0.0f);
  for (int i = 0; i < 4 * 6; ++i) fv[i] = -1.0f;
  auto flow = Tensor::from_vector({1, 2, 4, 6}, std::move(fv));
  auto moved = backward_warp(edge, flow);
  for (int y = 0; y < 4; ++y) {
    CHECK(moved.at(0, 0, y, 3) == 0.0f);  // edge moved 1 px right
    CHECK(moved.at(0, 0, y, 4) == 1.0f);
  }
}

TEST_CASE("shift linearity away from borders") {
  Rng rng(7);
  auto p = test::rand_tensor({1, 1, 3, 32}, rng);
  const float a = 2.3f, b = -1.1f;
  auto two_step = shift_plane(shift_plane(p, a), b);
  auto one_step = shift_plane(p, a + b);
  const int guard = static_cast<int>(std::ceil(std::max(std::abs(a), std::abs(b)))) + 1;
  for (int y = 0; y < 3; ++y)
    for (int x = guard; x < 32 - guard; ++x)
      CHECK(two_step.at(0, 0, y, x) ==
            doctest::Approx(one_step.at(0, 0, y, x)).epsilon(1e-5));
}

TEST_CASE("occlusion mask from consistent constant disparity is all ones") {
  auto j = Tensor::full({1, 1, 4, 16}, 3.0f);
  auto m = occlusion_mask_from_guidance(j, j, -0.5f, 0.5f);
  for (size_t i = 0; i < m.numel(); ++i) CHECK(m.data()[i] == 1.0f);
}

TEST_CASE("zero tolerance on real-valued maps rejects nearly everything") {
  Rng rng(11);
  auto a = test::rand_tensor({1, 1, 6, 24}, rng, 0.0f, 5.0f);
  auto b = test::rand_tensor({1, 1, 6, 24}, rng, 0.0f, 5.0f);
  auto m = occlusion_mask_from_guidance(a, b, -0.5f, 0.5f, 0.0f);
  float on = 0.0f;
  for (size_t i = 0; i < m.numel(); ++i) on += m.data()[i];
  CHECK(on / static_cast<float>(m.numel()) < 0.05f);
}

TEST_CASE("consistency weights") {
  // perfectly inverse constant flows
  auto fwd = Tensor::full({1, 2, 4, 8}, 1.5f);
  auto bwd = Tensor::full({1, 2, 4, 8}, -1.5f);
  auto w = consistency_weights(fwd, bwd, 1.0f);
  // interior pixels round-trip exactly; border pixels clamp
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) CHECK(w.at(0, 0, y, x) == doctest::Approx(1.0f));

  // e = sigma => weight exp(-1)
  auto zero = Tensor::zeros({1, 2, 4, 8});
  std::vector<float> ev(2 * 4 * 8, 0.0f);
  for (int i = 0; i < 4 * 8; ++i) ev[i] = 2.0f;  // x-residual only
  auto bad = Tensor::from_vector({1, 2, 4, 8}, std::move(ev));
  auto w2 = consistency_weights(bad, zero, 2.0f);
  CHECK(w2.at(0, 0, 0, 0) == doctest::Approx(std::exp(-1.0f)));
}

TEST_CASE("guidance decomposition bands") {
  auto spec = MultiPlaneSpec::uniform(3, 20.0f);  // planes 0, 20, 40
  auto j = Tensor::from_vector({1, 1, 1, 4}, {22.0f, 10.0f, 9.9f, 45.0f});
  auto dec = decompose_guidance(j, spec);
  // 22 -> plane 20 (band [10, 30))
  CHECK(dec.masks.at(0, 1, 0, 0) == 1.0f);
  CHECK(dec.planes.at(0, 1, 0, 0) == 22.0f);
  // 10 -> plane 20, half-open boundary
  CHECK(dec.masks.at(0, 1, 0, 1) == 1.0f);
  // 9.9 -> plane 0
  CHECK(dec.masks.at(0, 0, 0, 2) == 1.0f);
  // 45 -> top plane (closed above)
  CHECK(dec.masks.at(0, 2, 0, 3) == 1.0f);

  // masks partition the image
  for (int x = 0; x < 4; ++x) {
    float total = 0.0f;
    for (int k = 0; k < 3; ++k) total += dec.masks.at(0, k, 0, x);
    CHECK(total == 1.0f);
  }
}

TEST_CASE("residual edge mask") {
  auto flat = Tensor::full({1, 1, 4, 32}, 2.0f);
  auto empty = residual_edge_mask(flat);
  for (size_t i = 0; i < empty.numel(); ++i) CHECK(empty.data()[i] == 0.0f);

  // 5 px step across one column
  auto step = block_plane(4, 32, 16, 32, 5.0f);
  auto mask = residual_edge_mask(step);
  for (int x = 13; x <= 18; ++x) CHECK(mask.at(0, 0, 1, x) == 1.0f);
  CHECK(mask.at(0, 0, 1, 0) == 0.0f);
  CHECK(mask.at(0, 0, 1, 31) == 0.0f);

  auto weights = Tensor::full({1, 1, 4, 32}, 0.8f);
  auto combined = combine_residual_mask(weights, mask);
  CHECK(combined.at(0, 0, 1, 16) == 0.0f);
  CHECK(combined.at(0, 0, 1, 0) == doctest::Approx(0.8f));
}

TEST_CASE("gradient flows through reconstruct -> view_flow -> backward_warp") {
  Rng rng(13);
  auto planes = test::rand_tensor({1, 2, 4, 6}, rng, 0.0f, 1.5f, true);
  auto image = test::rand_tensor({1, 1, 4, 6}, rng, 0.0f, 1.0f);
  auto spec = MultiPlaneSpec::uniform(2, 2.0f);
  auto report = gradcheck(
      [&](const std::vector<Tensor>& xs) {
        auto j = reconstruct_jacobian(xs[0], spec, 0.37f);
        auto flow = view_flow(j, 0.37f, -0.5f);
        return mean_abs(backward_warp(image, flow));
      },
      {planes});
  CHECK(report.passed);
  CHECK(report.max_rel_error <= 1e-3f);
  CHECK(report.checked > 0);
}

// ---- scene-oracle suite ------------------------------------------------------

TEST_CASE("oracle round trip: warped left equals right outside occlusions") {
  auto bundle = emit_bundle(preset("reference", 21));
  const int N = bundle.spec.n_frames;
  for (int i = 0; i < N; i += 4) {
    // warp the left frame to the right view with the right view's oracle
    // disparity; exact where the right view sees left-visible content
    auto flow = view_flow(bundle.guidance_disparity[i][1], 0.5f, -0.5f);
    auto warped = backward_warp(bundle.frames[i][0], flow);
    const Tensor& target = bundle.frames[i][1];
    const Tensor& mask = bundle.occlusion[i][1];
    const size_t plane = mask.numel();
    float worst = 0.0f;
    for (size_t p = 0; p < plane; ++p) {
      if (mask.data()[p] == 0.0f) continue;
      for (int c = 0; c < 3; ++c)
        worst = std::max(worst, std::abs(warped.data()[c * plane + p] -
                                         target.data()[c * plane + p]));
    }
    CHECK(worst <= 1e-6f);
  }
}

TEST_CASE("consistency-check mask matches the exact mask with IoU >= 0.9") {
  auto bundle = emit_bundle(preset("reference", 22));
  const int i = 4;
  for (int v = 0; v < 2; ++v) {
    auto derived = occlusion_mask_from_guidance(
        bundle.guidance_disparity[i][v], bundle.guidance_disparity[i][1 - v],
        SceneBundle::view_u(v), SceneBundle::view_u(1 - v), 1.0f);
    const Tensor& exact = bundle.occlusion[i][v];
    // IoU over the occluded (zero) regions
    size_t inter = 0, uni = 0;
    for (size_t p = 0; p < exact.numel(); ++p) {
      const bool a = derived.data()[p] == 0.0f;
      const bool b = exact.data()[p] == 0.0f;
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
    }
    REQUIRE(uni > 0);
    CHECK(static_cast<double>(inter) / static_cast<double>(uni) >= 0.9);
  }
}

TEST_CASE("consistency weights dip inside an occluded strip") {
  auto bundle = emit_bundle(preset("reference", 23));
  const int i = 4;
  // weights for blending toward the left view at u = 0
  auto flow_fwd = view_flow(bundle.guidance_disparity[i][0], -0.5f, 0.5f);
  auto flow_bwd = view_flow(bundle.guidance_disparity[i][1], 0.5f, -0.5f);
  auto w = consistency_weights(flow_fwd, flow_bwd, 1.0f);
  const Tensor& mask = bundle.occlusion[i][0];
  double in_sum = 0.0, out_sum = 0.0;
  size_t in_n = 0, out_n = 0;
  for (size_t p = 0; p < mask.numel(); ++p) {
    if (mask.data()[p] == 0.0f) {
      in_sum += w.data()[p];
      ++in_n;
    } else {
      out_sum += w.data()[p];
      ++out_n;
    }
  }
  REQUIRE(in_n > 0);
  CHECK(in_sum / in_n < out_sum / out_n);
}

TEST_CASE("decompose then reconstruct is exact for anchor-valued scenes") {
  // Disparities sit exactly on the anchors, and the sprite footprints stay
  // disjoint at every view, so disocclusions only ever reveal the d=0
  // background.
  SceneSpec spec;
  spec.width = 160;
  spec.height = 64;
  spec.n_frames = 3;
  spec.seed = 77;
  spec.plane_count = 6;
  spec.plane_gap = 6.0f;
  LayerSpec bg;
  bg.name = "background";
  bg.z_order = 0;
  bg.disparity = 0.0f;
  bg.tex_w = 168;
  bg.tex_h = 72;
  bg.texture_seed = 5;
  bg.is_background = true;
  bg.knots = {{0, 80, 32}};
  spec.layers.push_back(bg);
  LayerSpec s1;
  s1.name = "s1";
  s1.z_order = 1;
  s1.disparity = 12.0f;
  s1.tex_w = 24;
  s1.tex_h = 20;
  s1.texture_seed = 6;
  s1.knots = {{0, 40, 32}, {2, 40, 32}};
  spec.layers.push_back(s1);
  LayerSpec s2 = s1;
  s2.name = "s2";
  s2.z_order = 2;
  s2.disparity = 24.0f;
  s2.texture_seed = 7;
  s2.knots = {{0, 116, 32}, {2, 116, 32}};
  spec.layers.push_back(s2);

  SceneRenderer oracle(spec);
  auto planes = MultiPlaneSpec::uniform(spec.plane_count, spec.plane_gap);
  auto center = oracle.disparity_map(0.0f, 0.0f);
  auto dec = decompose_guidance(center, planes);
  const int border = static_cast<int>(planes.disparities.back() / 2.0f) + 1;
  for (float u : {-0.5f, 0.5f}) {
    auto recon = reconstruct_jacobian(dec.planes, planes, u);
    auto expect = oracle.disparity_map(u, 0.0f);
    float worst = 0.0f;
    for (int y = 0; y < recon.shape().h; ++y)
      for (int x = border; x < recon.shape().w - border; ++x)
        worst = std::max(worst, std::abs(recon.at(0, 0, y, x) - expect.at(0, 0, y, x)));
    CHECK(worst == 0.0f);
  }
}
