// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "refkernels.h"
#include "sxf/gradcheck.h"
#include "sxf/tensor.h"
#include "test_util.h"

using namespace sxf;

TEST_CASE("conv2d of ones sums the window") {
  auto in = Tensor::full({1, 1, 3, 3}, 1.0f);
  auto w = Tensor::full({1, 1, 3, 3}, 1.0f);
  auto b = Tensor::zeros({1, 1, 1, 1});
  auto out = conv2d(in, w, b, 1, 1);
  CHECK(out.shape() == Shape{1, 1, 3, 3});
  CHECK(out.at(0, 0, 1, 1) == 9.0f);   // center sees the full window
  CHECK(out.at(0, 0, 0, 0) == 4.0f);   // corner, zero padding
  CHECK(out.at(0, 0, 0, 1) == 6.0f);
}

TEST_CASE("conv2d identity kernel reproduces the input") {
  Rng rng(3);
  auto in = test::rand_tensor({1, 2, 5, 6}, rng);
  // single 1 at the center of each channel's own kernel
  std::vector<float> wv(2 * 2 * 9, 0.0f);
  wv[(0 * 2 + 0) * 9 + 4] = 1.0f;
  wv[(1 * 2 + 1) * 9 + 4] = 1.0f;
  auto w = Tensor::from_vector({2, 2, 3, 3}, std::move(wv));
  auto out = conv2d(in, w, Tensor(), 1, 1);
  CHECK(test::max_abs_diff(out, in) == 0.0f);
}

TEST_CASE("conv2d matches the nested-loop oracle on random inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int ic = 1 + rng.uniform_int(3);
    const int oc = 1 + rng.uniform_int(3);
    const int h = 4 + rng.uniform_int(6);
    const int w = 4 + rng.uniform_int(6);
    const int k = 1 + 2 * rng.uniform_int(2);  // 1 or 3
    const int stride = 1 + rng.uniform_int(2);
    const int pad = rng.uniform_int(2);
    if ((h + 2 * pad - k) < 0 || (w + 2 * pad - k) < 0) continue;

    auto in = test::rand_tensor({1, ic, h, w}, rng);
    auto wt = test::rand_tensor({oc, ic, k, k}, rng);
    auto bias = test::rand_tensor({1, oc, 1, 1}, rng);
    auto out = conv2d(in, wt, bias, stride, pad);

    std::vector<float> expect(out.numel());
    ref::conv2d(in.data(), wt.data(), bias.data(), expect.data(), ic, oc, h, w, k,
                k, stride, pad);
    CHECK(test::max_abs_diff(expect,
                             std::vector<float>(out.data(), out.data() + out.numel())) <=
          1e-5f);
  }
}

TEST_CASE("conv2d stride-2 output size follows the floor rule") {
  auto in = Tensor::zeros({1, 1, 7, 9});
  auto w = Tensor::zeros({4, 1, 3, 3});
  auto out = conv2d(in, w, Tensor(), 2, 1);
  CHECK(out.shape() == Shape{1, 4, 4, 5});
}

TEST_CASE("upsample of a constant is constant") {
  auto in = Tensor::full({1, 2, 3, 4}, 0.7f);
  auto out = upsample_bilinear2x(in);
  CHECK(out.shape() == Shape{1, 2, 6, 8});
  for (size_t i = 0; i < out.numel(); ++i)
    CHECK(out.data()[i] == doctest::Approx(0.7f));
}

TEST_CASE("upsample row [0,1] gives [0, 0.25, 0.75, 1]") {
  auto in = Tensor::from_vector({1, 1, 1, 2}, {0, 1});
  auto out = upsample_bilinear2x(in);
  CHECK(out.shape() == Shape{1, 1, 2, 4});
  const float expect[4] = {0.0f, 0.25f, 0.75f, 1.0f};
  for (int x = 0; x < 4; ++x) {
    CHECK(out.at(0, 0, 0, x) == doctest::Approx(expect[x]));
    CHECK(out.at(0, 0, 1, x) == doctest::Approx(expect[x]));
  }
}

TEST_CASE("upsample matches the serial reference") {
  Rng rng(23);
  auto in = test::rand_tensor({1, 3, 5, 7}, rng);
  auto out = upsample_bilinear2x(in);
  std::vector<float> expect(out.numel());
  ref::upsample2x(in.data(), expect.data(), 3, 5, 7);
  CHECK(test::max_abs_diff(expect,
                           std::vector<float>(out.data(), out.data() + out.numel())) <=
        1e-6f);
}

TEST_CASE("upsample gradient agrees with finite differences") {
  Rng rng(29);
  auto in = test::rand_tensor({1, 1, 2, 2}, rng, -1, 1, true);
  auto report = gradcheck(
      [](const std::vector<Tensor>& xs) { return mean(upsample_bilinear2x(xs[0])); },
      {in});
  CHECK(report.passed);
  CHECK(report.max_rel_error <= 1e-3f);
}

TEST_CASE("grid_sample identity grid is exact") {
  Rng rng(31);
  const int h = 4, w = 5;
  auto src = test::rand_tensor({1, 3, h, w}, rng);
  std::vector<float> xs(h * w), ys(h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      xs[y * w + x] = static_cast<float>(x);
      ys[y * w + x] = static_cast<float>(y);
    }
  auto out = grid_sample_bilinear(src, Tensor::from_vector({1, 1, h, w}, xs),
                                  Tensor::from_vector({1, 1, h, w}, ys));
  CHECK(test::max_abs_diff(out, src) == 0.0f);
}

TEST_CASE("grid_sample midpoint on a [0,1] row") {
  auto src = Tensor::from_vector({1, 1, 1, 2}, {0, 1});
  auto sx = Tensor::from_vector({1, 1, 1, 1}, {0.5f});
  auto sy = Tensor::from_vector({1, 1, 1, 1}, {0.0f});
  CHECK(grid_sample_bilinear(src, sx, sy).item() == doctest::Approx(0.5f));
}

TEST_CASE("grid_sample clamps out-of-bounds samples to the edge") {
  auto src = Tensor::from_vector({1, 1, 1, 3}, {5, 6, 7});
  auto sx = Tensor::from_vector({1, 1, 1, 2}, {-3.0f, 9.0f});
  auto sy = Tensor::zeros({1, 1, 1, 2});
  auto out = grid_sample_bilinear(src, sx, sy);
  CHECK(out.data()[0] == 5.0f);
  CHECK(out.data()[1] == 7.0f);
}

TEST_CASE("grid_sample matches the serial reference") {
  Rng rng(37);
  auto src = test::rand_tensor({1, 2, 6, 6}, rng);
  auto sx = test::rand_tensor({1, 1, 4, 4}, rng, -1.0f, 7.0f);
  auto sy = test::rand_tensor({1, 1, 4, 4}, rng, -1.0f, 7.0f);
  auto out = grid_sample_bilinear(src, sx, sy);
  std::vector<float> expect(out.numel());
  ref::grid_sample(src.data(), sx.data(), sy.data(), expect.data(), 2, 6, 6, 4, 4);
  CHECK(test::max_abs_diff(expect,
                           std::vector<float>(out.data(), out.data() + out.numel())) <=
        1e-6f);
}

namespace {

// Interior, non-integer sample coordinates so finite differences never
// straddle a bilinear cell boundary.
Tensor safe_coords(Shape s, Rng& rng, int limit) {
  std::vector<float> v(s.numel());
  for (auto& x : v) {
    const int cell = rng.uniform_int(limit - 1);
    x = static_cast<float>(cell) + rng.uniform(0.1f, 0.9f);
  }
  return Tensor::from_vector(s, std::move(v), true);
}

}  // namespace

TEST_CASE("grid_sample coordinate gradients agree with finite differences") {
  Rng rng(41);
  auto src = test::rand_tensor({1, 1, 4, 4}, rng, -1, 1, true);
  auto sx = safe_coords({1, 1, 3, 3}, rng, 4);
  auto sy = safe_coords({1, 1, 3, 3}, rng, 4);
  auto report = gradcheck(
      [](const std::vector<Tensor>& xs) {
        return mean(grid_sample_bilinear(xs[0], xs[1], xs[2]));
      },
      {src, sx, sy});
  CHECK(report.passed);
  CHECK(report.max_rel_error <= 1e-3f);
}

TEST_CASE("gradcheck is exact for linear functions") {
  Rng rng(43);
  auto a = test::rand_tensor({1, 1, 3, 3}, rng, -1, 1, true);
  auto report = gradcheck(
      [](const std::vector<Tensor>& xs) { return mean(mul(xs[0], 3.0f)); }, {a});
  CHECK(report.passed);
  CHECK(report.max_rel_error <= 2e-4f);
}

TEST_CASE("gradcheck passes conv2d -> leaky_relu -> mean_abs") {
  Rng rng(47);
  auto in = test::rand_tensor({1, 2, 5, 5}, rng, -1, 1, true);
  auto w = test::rand_tensor({3, 2, 3, 3}, rng, -0.5f, 0.5f, true);
  auto b = test::rand_tensor({1, 3, 1, 1}, rng, -0.2f, 0.2f, true);
  auto report = gradcheck(
      [](const std::vector<Tensor>& xs) {
        return mean_abs(leaky_relu(conv2d(xs[0], xs[1], xs[2], 1, 1)));
      },
      {in, w, b});
  CHECK(report.passed);
  CHECK(report.max_rel_error <= 1e-3f);
}

TEST_CASE("gradcheck flags and excludes a channel_max tie") {
  // Exact tie at the only pixel: the subgradient is one-sided, so the point
  // must be excluded rather than failed.
  auto x = Tensor::from_vector({1, 2, 1, 1}, {0.5f, 0.5f}, true);
  auto report = gradcheck(
      [](const std::vector<Tensor>& xs) {
        return mean(channel_max(xs[0]).values);
      },
      {x});
  CHECK(report.excluded > 0);
  CHECK(report.passed);
}

TEST_CASE("gradcheck passes the remaining differentiable ops") {
  Rng rng(53);

  auto check = [&](auto fn, std::vector<Tensor> inputs) {
    auto report = gradcheck(fn, std::move(inputs));
    CHECK(report.passed);
    CHECK(report.max_rel_error <= 1e-3f);
  };

  check([](const std::vector<Tensor>& xs) { return mean(sigmoid(xs[0])); },
        {test::rand_tensor({1, 1, 4, 4}, rng, -2, 2, true)});
  check([](const std::vector<Tensor>& xs) { return mean(tanh(xs[0])); },
        {test::rand_tensor({1, 1, 4, 4}, rng, -2, 2, true)});
  check([](const std::vector<Tensor>& xs) { return mean_abs(xs[0]); },
        {test::rand_tensor_nonzero({1, 1, 4, 4}, rng, 0.05f, true)});
  check([](const std::vector<Tensor>& xs) { return mean(div(xs[0], xs[1])); },
        {test::rand_tensor({1, 1, 3, 3}, rng, -1, 1, true),
         test::rand_tensor_nonzero({1, 1, 3, 3}, rng, 0.5f, true)});
  check(
      [](const std::vector<Tensor>& xs) {
        return mean(shift_channels(xs[0], {1.3f, -0.6f}));
      },
      {test::rand_tensor({1, 2, 3, 5}, rng, -1, 1, true)});
  check(
      [](const std::vector<Tensor>& xs) {
        return mean(channel_affine(xs[0], xs[1], xs[2]));
      },
      {test::rand_tensor({1, 2, 3, 3}, rng, -1, 1, true),
       test::rand_tensor({1, 2, 1, 1}, rng, -1, 1, true),
       test::rand_tensor({1, 2, 1, 1}, rng, -1, 1, true)});
  check(
      [](const std::vector<Tensor>& xs) {
        return mean(concat_channels({xs[0], xs[1]}));
      },
      {test::rand_tensor({1, 1, 3, 3}, rng, -1, 1, true),
       test::rand_tensor({1, 2, 3, 3}, rng, -1, 1, true)});
  check([](const std::vector<Tensor>& xs) { return mean(narrow_channels(xs[0], 1, 2)); },
        {test::rand_tensor({1, 4, 3, 3}, rng, -1, 1, true)});
  check([](const std::vector<Tensor>& xs) { return mean(max2(xs[0], xs[1])); },
        {test::rand_tensor({1, 1, 3, 3}, rng, 1.0f, 2.0f, true),
         test::rand_tensor({1, 1, 3, 3}, rng, -2.0f, -1.0f, true)});
}

TEST_CASE("kernel outputs are bit-identical across repeated runs") {
  Rng rng(59);
  auto in = test::rand_tensor({1, 4, 8, 8}, rng);
  auto w = test::rand_tensor({4, 4, 3, 3}, rng);
  auto b = test::rand_tensor({1, 4, 1, 1}, rng);
  auto r1 = conv2d(in, w, b, 1, 1);
  auto r2 = conv2d(in, w, b, 1, 1);
  CHECK(std::vector<float>(r1.data(), r1.data() + r1.numel()) ==
        std::vector<float>(r2.data(), r2.data() + r2.numel()));
}
