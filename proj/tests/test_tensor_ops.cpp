// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sxf/adam.h"
#include "sxf/error.h"
#include "sxf/tensor.h"
#include "test_util.h"

using namespace sxf;

TEST_CASE("elementwise add") {
  auto a = Tensor::from_vector({1, 1, 1, 2}, {1, 2});
  auto b = Tensor::from_vector({1, 1, 1, 2}, {3, 4});
  auto c = add(a, b);
  CHECK(c.data()[0] == 4.0f);
  CHECK(c.data()[1] == 6.0f);
}

TEST_CASE("mul by scalar zero annihilates and kills gradients") {
  auto a = Tensor::from_vector({1, 1, 1, 3}, {1, -2, 3}, true);
  auto y = mean(mul(a, 0.0f));
  CHECK(y.item() == 0.0f);
  y.backward();
  for (int i = 0; i < 3; ++i) CHECK(a.grad()[i] == 0.0f);
}

TEST_CASE("abs gradient is the sign") {
  auto a = Tensor::from_vector({1, 1, 1, 1}, {-2.0f}, true);
  auto y = mean(abs(a));
  CHECK(y.item() == 2.0f);
  y.backward();
  CHECK(a.grad()[0] == -1.0f);
}

TEST_CASE("div backward uses the recorded divisor") {
  auto a = Tensor::from_vector({1, 1, 1, 2}, {6, 8}, true);
  auto b = Tensor::from_vector({1, 1, 1, 2}, {2, 4}, true);
  auto y = mean(div(a, b));
  y.backward();
  // d(mean(a/b))/da_i = 1/(2 b_i), /db_i = -a_i/(2 b_i^2)
  CHECK(a.grad()[0] == doctest::Approx(0.25f));
  CHECK(a.grad()[1] == doctest::Approx(0.125f));
  CHECK(b.grad()[0] == doctest::Approx(-6.0f / (2 * 4.0f)));
  CHECK(b.grad()[1] == doctest::Approx(-8.0f / (2 * 16.0f)));
}

TEST_CASE("elementwise shape mismatch names both shapes") {
  auto a = Tensor::zeros({1, 1, 2, 2});
  auto b = Tensor::zeros({1, 1, 2, 3});
  try {
    add(a, b);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::shape);
    CHECK(std::string(e.what()).find("(1,1,2,2)") != std::string::npos);
    CHECK(std::string(e.what()).find("(1,1,2,3)") != std::string::npos);
  }
}

TEST_CASE("activations hit their fixed points") {
  auto x = Tensor::from_vector({1, 1, 1, 1}, {-1.0f});
  CHECK(leaky_relu(x).data()[0] == doctest::Approx(-0.2f));
  auto z = Tensor::scalar(0.0f);
  CHECK(sigmoid(z).item() == doctest::Approx(0.5f));

  auto t = Tensor::scalar(0.0f, true);
  auto y = mean(tanh(t));
  y.backward();
  CHECK(t.grad()[0] == doctest::Approx(1.0f));
}

TEST_CASE("channel_max values, ties, and gradient routing") {
  // one pixel, two channels
  auto x = Tensor::from_vector({1, 2, 1, 1}, {3, 21}, true);
  auto r = channel_max(x);
  CHECK(r.values.item() == 21.0f);
  CHECK((*r.argmax)[0] == 1);

  auto tie = Tensor::from_vector({1, 2, 1, 1}, {5, 5});
  CHECK((*channel_max(tie).argmax)[0] == 0);

  auto y = mean(r.values);  // upstream grad 1 at the single pixel
  y.backward();
  CHECK(x.grad()[0] == 0.0f);
  CHECK(x.grad()[1] == 1.0f);
}

TEST_CASE("channel_max conserves gradient mass") {
  Rng rng(7);
  auto x = test::rand_tensor({1, 5, 6, 7}, rng, -2.0f, 2.0f, true);
  auto r = channel_max(x);
  Rng rng2(8);
  auto up = test::rand_tensor({1, 1, 6, 7}, rng2, 0.1f, 1.0f);
  auto y = mean(mul(r.values, up));
  y.backward();
  const size_t plane = 6 * 7;
  for (size_t p = 0; p < plane; ++p) {
    float total = 0.0f;
    for (int k = 0; k < 5; ++k) total += x.grad()[k * plane + p];
    const float upstream = up.data()[p] / static_cast<float>(plane);
    CHECK(total == doctest::Approx(upstream).epsilon(1e-5));
  }
}

TEST_CASE("reduce mean_abs") {
  auto x = Tensor::from_vector({1, 1, 1, 3}, {1, -1, 2});
  CHECK(mean_abs(x).item() == doctest::Approx(4.0f / 3.0f));

  auto v = Tensor::from_vector({1, 1, 1, 2}, {2, 4});
  auto m0 = Tensor::from_vector({1, 1, 1, 2}, {0, 0});
  CHECK(mean_abs(v, m0).item() == 0.0f);  // floored denominator
  auto m = Tensor::from_vector({1, 1, 1, 2}, {1, 0});
  CHECK(mean_abs(v, m).item() == doctest::Approx(2.0f));
}

TEST_CASE("masked reduce backward only sees masked elements") {
  auto v = Tensor::from_vector({1, 1, 1, 3}, {2, -4, 6}, true);
  auto m = Tensor::from_vector({1, 1, 1, 3}, {1, 1, 0});
  auto y = mean_abs(v, m);
  CHECK(y.item() == doctest::Approx(3.0f));
  y.backward();
  CHECK(v.grad()[0] == doctest::Approx(0.5f));
  CHECK(v.grad()[1] == doctest::Approx(-0.5f));
  CHECK(v.grad()[2] == 0.0f);
}

TEST_CASE("concat and narrow round gradients through") {
  auto a = Tensor::from_vector({1, 1, 1, 2}, {1, 2}, true);
  auto b = Tensor::from_vector({1, 2, 1, 2}, {3, 4, 5, 6}, true);
  auto c = concat_channels({a, b});
  CHECK(c.shape() == Shape{1, 3, 1, 2});
  auto mid = narrow_channels(c, 1, 1);
  CHECK(mid.data()[0] == 3.0f);
  CHECK(mid.data()[1] == 4.0f);
  auto y = mean(mid);
  y.backward();
  CHECK(a.grad()[0] == 0.0f);
  CHECK(b.grad()[0] == 0.5f);
  CHECK(b.grad()[1] == 0.5f);
  CHECK(b.grad()[2] == 0.0f);
}

TEST_CASE("adam zero gradient leaves params unchanged") {
  auto p = Tensor::from_vector({1, 1, 1, 3}, {1, 2, 3});
  std::vector<Tensor> params{p};
  std::vector<Tensor> grads{Tensor::zeros({1, 1, 1, 3})};
  AdamState st;
  for (int i = 0; i < 5; ++i) adam_step(params, grads, st);
  CHECK(p.data()[0] == 1.0f);
  CHECK(p.data()[1] == 2.0f);
  CHECK(p.data()[2] == 3.0f);
  CHECK(st.step_count == 5);
}

TEST_CASE("adam first step matches the hand-evaluated update") {
  // m = 0.1, v = 0.001, mhat = 1, vhat = 1 => step = -lr / (1 + eps)
  auto p = Tensor::scalar(0.5f);
  std::vector<Tensor> params{p};
  std::vector<Tensor> grads{Tensor::scalar(1.0f)};
  AdamState st;
  adam_step(params, grads, st);
  const float expected = 0.5f - 1e-4f / (1.0f + 1e-8f);
  CHECK(p.item() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("adam runs are bit-deterministic") {
  auto run = [] {
    Rng rng(11);
    auto p = test::rand_tensor({1, 1, 4, 4}, rng, -1, 1);
    std::vector<Tensor> params{p};
    AdamState st;
    st.config.lr = 1e-3f;
    for (int i = 0; i < 100; ++i) {
      Rng gr(100 + i);
      std::vector<Tensor> grads{test::rand_tensor({1, 1, 4, 4}, gr, -1, 1)};
      adam_step(params, grads, st);
    }
    return std::vector<float>(p.data(), p.data() + p.numel());
  };
  auto a = run();
  auto b = run();
  CHECK(a == b);  // bit identical
}

TEST_CASE("adam rejects shape drift") {
  auto p = Tensor::zeros({1, 1, 1, 3});
  std::vector<Tensor> params{p};
  AdamState st;
  std::vector<Tensor> bad{Tensor::zeros({1, 1, 1, 4})};
  CHECK_THROWS_AS(adam_step(params, bad, st), Error);
}

TEST_CASE("backward populates every grad-requiring leaf") {
  auto a = Tensor::from_vector({1, 1, 1, 2}, {1, 2}, true);
  auto b = Tensor::from_vector({1, 1, 1, 2}, {3, 4}, true);
  // b participates only through a zero-weighted branch; its grad must still
  // be fully written (as zeros).
  auto y = mean(add(a, mul(b, 0.0f)));
  y.backward();
  REQUIRE(b.grad() != nullptr);
  CHECK(b.grad()[0] == 0.0f);
  CHECK(b.grad()[1] == 0.0f);
  CHECK(a.grad()[0] == 0.5f);
}

TEST_CASE("shift_channels matches the stated row examples") {
  auto row = Tensor::from_vector({1, 1, 1, 4}, {1, 2, 3, 4});
  auto s0 = shift_plane(row, 0.0f);
  CHECK(test::max_abs_diff(s0, row) == 0.0f);

  auto s1 = shift_plane(row, 1.0f);  // [b, c, d, d]
  CHECK(s1.data()[0] == 2.0f);
  CHECK(s1.data()[1] == 3.0f);
  CHECK(s1.data()[2] == 4.0f);
  CHECK(s1.data()[3] == 4.0f);

  auto sh = shift_plane(row, 0.5f);
  CHECK(sh.data()[0] == doctest::Approx(1.5f));
  CHECK(sh.data()[3] == doctest::Approx(4.0f));

  auto sm = shift_plane(row, -1.0f);  // content moves right
  CHECK(sm.data()[0] == 1.0f);
  CHECK(sm.data()[1] == 1.0f);
  CHECK(sm.data()[2] == 2.0f);
}

TEST_CASE("channel_affine broadcasts per channel") {
  auto g = Tensor::from_vector({1, 2, 1, 2}, {1, 2, 3, 4}, true);
  auto s = Tensor::from_vector({1, 2, 1, 1}, {2, -1}, true);
  auto b = Tensor::from_vector({1, 2, 1, 1}, {0.5f, 1}, true);
  auto y = channel_affine(g, s, b);
  CHECK(y.data()[0] == doctest::Approx(2.5f));
  CHECK(y.data()[1] == doctest::Approx(4.5f));
  CHECK(y.data()[2] == doctest::Approx(-2.0f));
  CHECK(y.data()[3] == doctest::Approx(-3.0f));
  auto loss = mean(y);
  loss.backward();
  CHECK(s.grad()[0] == doctest::Approx((1 + 2) / 4.0f));
  CHECK(s.grad()[1] == doctest::Approx((3 + 4) / 4.0f));
  CHECK(b.grad()[0] == doctest::Approx(0.5f));
  CHECK(g.grad()[0] == doctest::Approx(0.5f));
  CHECK(g.grad()[2] == doctest::Approx(-0.25f));
}

TEST_CASE("no-grad scope suppresses graph construction") {
  auto a = Tensor::scalar(2.0f, true);
  Tensor y;
  {
    NoGradGuard ng;
    y = mul(a, 3.0f);
  }
  CHECK_FALSE(y.requires_grad());
}
