// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "sxf/rng.h"
#include "sxf/tensor.h"

namespace sxf::test {

inline Tensor rand_tensor(Shape s, Rng& rng, float lo = -1.0f, float hi = 1.0f,
                          bool requires_grad = false) {
  std::vector<float> v(s.numel());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_vector(s, std::move(v), requires_grad);
}

// Random values bounded away from zero, for |x|-style kinks.
inline Tensor rand_tensor_nonzero(Shape s, Rng& rng, float min_mag = 0.05f,
                                  bool requires_grad = false) {
  std::vector<float> v(s.numel());
  for (auto& x : v) {
    const float m = min_mag + rng.uniform(0.0f, 1.0f);
    x = rng.uniform() < 0.5f ? -m : m;
  }
  return Tensor::from_vector(s, std::move(v), requires_grad);
}

inline float max_abs_diff(const Tensor& a, const Tensor& b) {
  float m = 0.0f;
  for (size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline float max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  float m = 0.0f;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace sxf::test
