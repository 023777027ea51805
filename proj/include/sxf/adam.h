// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "sxf/tensor.h"

namespace sxf {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// Per-parameter first/second moment buffers, shape-congruent with their
// parameters. step_count advances by one per adam_step.
struct AdamState {
  AdamConfig config;
  int64_t step_count = 0;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;

  void init(const std::vector<Tensor>& params);
  bool initialized() const { return !first_moment.empty(); }
};

// Bias-corrected Adam on a raw buffer.
void adam_update(float* param, const float* grad, float* m, float* v, size_t n,
                 int64_t step_count, const AdamConfig& cfg);

// Updates params in place from their populated .grad() buffers.
void adam_step(std::vector<Tensor>& params, AdamState& state);

// Explicit-gradient form.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state);

}  // namespace sxf
