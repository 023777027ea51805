// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "sxf/tensor.h"

namespace sxf {

struct GradcheckOptions {
  float step = 1e-3f;
  float tolerance = 1e-3f;
  // A central second difference larger than this (per unit step) marks the
  // element as sitting on a kink; such points are excluded, not failed.
  float kink_threshold = 1e-2f;
};

struct GradcheckIssue {
  int input_index = 0;
  size_t element = 0;
  float analytic = 0.0f;
  float numeric = 0.0f;
  float rel_error = 0.0f;
};

struct GradcheckReport {
  bool passed = false;
  float max_rel_error = 0.0f;
  GradcheckIssue worst;                 // worst non-excluded element
  std::vector<GradcheckIssue> failures; // elements beyond tolerance
  size_t checked = 0;
  size_t excluded = 0;  // flagged non-differentiable points
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences over every element of every grad-requiring input.
GradcheckReport gradcheck(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    std::vector<Tensor> inputs, const GradcheckOptions& opts = {});

}  // namespace sxf
