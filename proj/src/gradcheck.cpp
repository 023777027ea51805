// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/gradcheck.h"

#include <cmath>

#include "sxf/error.h"

namespace sxf {

GradcheckReport gradcheck(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    std::vector<Tensor> inputs, const GradcheckOptions& opts) {
  GradcheckReport report;

  Tensor out = fn(inputs);
  if (out.numel() != 1)
    raise(ErrorCategory::shape, "gradcheck: function must be scalar-valued");
  const float f0 = out.item();
  out.backward();

  std::vector<std::vector<float>> analytic(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    const float* g = inputs[i].grad();
    if (!g)
      raise(ErrorCategory::internal,
            "gradcheck: input " + std::to_string(i) + " grad not populated");
    analytic[i].assign(g, g + inputs[i].numel());
  }

  const float h = opts.step;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    float* x = inputs[i].data();
    for (size_t e = 0; e < inputs[i].numel(); ++e) {
      const float saved = x[e];
      float fp, fm;
      {
        NoGradGuard ng;
        x[e] = saved + h;
        fp = fn(inputs).item();
        x[e] = saved - h;
        fm = fn(inputs).item();
        x[e] = saved;
      }
      const float numeric = (fp - fm) / (2.0f * h);
      const float second = std::abs(fp + fm - 2.0f * f0) / h;
      if (second > opts.kink_threshold * std::max(1.0f, std::abs(f0))) {
        report.excluded += 1;
        continue;
      }
      const float a = analytic[i][e];
      const float denom = std::max({1.0f, std::abs(a), std::abs(numeric)});
      const float rel = std::abs(a - numeric) / denom;
      report.checked += 1;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = {static_cast<int>(i), e, a, numeric, rel};
      }
      if (rel > opts.tolerance)
        report.failures.push_back({static_cast<int>(i), e, a, numeric, rel});
    }
  }
  report.passed = report.failures.empty();
  return report;
}

}  // namespace sxf
