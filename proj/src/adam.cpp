// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/adam.h"

#include <cmath>

#include "sxf/error.h"

namespace sxf {

void AdamState::init(const std::vector<Tensor>& params) {
  first_moment.clear();
  second_moment.clear();
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.numel(), 0.0f);
    second_moment.emplace_back(p.numel(), 0.0f);
  }
  step_count = 0;
}

void adam_update(float* param, const float* grad, float* m, float* v, size_t n,
                 int64_t step_count, const AdamConfig& cfg) {
  const float b1 = cfg.beta1, b2 = cfg.beta2;
  const float c1 =
      1.0f - static_cast<float>(std::pow(static_cast<double>(b1), step_count));
  const float c2 =
      1.0f - static_cast<float>(std::pow(static_cast<double>(b2), step_count));
#pragma omp parallel for schedule(static)
  for (size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = b1 * m[i] + (1.0f - b1) * g;
    v[i] = b2 * v[i] + (1.0f - b2) * g * g;
    const float mhat = m[i] / c1;
    const float vhat = v[i] / c2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

namespace {

void step_impl(std::vector<Tensor>& params, const float* const* grads,
               AdamState& state) {
  if (!state.initialized()) state.init(params);
  if (state.first_moment.size() != params.size())
    raise(ErrorCategory::shape, "adam: state holds " +
                                    std::to_string(state.first_moment.size()) +
                                    " moment buffers for " +
                                    std::to_string(params.size()) + " params");
  state.step_count += 1;
  for (size_t i = 0; i < params.size(); ++i) {
    const size_t n = params[i].numel();
    if (state.first_moment[i].size() != n)
      raise(ErrorCategory::shape,
            "adam: moment buffer " + std::to_string(i) + " has " +
                std::to_string(state.first_moment[i].size()) + " values for param " +
                params[i].shape().str());
    adam_update(params[i].data(), grads[i], state.first_moment[i].data(),
                state.second_moment[i].data(), n, state.step_count, state.config);
  }
}

}  // namespace

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  std::vector<const float*> grads(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const float* g = params[i].grad();
    if (!g)
      raise(ErrorCategory::internal,
            "adam: param " + std::to_string(i) + " has no populated gradient");
    grads[i] = g;
  }
  step_impl(params, grads.data(), state);
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
  if (grads.size() != params.size())
    raise(ErrorCategory::shape, "adam: " + std::to_string(grads.size()) +
                                    " grads for " + std::to_string(params.size()) +
                                    " params");
  std::vector<const float*> ptrs(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    if (!(grads[i].shape() == params[i].shape()))
      raise(ErrorCategory::shape, "adam: grad " + grads[i].shape().str() +
                                      " vs param " + params[i].shape().str());
    ptrs[i] = grads[i].data();
  }
  step_impl(params, ptrs.data(), state);
}

}  // namespace sxf
