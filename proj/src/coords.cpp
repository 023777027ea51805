// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/coords.h"

#include <cmath>

#include "sxf/error.h"

namespace sxf {

std::vector<float> positional_encode(float x, int n_freq) {
  if (n_freq < 1)
    raise(ErrorCategory::domain,
          "positional_encode: n_freq must be >= 1, got " + std::to_string(n_freq));
  std::vector<float> out(2 * static_cast<size_t>(n_freq));
  float freq = static_cast<float>(M_PI);
  for (int k = 0; k < n_freq; ++k) {
    out[2 * k] = std::sin(freq * x);
    out[2 * k + 1] = std::cos(freq * x);
    freq *= 2.0f;
  }
  return out;
}

float view_network_input(float u, const EncodingConfig& cfg) {
  return u / cfg.view_scale;
}

float non_uniform_tau(float t, TimeBranch branch, float delta,
                      const EncodingConfig& cfg) {
  return branch == TimeBranch::next ? t : t - cfg.alpha * delta;
}

std::vector<float> assemble_coord(CoordKind kind, float u_or_tau, float t,
                                  const EncodingConfig& cfg) {
  if (kind == CoordKind::view_net) {
    std::vector<float> out;
    out.reserve(1 + 2 * static_cast<size_t>(cfg.view_pe_freqs));
    out.push_back(view_network_input(u_or_tau, cfg));
    auto pe = positional_encode(t, cfg.view_pe_freqs);
    out.insert(out.end(), pe.begin(), pe.end());
    return out;
  }
  return positional_encode(u_or_tau, cfg.time_pe_freqs);
}

}  // namespace sxf
