// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace sxf {

// Canonical view-time coordinate. Views live at u = -0.5 (left) and +0.5
// (right); time is normalized so frame i of an N-frame video sits at
// t = i / (N - 1).
struct ViewTimeCoord {
  float u = 0.0f;
  float t = 0.0f;
};

struct EncodingConfig {
  float view_scale = 30.0f;  // u is divided by this before entering the net
  int view_pe_freqs = 5;     // time encoding width of the view network
  int time_pe_freqs = 10;    // tau encoding width of the time networks
  float alpha = 0.9f;        // previous-frame branch shift, in frame units
};

enum class TimeBranch { next, prev };

// [sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{n-1} pi x), cos(2^{n-1} pi x)]
std::vector<float> positional_encode(float x, int n_freq);

// u / view_scale; the view coordinate is scaled, never positionally encoded.
float view_network_input(float u, const EncodingConfig& cfg);

// Non-uniform time coordinate: tau = t for the next-frame branch, and
// tau = t - alpha * delta for the previous-frame branch, where delta is the
// normalized frame spacing 1/(N-1).
float non_uniform_tau(float t, TimeBranch branch, float delta,
                      const EncodingConfig& cfg);

enum class CoordKind { view_net, time_net };

// view_net: [u / view_scale] ++ pe(t, view_pe_freqs)  (length 11 by default)
// time_net: pe(tau, time_pe_freqs)                    (length 20 by default)
std::vector<float> assemble_coord(CoordKind kind, float u_or_tau, float t,
                                  const EncodingConfig& cfg);

}  // namespace sxf
