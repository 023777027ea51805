// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sxf/checkpoint.h"
#include "sxf/tensor.h"

namespace sxf {

// Coordinate-conditioned convolutional decoder. The coordinate vector
// modulates a learned base grid per channel (scale + bias heads), which is
// then decoded by n_levels of [bilinear 2x upsample -> 3x3 conv -> leaky
// relu], channel widths starting at capacity*8 and halving down to a floor
// of capacity, followed by a linear 3x3 head.
struct DecoderConfig {
  int capacity = 16;
  int out_height = 0;
  int out_width = 0;
  int n_levels = 4;
  int out_channels = 1;
  int coord_dim = 11;

  void validate() const;
  int base_channels() const { return capacity * 8; }
  int grid_h() const { return out_height >> n_levels; }
  int grid_w() const { return out_width >> n_levels; }
};

class Decoder {
 public:
  // head_bias: per-output-channel bias init (the plane anchors d_k for the
  // view decoder); empty means zeros. All other parameters draw from a
  // centered uniform with fan-in scaling, in a fixed order from `seed`.
  Decoder(const DecoderConfig& cfg, const std::vector<float>& head_bias,
          uint64_t seed);

  // Unit fixture: head weight and bias identically zero.
  static Decoder with_zero_head(const DecoderConfig& cfg, uint64_t seed);

  // coord must have cfg.coord_dim values; returns (1, out_channels, H, W).
  Tensor forward(const std::vector<float>& coord) const;

  const DecoderConfig& config() const { return cfg_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }

  void save_params(Checkpoint& ck, const std::string& prefix) const;
  void load_params(const Checkpoint& ck, const std::string& prefix);

 private:
  Decoder() = default;
  void build(uint64_t seed, const std::vector<float>& head_bias, bool zero_head);

  DecoderConfig cfg_;
  std::vector<int> widths_;  // conv output channels per level
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

// Blending UNet: 16-channel input (left/right sources, left/right warps, two
// 2-channel flows), `levels` stride-2 downsamplings mirrored by bilinear
// upsamplings with skip concats, LeakyReLU everywhere and a sigmoid head
// producing a single weight channel in (0, 1).
struct BlenderConfig {
  int in_channels = 16;
  int levels = 5;
  int base_channels = 32;

  void validate() const;
};

class BlenderUNet {
 public:
  BlenderUNet(const BlenderConfig& cfg, uint64_t seed);

  // input (1, in_channels, H, W); H and W divisible by 2^levels.
  Tensor forward(const Tensor& input) const;

  const BlenderConfig& config() const { return cfg_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }

  void save_params(Checkpoint& ck, const std::string& prefix) const;
  void load_params(const Checkpoint& ck, const std::string& prefix);

 private:
  BlenderConfig cfg_;
  std::vector<int> enc_widths_;
  std::vector<int> dec_widths_;
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

}  // namespace sxf
