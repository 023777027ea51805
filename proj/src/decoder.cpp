// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/decoder.h"

#include <cmath>

#include "sxf/error.h"
#include "sxf/rng.h"

namespace sxf {

namespace {

Tensor uniform_param(Shape s, float bound, Rng& rng) {
  std::vector<float> v(s.numel());
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from_vector(s, std::move(v), true);
}

// Centered uniform with fan-in scaling.
Tensor conv_weight(int out_c, int in_c, int k, Rng& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_c * k * k));
  return uniform_param({out_c, in_c, k, k}, bound, rng);
}

Tensor conv_bias(int out_c, int fan_in, Rng& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
  return uniform_param({1, out_c, 1, 1}, bound, rng);
}

}  // namespace

void DecoderConfig::validate() const {
  if (capacity < 1 || out_channels < 1 || coord_dim < 1 || n_levels < 1)
    raise(ErrorCategory::domain, "decoder: capacity, out_channels, coord_dim and "
                                 "n_levels must all be positive");
  const int div = 1 << n_levels;
  if (out_height <= 0 || out_width <= 0 || out_height % div != 0 ||
      out_width % div != 0)
    raise(ErrorCategory::domain,
          "decoder: output " + std::to_string(out_width) + "x" +
              std::to_string(out_height) + " not divisible by 2^" +
              std::to_string(n_levels));
}

Decoder::Decoder(const DecoderConfig& cfg, const std::vector<float>& head_bias,
                 uint64_t seed) {
  cfg_ = cfg;
  cfg_.validate();
  if (!head_bias.empty() &&
      static_cast<int>(head_bias.size()) != cfg.out_channels)
    raise(ErrorCategory::shape, "decoder: " + std::to_string(head_bias.size()) +
                                    " head biases for " +
                                    std::to_string(cfg.out_channels) + " channels");
  build(seed, head_bias, false);
}

Decoder Decoder::with_zero_head(const DecoderConfig& cfg, uint64_t seed) {
  Decoder d;
  d.cfg_ = cfg;
  d.cfg_.validate();
  d.build(seed, {}, true);
  return d;
}

void Decoder::build(uint64_t seed, const std::vector<float>& head_bias,
                    bool zero_head) {
  Rng rng(seed, 0x6465636fULL);  // decoder stream

  const int c0 = cfg_.base_channels();
  widths_.assign(1, c0);
  for (int l = 0; l < cfg_.n_levels; ++l)
    widths_.push_back(std::max(widths_.back() / 2, cfg_.capacity));

  auto push = [&](const std::string& name, Tensor t) {
    names_.push_back(name);
    params_.push_back(std::move(t));
  };

  push("base_grid",
       uniform_param({1, c0, cfg_.grid_h(), cfg_.grid_w()}, 1.0f, rng));
  push("scale_head.weight", conv_weight(c0, cfg_.coord_dim, 1, rng));
  push("scale_head.bias", conv_bias(c0, cfg_.coord_dim, rng));
  push("bias_head.weight", conv_weight(c0, cfg_.coord_dim, 1, rng));
  push("bias_head.bias", conv_bias(c0, cfg_.coord_dim, rng));
  for (int l = 0; l < cfg_.n_levels; ++l) {
    const int cin = widths_[l], cout = widths_[l + 1];
    push("level" + std::to_string(l) + ".weight", conv_weight(cout, cin, 3, rng));
    push("level" + std::to_string(l) + ".bias", conv_bias(cout, cin * 9, rng));
  }
  const int clast = widths_.back();
  if (zero_head) {
    push("head.weight", Tensor::zeros({cfg_.out_channels, clast, 3, 3}, true));
    push("head.bias", Tensor::zeros({1, cfg_.out_channels, 1, 1}, true));
  } else {
    push("head.weight", conv_weight(cfg_.out_channels, clast, 3, rng));
    std::vector<float> hb(cfg_.out_channels, 0.0f);
    if (!head_bias.empty()) hb = head_bias;
    push("head.bias",
         Tensor::from_vector({1, cfg_.out_channels, 1, 1}, std::move(hb), true));
  }
}

Tensor Decoder::forward(const std::vector<float>& coord) const {
  if (static_cast<int>(coord.size()) != cfg_.coord_dim)
    raise(ErrorCategory::shape, "decoder: coordinate vector has " +
                                    std::to_string(coord.size()) + " values, expected " +
                                    std::to_string(cfg_.coord_dim));
  Tensor z = Tensor::from_vector({1, cfg_.coord_dim, 1, 1}, coord);

  size_t p = 0;
  const Tensor& base = params_[p++];
  const Tensor& sw = params_[p++];
  const Tensor& sb = params_[p++];
  const Tensor& bw = params_[p++];
  const Tensor& bb = params_[p++];

  Tensor scale = conv2d(z, sw, sb);
  Tensor offset = conv2d(z, bw, bb);
  Tensor h = channel_affine(base, scale, offset);
  for (int l = 0; l < cfg_.n_levels; ++l) {
    const Tensor& w = params_[p++];
    const Tensor& b = params_[p++];
    h = leaky_relu(conv2d(upsample_bilinear2x(h), w, b, 1, 1));
  }
  const Tensor& hw = params_[p++];
  const Tensor& hb = params_[p++];
  return conv2d(h, hw, hb, 1, 1);
}

void Decoder::save_params(Checkpoint& ck, const std::string& prefix) const {
  for (size_t i = 0; i < params_.size(); ++i) ck.put(prefix + names_[i], params_[i]);
}

void Decoder::load_params(const Checkpoint& ck, const std::string& prefix) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor t = ck.get(prefix + names_[i]);
    if (!(t.shape() == params_[i].shape()))
      raise(ErrorCategory::format, "decoder: checkpoint entry " + prefix +
                                       names_[i] + " has shape " + t.shape().str() +
                                       ", expected " + params_[i].shape().str());
    std::copy(t.data(), t.data() + t.numel(), params_[i].data());
  }
}

// ---- blender ------------------------------------------------------------

void BlenderConfig::validate() const {
  if (in_channels < 1 || levels < 1 || base_channels < 1)
    raise(ErrorCategory::domain, "blender: config values must be positive");
}

BlenderUNet::BlenderUNet(const BlenderConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed, 0x626c6e64ULL);  // blender stream

  // Encoder widths: stem plus `levels` stride-2 convs, capped at 8x base.
  enc_widths_.assign(1, cfg_.base_channels);
  for (int l = 1; l <= cfg_.levels; ++l)
    enc_widths_.push_back(std::min(cfg_.base_channels << l, cfg_.base_channels * 8));
  // Decoder mirrors the encoder; dec_widths_[l] is the output width of the
  // up-block landing on encoder level l.
  dec_widths_.resize(cfg_.levels);
  for (int l = 0; l < cfg_.levels; ++l)
    dec_widths_[l] = std::max(enc_widths_[l], cfg_.base_channels);

  auto push = [&](const std::string& name, Tensor t) {
    names_.push_back(name);
    params_.push_back(std::move(t));
  };

  push("stem.weight", conv_weight(enc_widths_[0], cfg_.in_channels, 3, rng));
  push("stem.bias", conv_bias(enc_widths_[0], cfg_.in_channels * 9, rng));
  for (int l = 1; l <= cfg_.levels; ++l) {
    push("enc" + std::to_string(l) + ".weight",
         conv_weight(enc_widths_[l], enc_widths_[l - 1], 3, rng));
    push("enc" + std::to_string(l) + ".bias",
         conv_bias(enc_widths_[l], enc_widths_[l - 1] * 9, rng));
  }
  for (int l = cfg_.levels - 1; l >= 0; --l) {
    const int cin = (l + 1 == cfg_.levels ? enc_widths_[cfg_.levels]
                                          : dec_widths_[l + 1]) +
                    enc_widths_[l];
    push("dec" + std::to_string(l) + ".weight", conv_weight(dec_widths_[l], cin, 3, rng));
    push("dec" + std::to_string(l) + ".bias", conv_bias(dec_widths_[l], cin * 9, rng));
  }
  push("head.weight", conv_weight(1, dec_widths_[0], 3, rng));
  push("head.bias", conv_bias(1, dec_widths_[0] * 9, rng));
}

Tensor BlenderUNet::forward(const Tensor& input) const {
  const Shape& s = input.shape();
  if (s.c != cfg_.in_channels)
    raise(ErrorCategory::shape, "blender: input " + s.str() + " must have " +
                                    std::to_string(cfg_.in_channels) + " channels");
  const int div = 1 << cfg_.levels;
  if (s.h % div != 0 || s.w % div != 0)
    raise(ErrorCategory::shape, "blender: input " + s.str() +
                                    " not divisible by 2^" + std::to_string(cfg_.levels));

  size_t p = 0;
  auto conv_block = [&](const Tensor& x, int stride) {
    const Tensor& w = params_[p++];
    const Tensor& b = params_[p++];
    return leaky_relu(conv2d(x, w, b, stride, 1));
  };

  std::vector<Tensor> skips;
  Tensor h = conv_block(input, 1);
  skips.push_back(h);
  for (int l = 1; l <= cfg_.levels; ++l) {
    h = conv_block(h, 2);
    if (l < cfg_.levels) skips.push_back(h);
  }
  for (int l = cfg_.levels - 1; l >= 0; --l)
    h = conv_block(concat_channels({upsample_bilinear2x(h), skips[l]}), 1);
  const Tensor& hw = params_[p++];
  const Tensor& hb = params_[p++];
  return sigmoid(conv2d(h, hw, hb, 1, 1));
}

void BlenderUNet::save_params(Checkpoint& ck, const std::string& prefix) const {
  for (size_t i = 0; i < params_.size(); ++i) ck.put(prefix + names_[i], params_[i]);
}

void BlenderUNet::load_params(const Checkpoint& ck, const std::string& prefix) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor t = ck.get(prefix + names_[i]);
    if (!(t.shape() == params_[i].shape()))
      raise(ErrorCategory::format, "blender: checkpoint entry " + prefix +
                                       names_[i] + " has shape " + t.shape().str() +
                                       ", expected " + params_[i].shape().str());
    std::copy(t.data(), t.data() + t.numel(), params_[i].data());
  }
}

}  // namespace sxf
