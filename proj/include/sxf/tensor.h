// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sxf {

// All tensors are dense 32-bit float, rank 4, NCHW. Coordinate vectors are
// (1, d, 1, 1); scalars are (1, 1, 1, 1). Batch is always 1 for image ops.
struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  size_t numel() const {
    return static_cast<size_t>(n) * c * static_cast<size_t>(h) * w;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> values;
  std::vector<float> grad;  // sized lazily during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grad buffers.
  std::function<void(Node&)> backward_fn;
};

}  // namespace detail

// Reverse-mode autodiff is recorded only while grads are enabled (thread
// local, so independent optimization runs can share a process).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape s, bool requires_grad = false);
  static Tensor full(Shape s, float value, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);
  static Tensor from_vector(Shape s, std::vector<float> data,
                            bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  size_t numel() const { return node_->shape.numel(); }

  float* data() { return node_->values.data(); }
  const float* data() const { return node_->values.data(); }
  const std::vector<float>& values() const { return node_->values; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  // Null until a backward pass has populated it.
  const float* grad() const {
    return node_->grad.empty() ? nullptr : node_->grad.data();
  }
  float* grad_data() { return node_->grad.empty() ? nullptr : node_->grad.data(); }
  void zero_grad();

  float item() const;
  float at(int n, int c, int y, int x) const;

  // Runs reverse-mode accumulation from this scalar. Grad buffers of every
  // reachable node that requires grad are (re)initialized to zero first, so
  // leaves end fully populated.
  void backward() const;

  // Data-only copy sharing no graph state.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor wrap_node(std::shared_ptr<detail::Node>);
};

Tensor wrap_node(std::shared_ptr<detail::Node> n);

// ---- elementwise ------------------------------------------------------------

enum class ElementwiseOp { add, sub, mul, div, abs, max2 };

// Generic dispatcher; abs ignores b. Tensor-tensor form requires equal shapes.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);
Tensor elementwise(ElementwiseOp op, const Tensor& a, float b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, float b);
Tensor sub(const Tensor& a, float b);
Tensor mul(const Tensor& a, float b);
Tensor div(const Tensor& a, float b);
Tensor abs(const Tensor& a);
Tensor max2(const Tensor& a, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, float b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, float b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, float b) { return mul(a, b); }
inline Tensor operator*(float a, const Tensor& b) { return mul(b, a); }
inline Tensor operator/(const Tensor& a, float b) { return div(a, b); }

// ---- activations ------------------------------------------------------------

enum class Activation { leaky_relu, sigmoid, tanh };

Tensor activation(Activation kind, const Tensor& x);
Tensor leaky_relu(const Tensor& x, float slope = 0.2f);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

// ---- structure ops ----------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int padding = 0);
Tensor upsample_bilinear2x(const Tensor& input);
Tensor grid_sample_bilinear(const Tensor& source, const Tensor& sample_x,
                            const Tensor& sample_y);

struct ChannelMax {
  Tensor values;                 // (1, 1, h, w)
  std::shared_ptr<std::vector<int>> argmax;  // winning channel per pixel
};
// Per-pixel max over channels; gradient routes to the argmax channel only,
// ties broken toward the lowest channel index.
ChannelMax channel_max(const Tensor& input);

Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor narrow_channels(const Tensor& input, int start, int count);
// out[c] = grid[c] * scale[c] + bias[c], scale/bias shaped (1, c, 1, 1).
Tensor channel_affine(const Tensor& grid, const Tensor& scale,
                      const Tensor& bias);
// Per-channel horizontal shift (positive = content moves left), linear
// interpolation, edge replication.
Tensor shift_channels(const Tensor& input, const std::vector<float>& shifts);
inline Tensor shift_plane(const Tensor& plane, float shift_px) {
  return shift_channels(plane, {shift_px});
}

// ---- reductions -------------------------------------------------------------

enum class Reduce { mean, mean_abs };

// Masked means divide by sum(mask) floored at 1; the mask is a constant
// (no gradient flows into it).
Tensor reduce(Reduce kind, const Tensor& input, const Tensor& mask = Tensor());
Tensor mean(const Tensor& input, const Tensor& mask = Tensor());
Tensor mean_abs(const Tensor& input, const Tensor& mask = Tensor());

}  // namespace sxf
