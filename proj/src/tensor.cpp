// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/tensor.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sxf/error.h"
#include "sxf/kernels.h"

namespace sxf {

using detail::Node;

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

namespace {

thread_local bool t_grad_enabled = true;

std::shared_ptr<Node> make_node(Shape s) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->values.resize(s.numel());
  return n;
}

// Attaches graph edges when autodiff is active and any parent needs grad.
Tensor finish_op(std::shared_ptr<Node> out,
                 std::vector<std::shared_ptr<Node>> parents,
                 std::function<void(Node&)> backward_fn) {
  bool needs = false;
  if (t_grad_enabled)
    for (const auto& p : parents) needs = needs || p->requires_grad;
  if (needs) {
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward_fn = std::move(backward_fn);
  }
  return wrap_node(std::move(out));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!(a.shape() == b.shape()))
    raise(ErrorCategory::shape, std::string(what) + ": shape mismatch " +
                                    a.shape().str() + " vs " + b.shape().str());
}

void check_image(const Tensor& t, const char* what) {
  if (t.shape().n != 1)
    raise(ErrorCategory::shape,
          std::string(what) + ": batch extent must be 1, got " + t.shape().str());
}

inline void accumulate(Node* p, size_t i, float v) {
  if (p->requires_grad) p->grad[i] += v;
}

}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor wrap_node(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

Tensor Tensor::zeros(Shape s, bool requires_grad) {
  auto n = make_node(s);
  n->requires_grad = requires_grad;
  return wrap_node(std::move(n));
}

Tensor Tensor::full(Shape s, float value, bool requires_grad) {
  auto n = make_node(s);
  std::fill(n->values.begin(), n->values.end(), value);
  n->requires_grad = requires_grad;
  return wrap_node(std::move(n));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return full(Shape{1, 1, 1, 1}, value, requires_grad);
}

Tensor Tensor::from_vector(Shape s, std::vector<float> data, bool requires_grad) {
  if (data.size() != s.numel())
    raise(ErrorCategory::shape, "from_vector: " + std::to_string(data.size()) +
                                    " values for shape " + s.str());
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->values = std::move(data);
  n->requires_grad = requires_grad;
  return wrap_node(std::move(n));
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->values.size(), 0.0f);
}

float Tensor::item() const {
  if (numel() != 1)
    raise(ErrorCategory::shape, "item() on non-scalar " + shape().str());
  return node_->values[0];
}

float Tensor::at(int n, int c, int y, int x) const {
  const Shape& s = node_->shape;
  return node_->values[((static_cast<size_t>(n) * s.c + c) * s.h + y) * s.w + x];
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->values = node_->values;
  return wrap_node(std::move(n));
}

void Tensor::backward() const {
  if (!node_) raise(ErrorCategory::internal, "backward() on undefined tensor");
  if (numel() != 1)
    raise(ErrorCategory::shape, "backward() root must be scalar, got " + shape().str());
  if (!node_->requires_grad)
    raise(ErrorCategory::internal, "backward() on a tensor with no grad path");

  // Topological order via iterative DFS; only grad-requiring nodes matter.
  std::vector<Node*> order;
  std::unordered_set<Node*> done;
  struct Frame {
    Node* node;
    size_t next;
  };
  std::vector<Frame> stack{{node_.get(), 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (done.count(f.node)) {
      stack.pop_back();
      continue;
    }
    if (f.next < f.node->parents.size()) {
      Node* p = f.node->parents[f.next++].get();
      if (p->requires_grad && !done.count(p)) stack.push_back({p, 0});
    } else {
      done.insert(f.node);
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.assign(n->values.size(), 0.0f);
  node_->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---- elementwise ------------------------------------------------------------

namespace {

Tensor binary_op(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "elementwise");
  auto out = make_node(a.shape());
  const size_t n = a.numel();
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out->values.data();
  switch (op) {
    case ElementwiseOp::add:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
      break;
    case ElementwiseOp::sub:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
      break;
    case ElementwiseOp::mul:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
      break;
    case ElementwiseOp::div:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
      break;
    case ElementwiseOp::max2:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] >= pb[i] ? pa[i] : pb[i];
      break;
    case ElementwiseOp::abs:
      raise(ErrorCategory::internal, "abs is unary");
  }
  return finish_op(out, {a.node(), b.node()}, [op, n](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    const float* g = self.grad.data();
    switch (op) {
      case ElementwiseOp::add:
        for (size_t i = 0; i < n; ++i) {
          accumulate(pa, i, g[i]);
          accumulate(pb, i, g[i]);
        }
        break;
      case ElementwiseOp::sub:
        for (size_t i = 0; i < n; ++i) {
          accumulate(pa, i, g[i]);
          accumulate(pb, i, -g[i]);
        }
        break;
      case ElementwiseOp::mul:
        for (size_t i = 0; i < n; ++i) {
          accumulate(pa, i, g[i] * pb->values[i]);
          accumulate(pb, i, g[i] * pa->values[i]);
        }
        break;
      case ElementwiseOp::div:
        for (size_t i = 0; i < n; ++i) {
          const float bi = pb->values[i];
          accumulate(pa, i, g[i] / bi);
          accumulate(pb, i, -g[i] * pa->values[i] / (bi * bi));
        }
        break;
      case ElementwiseOp::max2:
        for (size_t i = 0; i < n; ++i) {
          if (pa->values[i] >= pb->values[i])
            accumulate(pa, i, g[i]);
          else
            accumulate(pb, i, g[i]);
        }
        break;
      case ElementwiseOp::abs:
        break;
    }
  });
}

Tensor scalar_op(ElementwiseOp op, const Tensor& a, float b) {
  auto out = make_node(a.shape());
  const size_t n = a.numel();
  const float* pa = a.data();
  float* po = out->values.data();
  switch (op) {
    case ElementwiseOp::add:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] + b;
      break;
    case ElementwiseOp::sub:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] - b;
      break;
    case ElementwiseOp::mul:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] * b;
      break;
    case ElementwiseOp::div:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] / b;
      break;
    case ElementwiseOp::max2:
      for (size_t i = 0; i < n; ++i) po[i] = pa[i] >= b ? pa[i] : b;
      break;
    case ElementwiseOp::abs:
      raise(ErrorCategory::internal, "abs is unary");
  }
  return finish_op(out, {a.node()}, [op, b, n](Node& self) {
    Node* pa = self.parents[0].get();
    if (!pa->requires_grad) return;
    const float* g = self.grad.data();
    switch (op) {
      case ElementwiseOp::add:
      case ElementwiseOp::sub:
        for (size_t i = 0; i < n; ++i) pa->grad[i] += g[i];
        break;
      case ElementwiseOp::mul:
        for (size_t i = 0; i < n; ++i) pa->grad[i] += g[i] * b;
        break;
      case ElementwiseOp::div:
        for (size_t i = 0; i < n; ++i) pa->grad[i] += g[i] / b;
        break;
      case ElementwiseOp::max2:
        for (size_t i = 0; i < n; ++i)
          if (pa->values[i] >= b) pa->grad[i] += g[i];
        break;
      case ElementwiseOp::abs:
        break;
    }
  });
}

}  // namespace

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  if (op == ElementwiseOp::abs) return abs(a);
  return binary_op(op, a, b);
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, float b) {
  if (op == ElementwiseOp::abs) return abs(a);
  return scalar_op(op, a, b);
}

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(ElementwiseOp::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(ElementwiseOp::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(ElementwiseOp::mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(ElementwiseOp::div, a, b); }
Tensor add(const Tensor& a, float b) { return scalar_op(ElementwiseOp::add, a, b); }
Tensor sub(const Tensor& a, float b) { return scalar_op(ElementwiseOp::sub, a, b); }
Tensor mul(const Tensor& a, float b) { return scalar_op(ElementwiseOp::mul, a, b); }
Tensor div(const Tensor& a, float b) { return scalar_op(ElementwiseOp::div, a, b); }
Tensor max2(const Tensor& a, const Tensor& b) { return binary_op(ElementwiseOp::max2, a, b); }

Tensor abs(const Tensor& a) {
  auto out = make_node(a.shape());
  const size_t n = a.numel();
  const float* pa = a.data();
  float* po = out->values.data();
  for (size_t i = 0; i < n; ++i) po[i] = std::abs(pa[i]);
  return finish_op(out, {a.node()}, [n](Node& self) {
    Node* pa = self.parents[0].get();
    if (!pa->requires_grad) return;
    const float* g = self.grad.data();
    for (size_t i = 0; i < n; ++i) {
      const float v = pa->values[i];
      if (v > 0.0f)
        pa->grad[i] += g[i];
      else if (v < 0.0f)
        pa->grad[i] -= g[i];
    }
  });
}

// ---- activations ------------------------------------------------------------

Tensor leaky_relu(const Tensor& x, float slope) {
  auto out = make_node(x.shape());
  const size_t n = x.numel();
  const float* px = x.data();
  float* po = out->values.data();
  for (size_t i = 0; i < n; ++i) po[i] = px[i] > 0.0f ? px[i] : slope * px[i];
  return finish_op(out, {x.node()}, [n, slope](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    const float* g = self.grad.data();
    for (size_t i = 0; i < n; ++i)
      p->grad[i] += p->values[i] > 0.0f ? g[i] : slope * g[i];
  });
}

Tensor sigmoid(const Tensor& x) {
  auto out = make_node(x.shape());
  const size_t n = x.numel();
  const float* px = x.data();
  float* po = out->values.data();
  for (size_t i = 0; i < n; ++i) po[i] = 1.0f / (1.0f + std::exp(-px[i]));
  return finish_op(out, {x.node()}, [n](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    const float* g = self.grad.data();
    const float* y = self.values.data();
    for (size_t i = 0; i < n; ++i) p->grad[i] += g[i] * y[i] * (1.0f - y[i]);
  });
}

Tensor tanh(const Tensor& x) {
  auto out = make_node(x.shape());
  const size_t n = x.numel();
  const float* px = x.data();
  float* po = out->values.data();
  for (size_t i = 0; i < n; ++i) po[i] = std::tanh(px[i]);
  return finish_op(out, {x.node()}, [n](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    const float* g = self.grad.data();
    const float* y = self.values.data();
    for (size_t i = 0; i < n; ++i) p->grad[i] += g[i] * (1.0f - y[i] * y[i]);
  });
}

Tensor activation(Activation kind, const Tensor& x) {
  switch (kind) {
    case Activation::leaky_relu:
      return leaky_relu(x);
    case Activation::sigmoid:
      return sigmoid(x);
    case Activation::tanh:
      return tanh(x);
  }
  raise(ErrorCategory::internal, "unknown activation");
}

// ---- conv2d -----------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
  check_image(input, "conv2d");
  if (stride <= 0)
    raise(ErrorCategory::domain, "conv2d: stride must be positive, got " +
                                     std::to_string(stride));
  if (padding < 0)
    raise(ErrorCategory::domain, "conv2d: padding must be non-negative");
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (ws.c != is.c)
    raise(ErrorCategory::shape, "conv2d: input channels " + is.str() +
                                    " do not match weight " + ws.str());
  const bool has_bias = bias.defined();
  if (has_bias && static_cast<int>(bias.numel()) != ws.n)
    raise(ErrorCategory::shape, "conv2d: bias " + bias.shape().str() +
                                    " does not match out channels " +
                                    std::to_string(ws.n));

  kernels::Conv2dDims d;
  d.in_channels = is.c;
  d.out_channels = ws.n;
  d.in_h = is.h;
  d.in_w = is.w;
  d.kernel_h = ws.h;
  d.kernel_w = ws.w;
  d.stride = stride;
  d.pad = padding;
  d.out_h = (is.h + 2 * padding - ws.h) / stride + 1;
  d.out_w = (is.w + 2 * padding - ws.w) / stride + 1;
  if (d.out_h <= 0 || d.out_w <= 0)
    raise(ErrorCategory::shape, "conv2d: empty output for input " + is.str() +
                                    " weight " + ws.str());

  auto out = make_node(Shape{1, d.out_channels, d.out_h, d.out_w});
  kernels::conv2d_forward(input.data(), weight.data(),
                          has_bias ? bias.data() : nullptr, out->values.data(), d);

  std::vector<std::shared_ptr<Node>> parents = {input.node(), weight.node()};
  if (has_bias) parents.push_back(bias.node());
  return finish_op(out, std::move(parents), [d, has_bias](Node& self) {
    Node* in = self.parents[0].get();
    Node* w = self.parents[1].get();
    const float* g = self.grad.data();
    if (in->requires_grad)
      kernels::conv2d_backward_input(w->values.data(), g, in->grad.data(), d);
    if (w->requires_grad)
      kernels::conv2d_backward_weight(in->values.data(), g, w->grad.data(), d);
    if (has_bias) {
      Node* b = self.parents[2].get();
      if (b->requires_grad) kernels::conv2d_backward_bias(g, b->grad.data(), d);
    }
  });
}

// ---- upsample ---------------------------------------------------------------

Tensor upsample_bilinear2x(const Tensor& input) {
  check_image(input, "upsample_bilinear2x");
  const Shape& s = input.shape();
  auto out = make_node(Shape{1, s.c, 2 * s.h, 2 * s.w});
  kernels::upsample2x_forward(input.data(), out->values.data(), s.c, s.h, s.w);
  return finish_op(out, {input.node()}, [s](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    kernels::upsample2x_backward(self.grad.data(), p->grad.data(), s.c, s.h, s.w);
  });
}

// ---- grid sample ------------------------------------------------------------

Tensor grid_sample_bilinear(const Tensor& source, const Tensor& sample_x,
                            const Tensor& sample_y) {
  check_image(source, "grid_sample_bilinear");
  if (!(sample_x.shape() == sample_y.shape()))
    raise(ErrorCategory::shape, "grid_sample_bilinear: coordinate maps differ " +
                                    sample_x.shape().str() + " vs " +
                                    sample_y.shape().str());
  if (sample_x.shape().c != 1 || sample_x.shape().n != 1)
    raise(ErrorCategory::shape, "grid_sample_bilinear: coordinate map must be "
                                "single-channel, got " + sample_x.shape().str());
  const Shape& ss = source.shape();
  const Shape& cs = sample_x.shape();
  auto out = make_node(Shape{1, ss.c, cs.h, cs.w});
  kernels::grid_sample_forward(source.data(), sample_x.data(), sample_y.data(),
                               out->values.data(), ss.c, ss.h, ss.w, cs.h, cs.w);
  return finish_op(
      out, {source.node(), sample_x.node(), sample_y.node()}, [ss, cs](Node& self) {
        Node* src = self.parents[0].get();
        Node* sx = self.parents[1].get();
        Node* sy = self.parents[2].get();
        const float* g = self.grad.data();
        if (src->requires_grad)
          kernels::grid_sample_backward_src(g, sx->values.data(), sy->values.data(),
                                            src->grad.data(), ss.c, ss.h, ss.w,
                                            cs.h, cs.w);
        if (sx->requires_grad || sy->requires_grad) {
          // Route into scratch when only one map needs grads.
          std::vector<float> dump;
          float* gx = sx->requires_grad ? sx->grad.data() : nullptr;
          float* gy = sy->requires_grad ? sy->grad.data() : nullptr;
          if (!gx || !gy) {
            dump.assign(cs.numel(), 0.0f);
            if (!gx) gx = dump.data();
            if (!gy) gy = dump.data();
          }
          kernels::grid_sample_backward_coords(src->values.data(), g,
                                               sx->values.data(), sy->values.data(),
                                               gx, gy, ss.c, ss.h, ss.w, cs.h, cs.w);
        }
      });
}

// ---- channel max ------------------------------------------------------------

ChannelMax channel_max(const Tensor& input) {
  check_image(input, "channel_max");
  const Shape& s = input.shape();
  if (s.c < 1) raise(ErrorCategory::shape, "channel_max: needs at least one channel");
  const size_t plane = static_cast<size_t>(s.h) * s.w;
  auto out = make_node(Shape{1, 1, s.h, s.w});
  auto argmax = std::make_shared<std::vector<int>>(plane);
  const float* pi = input.data();
  float* po = out->values.data();
  for (size_t p = 0; p < plane; ++p) {
    int best = 0;
    float bv = pi[p];
    for (int k = 1; k < s.c; ++k) {
      const float v = pi[k * plane + p];
      if (v > bv) {  // strict: ties stay at the lowest index
        bv = v;
        best = k;
      }
    }
    po[p] = bv;
    (*argmax)[p] = best;
  }
  Tensor values = finish_op(out, {input.node()}, [plane, argmax](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    const float* g = self.grad.data();
    for (size_t i = 0; i < plane; ++i)
      p->grad[static_cast<size_t>((*argmax)[i]) * plane + i] += g[i];
  });
  return ChannelMax{values, argmax};
}

// ---- concat / narrow / channel affine ----------------------------------------

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) raise(ErrorCategory::shape, "concat_channels: no inputs");
  const Shape& first = parts[0].shape();
  int total_c = 0;
  for (const auto& t : parts) {
    check_image(t, "concat_channels");
    if (t.shape().h != first.h || t.shape().w != first.w)
      raise(ErrorCategory::shape, "concat_channels: spatial mismatch " +
                                      t.shape().str() + " vs " + first.str());
    total_c += t.shape().c;
  }
  const size_t plane = static_cast<size_t>(first.h) * first.w;
  auto out = make_node(Shape{1, total_c, first.h, first.w});
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(parts.size());
  size_t off = 0;
  for (const auto& t : parts) {
    std::copy(t.data(), t.data() + t.numel(), out->values.data() + off);
    off += t.numel();
    parents.push_back(t.node());
  }
  return finish_op(out, std::move(parents), [plane](Node& self) {
    const float* g = self.grad.data();
    size_t off = 0;
    for (auto& pp : self.parents) {
      Node* p = pp.get();
      const size_t n = p->values.size();
      if (p->requires_grad)
        for (size_t i = 0; i < n; ++i) p->grad[i] += g[off + i];
      off += n;
    }
    (void)plane;
  });
}

Tensor narrow_channels(const Tensor& input, int start, int count) {
  check_image(input, "narrow_channels");
  const Shape& s = input.shape();
  if (start < 0 || count < 1 || start + count > s.c)
    raise(ErrorCategory::shape, "narrow_channels: range [" + std::to_string(start) +
                                    ", " + std::to_string(start + count) +
                                    ") outside " + s.str());
  const size_t plane = static_cast<size_t>(s.h) * s.w;
  auto out = make_node(Shape{1, count, s.h, s.w});
  std::copy(input.data() + start * plane, input.data() + (start + count) * plane,
            out->values.data());
  return finish_op(out, {input.node()}, [start, count, plane](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    const float* g = self.grad.data();
    float* gp = p->grad.data() + static_cast<size_t>(start) * plane;
    for (size_t i = 0; i < static_cast<size_t>(count) * plane; ++i) gp[i] += g[i];
  });
}

Tensor channel_affine(const Tensor& grid, const Tensor& scale, const Tensor& bias) {
  check_image(grid, "channel_affine");
  const Shape& s = grid.shape();
  const Shape want{1, s.c, 1, 1};
  if (!(scale.shape() == want) || !(bias.shape() == want))
    raise(ErrorCategory::shape, "channel_affine: scale " + scale.shape().str() +
                                    " / bias " + bias.shape().str() +
                                    " must be " + want.str());
  const size_t plane = static_cast<size_t>(s.h) * s.w;
  auto out = make_node(s);
  const float* pg = grid.data();
  const float* ps = scale.data();
  const float* pb = bias.data();
  float* po = out->values.data();
  for (int k = 0; k < s.c; ++k)
    for (size_t i = 0; i < plane; ++i)
      po[k * plane + i] = pg[k * plane + i] * ps[k] + pb[k];
  return finish_op(out, {grid.node(), scale.node(), bias.node()},
                   [s, plane](Node& self) {
                     Node* grid = self.parents[0].get();
                     Node* scale = self.parents[1].get();
                     Node* bias = self.parents[2].get();
                     const float* g = self.grad.data();
                     if (grid->requires_grad)
                       for (int k = 0; k < s.c; ++k) {
                         const float sk = scale->values[k];
                         for (size_t i = 0; i < plane; ++i)
                           grid->grad[k * plane + i] += g[k * plane + i] * sk;
                       }
                     if (scale->requires_grad)
                       for (int k = 0; k < s.c; ++k)
                         scale->grad[k] += static_cast<float>(kernels::block_sum_mul(
                             g + k * plane, grid->values.data() + k * plane, plane));
                     if (bias->requires_grad)
                       for (int k = 0; k < s.c; ++k)
                         bias->grad[k] += static_cast<float>(
                             kernels::block_sum(g + k * plane, plane));
                   });
}

Tensor shift_channels(const Tensor& input, const std::vector<float>& shifts) {
  check_image(input, "shift_channels");
  const Shape& s = input.shape();
  if (static_cast<int>(shifts.size()) != s.c)
    raise(ErrorCategory::shape, "shift_channels: " + std::to_string(shifts.size()) +
                                    " shifts for " + s.str());
  auto out = make_node(s);
  kernels::shift_channels_forward(input.data(), shifts.data(), out->values.data(),
                                  s.c, s.h, s.w);
  return finish_op(out, {input.node()}, [s, shifts](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    kernels::shift_channels_backward(self.grad.data(), shifts.data(),
                                     p->grad.data(), s.c, s.h, s.w);
  });
}

// ---- reductions -------------------------------------------------------------

Tensor reduce(Reduce kind, const Tensor& input, const Tensor& mask) {
  const size_t n = input.numel();
  const bool masked = mask.defined();
  if (masked) check_same_shape(input, mask, "reduce mask");

  double denom;
  double total;
  if (masked) {
    denom = std::max(kernels::block_sum(mask.data(), n), 1.0);
    total = kind == Reduce::mean_abs
                ? kernels::block_sum_abs_mul(input.data(), mask.data(), n)
                : kernels::block_sum_mul(input.data(), mask.data(), n);
  } else {
    denom = static_cast<double>(n);
    total = kind == Reduce::mean_abs ? kernels::block_sum_abs(input.data(), n)
                                     : kernels::block_sum(input.data(), n);
  }

  auto out = make_node(Shape{1, 1, 1, 1});
  out->values[0] = static_cast<float>(total / denom);

  // The mask is a constant: kept alive by the closure, no gradient into it.
  auto mask_node = masked ? mask.node() : nullptr;
  return finish_op(out, {input.node()}, [kind, n, denom, mask_node](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    const float scale = static_cast<float>(self.grad[0] / denom);
    const float* m = mask_node ? mask_node->values.data() : nullptr;
    if (kind == Reduce::mean) {
      for (size_t i = 0; i < n; ++i) p->grad[i] += scale * (m ? m[i] : 1.0f);
    } else {
      for (size_t i = 0; i < n; ++i) {
        const float v = p->values[i];
        const float sign = v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
        p->grad[i] += scale * sign * (m ? m[i] : 1.0f);
      }
    }
  });
}

Tensor mean(const Tensor& input, const Tensor& mask) {
  return reduce(Reduce::mean, input, mask);
}

Tensor mean_abs(const Tensor& input, const Tensor& mask) {
  return reduce(Reduce::mean_abs, input, mask);
}

}  // namespace sxf
