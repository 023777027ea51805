// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/kernels.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sxf::kernels {

namespace {
int g_max_threads = 0;  // 0 = library default
}

void set_max_threads(int n) {
  g_max_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

// ---- conv2d ----------------------------------------------------------------

void conv2d_forward(const float* in, const float* weight, const float* bias,
                    float* out, const Conv2dDims& d) {
  const int IC = d.in_channels, OC = d.out_channels;
  const int H = d.in_h, W = d.in_w, KH = d.kernel_h, KW = d.kernel_w;
  const int S = d.stride, P = d.pad, OH = d.out_h, OW = d.out_w;

  if (S == 1) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < OC; ++oc) {
      for (int oy = 0; oy < OH; ++oy) {
        float* orow = out + (static_cast<size_t>(oc) * OH + oy) * OW;
        const float b = bias ? bias[oc] : 0.0f;
        for (int ox = 0; ox < OW; ++ox) orow[ox] = b;
        for (int ic = 0; ic < IC; ++ic) {
          for (int ky = 0; ky < KH; ++ky) {
            const int iy = oy + ky - P;
            if (iy < 0 || iy >= H) continue;
            const float* irow = in + (static_cast<size_t>(ic) * H + iy) * W;
            const float* wrow =
                weight + ((static_cast<size_t>(oc) * IC + ic) * KH + ky) * KW;
            for (int kx = 0; kx < KW; ++kx) {
              const float wv = wrow[kx];
              const int off = kx - P;
              const int lo = std::max(0, -off);
              const int hi = std::min(OW, W - off);
              const float* ir = irow + off;
              for (int ox = lo; ox < hi; ++ox) orow[ox] += wv * ir[ox];
            }
          }
        }
      }
    }
    return;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < OC; ++oc) {
    for (int oy = 0; oy < OH; ++oy) {
      float* orow = out + (static_cast<size_t>(oc) * OH + oy) * OW;
      for (int ox = 0; ox < OW; ++ox) {
        float acc = bias ? bias[oc] : 0.0f;
        for (int ic = 0; ic < IC; ++ic) {
          const float* iplane = in + static_cast<size_t>(ic) * H * W;
          const float* wk =
              weight + (static_cast<size_t>(oc) * IC + ic) * KH * KW;
          for (int ky = 0; ky < KH; ++ky) {
            const int iy = oy * S + ky - P;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < KW; ++kx) {
              const int ix = ox * S + kx - P;
              if (ix < 0 || ix >= W) continue;
              acc += wk[ky * KW + kx] * iplane[iy * W + ix];
            }
          }
        }
        orow[ox] = acc;
      }
    }
  }
}

void conv2d_backward_input(const float* weight, const float* gout, float* gin,
                           const Conv2dDims& d) {
  const int IC = d.in_channels, OC = d.out_channels;
  const int H = d.in_h, W = d.in_w, KH = d.kernel_h, KW = d.kernel_w;
  const int S = d.stride, P = d.pad, OH = d.out_h, OW = d.out_w;

  if (S == 1) {
    // Full correlation with the flipped kernel; same row structure as forward.
#pragma omp parallel for collapse(2) schedule(static)
    for (int ic = 0; ic < IC; ++ic) {
      for (int iy = 0; iy < H; ++iy) {
        float* grow = gin + (static_cast<size_t>(ic) * H + iy) * W;
        for (int oc = 0; oc < OC; ++oc) {
          for (int ky = 0; ky < KH; ++ky) {
            const int oy = iy - ky + P;
            if (oy < 0 || oy >= OH) continue;
            const float* gorow =
                gout + (static_cast<size_t>(oc) * OH + oy) * OW;
            const float* wrow =
                weight + ((static_cast<size_t>(oc) * IC + ic) * KH + ky) * KW;
            for (int kx = 0; kx < KW; ++kx) {
              const float wv = wrow[kx];
              const int off = P - kx;  // ox = ix + off
              const int lo = std::max(0, -off);
              const int hi = std::min(W, OW - off);
              const float* gr = gorow + off;
              for (int ix = lo; ix < hi; ++ix) grow[ix] += wv * gr[ix];
            }
          }
        }
      }
    }
    return;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int ic = 0; ic < IC; ++ic) {
    for (int iy = 0; iy < H; ++iy) {
      float* grow = gin + (static_cast<size_t>(ic) * H + iy) * W;
      for (int ix = 0; ix < W; ++ix) {
        float acc = 0.0f;
        for (int oc = 0; oc < OC; ++oc) {
          const float* gplane = gout + static_cast<size_t>(oc) * OH * OW;
          const float* wk =
              weight + (static_cast<size_t>(oc) * IC + ic) * KH * KW;
          for (int ky = 0; ky < KH; ++ky) {
            const int ny = iy + P - ky;
            if (ny < 0 || ny % S != 0) continue;
            const int oy = ny / S;
            if (oy >= OH) continue;
            for (int kx = 0; kx < KW; ++kx) {
              const int nx = ix + P - kx;
              if (nx < 0 || nx % S != 0) continue;
              const int ox = nx / S;
              if (ox >= OW) continue;
              acc += wk[ky * KW + kx] * gplane[oy * OW + ox];
            }
          }
        }
        grow[ix] += acc;
      }
    }
  }
}

void conv2d_backward_weight(const float* in, const float* gout, float* gweight,
                            const Conv2dDims& d) {
  const int IC = d.in_channels, OC = d.out_channels;
  const int H = d.in_h, W = d.in_w, KH = d.kernel_h, KW = d.kernel_w;
  const int S = d.stride, P = d.pad, OH = d.out_h, OW = d.out_w;
  constexpr int kLanes = 16;

  constexpr int kMaxTaps = 16;  // enough for the 3x3 and 1x1 kernels used here
  const bool small_kernel = KH * KW <= kMaxTaps;

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < OC; ++oc) {
    for (int ic = 0; ic < IC; ++ic) {
      // One scan over the output accumulates all KH*KW taps of this
      // channel pair; 16-lane blocks keep the sum order fixed.
      float stack_acc[kMaxTaps * kLanes];
      std::vector<float> heap_acc;
      float* acc_buf;
      if (small_kernel) {
        std::memset(stack_acc, 0, sizeof(stack_acc));
        acc_buf = stack_acc;
      } else {
        heap_acc.assign(static_cast<size_t>(KH) * KW * kLanes, 0.0f);
        acc_buf = heap_acc.data();
      }
      for (int oy = 0; oy < OH; ++oy) {
        const float* gorow = gout + (static_cast<size_t>(oc) * OH + oy) * OW;
        for (int ky = 0; ky < KH; ++ky) {
          const int iy = oy * S + ky - P;
          if (iy < 0 || iy >= H) continue;
          const float* irow = in + (static_cast<size_t>(ic) * H + iy) * W;
          for (int kx = 0; kx < KW; ++kx) {
            float* a = acc_buf + (static_cast<size_t>(ky) * KW + kx) * kLanes;
            if (S == 1) {
              const int off = kx - P;
              const int lo = std::max(0, -off);
              const int hi = std::min(OW, W - off);
              const float* ir = irow + off;
              int ox = lo;
              for (; ox + kLanes <= hi; ox += kLanes)
                for (int j = 0; j < kLanes; ++j) a[j] += gorow[ox + j] * ir[ox + j];
              for (int j = 0; ox < hi; ++ox, ++j) a[j] += gorow[ox] * ir[ox];
            } else {
              int lane = 0;
              for (int ox = 0; ox < OW; ++ox) {
                const int ix = ox * S + kx - P;
                if (ix < 0 || ix >= W) continue;
                a[lane] += gorow[ox] * irow[ix];
                lane = (lane + 1) % kLanes;
              }
            }
          }
        }
      }
      float* gw = gweight + (static_cast<size_t>(oc) * IC + ic) * KH * KW;
      for (int t = 0; t < KH * KW; ++t) {
        const float* a = acc_buf + static_cast<size_t>(t) * kLanes;
        float s = 0.0f;
        for (int j = 0; j < kLanes; ++j) s += a[j];
        gw[t] += s;
      }
    }
  }
}

void conv2d_backward_bias(const float* gout, float* gbias, const Conv2dDims& d) {
  const int OC = d.out_channels, OH = d.out_h, OW = d.out_w;
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < OC; ++oc) {
    gbias[oc] += static_cast<float>(
        block_sum(gout + static_cast<size_t>(oc) * OH * OW,
                  static_cast<size_t>(OH) * OW));
  }
}

// ---- upsample 2x ------------------------------------------------------------

namespace {

// Source taps for output index o at scale 2, align_corners=false:
// s = (o + 0.5) / 2 - 0.5. Returns lo/hi tap indices (clamped) and hi weight.
inline void up2_taps(int o, int n, int& lo, int& hi, float& w) {
  const float s = 0.5f * (static_cast<float>(o) + 0.5f) - 0.5f;
  const float f = std::floor(s);
  lo = static_cast<int>(f);
  w = s - f;
  hi = std::min(lo + 1, n - 1);
  lo = std::max(lo, 0);
}

}  // namespace

void upsample2x_forward(const float* in, float* out, int c, int h, int w) {
  const int OH = 2 * h, OW = 2 * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < c; ++k) {
    for (int oy = 0; oy < OH; ++oy) {
      int y0, y1;
      float fy;
      up2_taps(oy, h, y0, y1, fy);
      const float* r0 = in + (static_cast<size_t>(k) * h + y0) * w;
      const float* r1 = in + (static_cast<size_t>(k) * h + y1) * w;
      float* orow = out + (static_cast<size_t>(k) * OH + oy) * OW;
      for (int ox = 0; ox < OW; ++ox) {
        int x0, x1;
        float fx;
        up2_taps(ox, w, x0, x1, fx);
        const float top = r0[x0] + fx * (r0[x1] - r0[x0]);
        const float bot = r1[x0] + fx * (r1[x1] - r1[x0]);
        orow[ox] = top + fy * (bot - top);
      }
    }
  }
}

void upsample2x_backward(const float* gout, float* gin, int c, int h, int w) {
  const int OH = 2 * h, OW = 2 * w;
  // Gather form: every input pixel collects from the (at most) 4x4 output
  // window that can reference it, re-deriving the forward taps.
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < c; ++k) {
    for (int iy = 0; iy < h; ++iy) {
      float* grow = gin + (static_cast<size_t>(k) * h + iy) * w;
      const int oy_lo = std::max(0, 2 * iy - 1);
      const int oy_hi = std::min(OH, 2 * iy + 3);
      for (int ix = 0; ix < w; ++ix) {
        const int ox_lo = std::max(0, 2 * ix - 1);
        const int ox_hi = std::min(OW, 2 * ix + 3);
        float acc = 0.0f;
        for (int oy = oy_lo; oy < oy_hi; ++oy) {
          int y0, y1;
          float fy;
          up2_taps(oy, h, y0, y1, fy);
          float wy = 0.0f;
          if (y0 == iy) wy += 1.0f - fy;
          if (y1 == iy) wy += fy;
          if (wy == 0.0f) continue;
          const float* gorow = gout + (static_cast<size_t>(k) * OH + oy) * OW;
          for (int ox = ox_lo; ox < ox_hi; ++ox) {
            int x0, x1;
            float fx;
            up2_taps(ox, w, x0, x1, fx);
            float wx = 0.0f;
            if (x0 == ix) wx += 1.0f - fx;
            if (x1 == ix) wx += fx;
            if (wx == 0.0f) continue;
            acc += wy * wx * gorow[ox];
          }
        }
        grow[ix] += acc;
      }
    }
  }
}

// ---- grid sample ------------------------------------------------------------

namespace {

struct Taps {
  int lo, hi;
  float frac;
  bool interior;  // false when the coordinate was clamped
};

inline Taps sample_taps(float v, int n) {
  Taps t;
  const float limit = static_cast<float>(n - 1);
  t.interior = (v > 0.0f && v < limit);
  const float cv = std::min(std::max(v, 0.0f), limit);
  const float f = std::floor(cv);
  t.lo = static_cast<int>(f);
  t.frac = cv - f;
  t.hi = std::min(t.lo + 1, n - 1);
  return t;
}

}  // namespace

void grid_sample_forward(const float* src, const float* sample_x,
                         const float* sample_y, float* out, int c, int sh,
                         int sw, int oh, int ow) {
  const size_t splane = static_cast<size_t>(sh) * sw;
  const size_t oplane = static_cast<size_t>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const size_t o = static_cast<size_t>(oy) * ow + ox;
      const Taps tx = sample_taps(sample_x[o], sw);
      const Taps ty = sample_taps(sample_y[o], sh);
      const float w00 = (1.0f - ty.frac) * (1.0f - tx.frac);
      const float w01 = (1.0f - ty.frac) * tx.frac;
      const float w10 = ty.frac * (1.0f - tx.frac);
      const float w11 = ty.frac * tx.frac;
      const size_t i00 = static_cast<size_t>(ty.lo) * sw + tx.lo;
      const size_t i01 = static_cast<size_t>(ty.lo) * sw + tx.hi;
      const size_t i10 = static_cast<size_t>(ty.hi) * sw + tx.lo;
      const size_t i11 = static_cast<size_t>(ty.hi) * sw + tx.hi;
      for (int k = 0; k < c; ++k) {
        const float* sp = src + k * splane;
        out[k * oplane + o] =
            w00 * sp[i00] + w01 * sp[i01] + w10 * sp[i10] + w11 * sp[i11];
      }
    }
  }
}

void grid_sample_backward_src(const float* gout, const float* sample_x,
                              const float* sample_y, float* gsrc, int c, int sh,
                              int sw, int oh, int ow) {
  const size_t splane = static_cast<size_t>(sh) * sw;
  const size_t oplane = static_cast<size_t>(oh) * ow;
  // Scatter; parallel over channels only, so each plane is written by one
  // thread in a fixed order.
#pragma omp parallel for schedule(static)
  for (int k = 0; k < c; ++k) {
    float* gp = gsrc + k * splane;
    const float* go = gout + k * oplane;
    for (size_t o = 0; o < oplane; ++o) {
      const Taps tx = sample_taps(sample_x[o], sw);
      const Taps ty = sample_taps(sample_y[o], sh);
      const float g = go[o];
      gp[static_cast<size_t>(ty.lo) * sw + tx.lo] +=
          g * (1.0f - ty.frac) * (1.0f - tx.frac);
      gp[static_cast<size_t>(ty.lo) * sw + tx.hi] += g * (1.0f - ty.frac) * tx.frac;
      gp[static_cast<size_t>(ty.hi) * sw + tx.lo] += g * ty.frac * (1.0f - tx.frac);
      gp[static_cast<size_t>(ty.hi) * sw + tx.hi] += g * ty.frac * tx.frac;
    }
  }
}

void grid_sample_backward_coords(const float* src, const float* gout,
                                 const float* sample_x, const float* sample_y,
                                 float* gsx, float* gsy, int c, int sh, int sw,
                                 int oh, int ow) {
  const size_t splane = static_cast<size_t>(sh) * sw;
  const size_t oplane = static_cast<size_t>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const size_t o = static_cast<size_t>(oy) * ow + ox;
      const Taps tx = sample_taps(sample_x[o], sw);
      const Taps ty = sample_taps(sample_y[o], sh);
      const size_t i00 = static_cast<size_t>(ty.lo) * sw + tx.lo;
      const size_t i01 = static_cast<size_t>(ty.lo) * sw + tx.hi;
      const size_t i10 = static_cast<size_t>(ty.hi) * sw + tx.lo;
      const size_t i11 = static_cast<size_t>(ty.hi) * sw + tx.hi;
      float ax = 0.0f, ay = 0.0f;
      for (int k = 0; k < c; ++k) {
        const float* sp = src + k * splane;
        const float g = gout[k * oplane + o];
        // d/dx = (1-fy)(v01-v00) + fy(v11-v10); d/dy symmetric.
        ax += g * ((1.0f - ty.frac) * (sp[i01] - sp[i00]) +
                   ty.frac * (sp[i11] - sp[i10]));
        ay += g * ((1.0f - tx.frac) * (sp[i10] - sp[i00]) +
                   tx.frac * (sp[i11] - sp[i01]));
      }
      if (tx.interior) gsx[o] += ax;
      if (ty.interior) gsy[o] += ay;
    }
  }
}

// ---- horizontal shift -------------------------------------------------------

void shift_channels_forward(const float* in, const float* shifts, float* out,
                            int c, int h, int w) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      const float s = shifts[k];
      const float fs = std::floor(s);
      const int si = static_cast<int>(fs);
      const float f = s - fs;
      const float* irow = in + (static_cast<size_t>(k) * h + y) * w;
      float* orow = out + (static_cast<size_t>(k) * h + y) * w;
      for (int x = 0; x < w; ++x) {
        const int x0 = std::clamp(x + si, 0, w - 1);
        const int x1 = std::clamp(x + si + 1, 0, w - 1);
        orow[x] = irow[x0] + f * (irow[x1] - irow[x0]);
      }
    }
  }
}

void shift_channels_backward(const float* gout, const float* shifts, float* gin,
                             int c, int h, int w) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      const float s = shifts[k];
      const float fs = std::floor(s);
      const int si = static_cast<int>(fs);
      const float f = s - fs;
      const float* gorow = gout + (static_cast<size_t>(k) * h + y) * w;
      float* girow = gin + (static_cast<size_t>(k) * h + y) * w;
      for (int x = 0; x < w; ++x) {
        const int x0 = std::clamp(x + si, 0, w - 1);
        const int x1 = std::clamp(x + si + 1, 0, w - 1);
        const float g = gorow[x];
        girow[x0] += g * (1.0f - f);
        girow[x1] += g * f;
      }
    }
  }
}

// ---- reductions -------------------------------------------------------------

namespace {

constexpr size_t kBlock = 4096;

template <typename Term>
double blocked_reduce(size_t n, Term term) {
  if (n == 0) return 0.0;
  const size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks);
#pragma omp parallel for schedule(static)
  for (size_t b = 0; b < nblocks; ++b) {
    const size_t lo = b * kBlock;
    const size_t hi = std::min(n, lo + kBlock);
    double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    size_t i = lo;
    for (; i + 8 <= hi; i += 8)
      for (int j = 0; j < 8; ++j) lanes[j] += term(i + j);
    for (int j = 0; i < hi; ++i, ++j) lanes[j] += term(i);
    partial[b] = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                 ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  }
  double total = 0.0;
  for (size_t b = 0; b < nblocks; ++b) total += partial[b];
  return total;
}

}  // namespace

double block_sum(const float* x, size_t n) {
  return blocked_reduce(n, [&](size_t i) { return static_cast<double>(x[i]); });
}

double block_sum_abs(const float* x, size_t n) {
  return blocked_reduce(
      n, [&](size_t i) { return std::abs(static_cast<double>(x[i])); });
}

double block_sum_mul(const float* x, const float* y, size_t n) {
  return blocked_reduce(n, [&](size_t i) {
    return static_cast<double>(x[i]) * static_cast<double>(y[i]);
  });
}

double block_sum_abs_mul(const float* x, const float* y, size_t n) {
  return blocked_reduce(n, [&](size_t i) {
    return std::abs(static_cast<double>(x[i])) * static_cast<double>(y[i]);
  });
}

}  // namespace sxf::kernels
