// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

// Compares the OpenMP kernels against the serial reference implementations
// on decoder-sized workloads. Build with -DSXF_NATIVE=ON for honest numbers.

#include <benchmark/benchmark.h>

#include <vector>

#include "refkernels.h"
#include "sxf/kernels.h"
#include "sxf/rng.h"

namespace {

std::vector<float> filled(size_t n, uint64_t seed) {
  sxf::Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform(-1.0f, 1.0f);
  return v;
}

// Finest view-decoder level: 16 -> 16 channels at 96x160.
constexpr int kIC = 16, kOC = 16, kH = 96, kW = 160;

void BM_conv2d_parallel(benchmark::State& state) {
  auto in = filled(static_cast<size_t>(kIC) * kH * kW, 1);
  auto w = filled(static_cast<size_t>(kOC) * kIC * 9, 2);
  auto b = filled(kOC, 3);
  std::vector<float> out(static_cast<size_t>(kOC) * kH * kW);
  sxf::kernels::Conv2dDims d{kIC, kOC, kH, kW, 3, 3, 1, 1, kH, kW};
  for (auto _ : state) {
    sxf::kernels::conv2d_forward(in.data(), w.data(), b.data(), out.data(), d);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * kOC * kH * kW * kIC * 9);
}
BENCHMARK(BM_conv2d_parallel);

void BM_conv2d_serial_reference(benchmark::State& state) {
  auto in = filled(static_cast<size_t>(kIC) * kH * kW, 1);
  auto w = filled(static_cast<size_t>(kOC) * kIC * 9, 2);
  auto b = filled(kOC, 3);
  std::vector<float> out(static_cast<size_t>(kOC) * kH * kW);
  for (auto _ : state) {
    sxf::ref::conv2d(in.data(), w.data(), b.data(), out.data(), kIC, kOC, kH, kW,
                     3, 3, 1, 1);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * kOC * kH * kW * kIC * 9);
}
BENCHMARK(BM_conv2d_serial_reference);

void BM_upsample_parallel(benchmark::State& state) {
  auto in = filled(static_cast<size_t>(kIC) * kH * kW, 4);
  std::vector<float> out(static_cast<size_t>(kIC) * 4 * kH * kW);
  for (auto _ : state) {
    sxf::kernels::upsample2x_forward(in.data(), out.data(), kIC, kH, kW);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_upsample_parallel);

void BM_upsample_serial_reference(benchmark::State& state) {
  auto in = filled(static_cast<size_t>(kIC) * kH * kW, 4);
  std::vector<float> out(static_cast<size_t>(kIC) * 4 * kH * kW);
  for (auto _ : state) {
    sxf::ref::upsample2x(in.data(), out.data(), kIC, kH, kW);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_upsample_serial_reference);

void BM_grid_sample_parallel(benchmark::State& state) {
  auto src = filled(3 * kH * kW, 5);
  auto sx = filled(static_cast<size_t>(kH) * kW, 6);
  auto sy = filled(static_cast<size_t>(kH) * kW, 7);
  for (auto& v : sx) v = (v * 0.5f + 0.5f) * (kW - 1);
  for (auto& v : sy) v = (v * 0.5f + 0.5f) * (kH - 1);
  std::vector<float> out(3 * static_cast<size_t>(kH) * kW);
  for (auto _ : state) {
    sxf::kernels::grid_sample_forward(src.data(), sx.data(), sy.data(), out.data(),
                                      3, kH, kW, kH, kW);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_grid_sample_parallel);

void BM_grid_sample_serial_reference(benchmark::State& state) {
  auto src = filled(3 * kH * kW, 5);
  auto sx = filled(static_cast<size_t>(kH) * kW, 6);
  auto sy = filled(static_cast<size_t>(kH) * kW, 7);
  for (auto& v : sx) v = (v * 0.5f + 0.5f) * (kW - 1);
  for (auto& v : sy) v = (v * 0.5f + 0.5f) * (kH - 1);
  std::vector<float> out(3 * static_cast<size_t>(kH) * kW);
  for (auto _ : state) {
    sxf::ref::grid_sample(src.data(), sx.data(), sy.data(), out.data(), 3, kH, kW,
                          kH, kW);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_grid_sample_serial_reference);

}  // namespace

BENCHMARK_MAIN();
