// Copyright 2026 The OctoANN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "octoann/dataset.hpp"

using namespace octoann;

namespace {

std::vector<float> random_floats(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> v(count);
  for (auto& x : v) x = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return v;
}

}  // namespace

static void BM_L2SqFloat(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  auto a = random_floats(d, 1), b = random_floats(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(l2_sq(a.data(), b.data(), d));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_L2SqFloat)->RangeMultiplier(2)->Range(16, 1024);

static void BM_L2SqUint8(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<std::byte> a(d), b(d);
  for (std::size_t i = 0; i < d; ++i) {
    a[i] = static_cast<std::byte>(rng() & 0xff);
    b[i] = static_cast<std::byte>(rng() & 0xff);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(raw_distance(ElemKind::u8, Metric::l2, a.data(), b.data(), d));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_L2SqUint8)->RangeMultiplier(2)->Range(16, 1024);

static void BM_BruteForceKnn(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  VectorDataset base = make_dataset(n, 32, ElemKind::f32);
  auto values = random_floats(n * 32, 7);
  std::memcpy(base.data.data(), values.data(), base.data.size());
  VectorDataset q = make_dataset(1, 32, ElemKind::f32);
  std::memcpy(q.data.data(), values.data(), q.data.size());
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_knn(base, q, 10, 1));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BruteForceKnn)->RangeMultiplier(4)->Range(1024, 65536);

BENCHMARK_MAIN();
