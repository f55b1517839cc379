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

#include "octoann/pq.hpp"

using namespace octoann;

namespace {

VectorDataset random_set(std::size_t n, std::size_t d, std::uint64_t seed) {
  VectorDataset ds = make_dataset(n, d, ElemKind::f32);
  std::mt19937_64 rng(seed);
  float* p = reinterpret_cast<float*>(ds.data.data());
  for (std::size_t i = 0; i < n * d; ++i)
    p[i] = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return ds;
}

struct PQFixture {
  VectorDataset sample = random_set(8192, 64, 1);
  PQCodebook cb = train_codebook(sample, 16, 256, 8, 1);
  PQCodes codes = encode_dataset(cb, sample);
  std::vector<float> query = sample.row_as_float(0);
  DistanceTable table = build_distance_table(cb, query.data());
};

PQFixture& fixture() {
  static PQFixture f;
  return f;
}

}  // namespace

static void BM_BuildDistanceTable(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(build_distance_table(f.cb, f.query.data()));
}
BENCHMARK(BM_BuildDistanceTable);

static void BM_ApproxDistance(benchmark::State& state) {
  auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(approx_distance(f.table, f.codes.code(i)));
    i = (i + 1) & 8191;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ApproxDistance);

static void BM_Encode(benchmark::State& state) {
  auto& f = fixture();
  std::uint8_t code[16];
  for (auto _ : state) {
    encode(f.cb, f.query.data(), code);
    benchmark::DoNotOptimize(code);
  }
}
BENCHMARK(BM_Encode);

BENCHMARK_MAIN();
