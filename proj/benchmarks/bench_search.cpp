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

#include <cstdlib>
#include <filesystem>
#include <random>

#include "octoann/bench.hpp"
#include "octoann/search.hpp"

using namespace octoann;

namespace {

VectorDataset blob_set(std::size_t n, std::size_t d, std::uint64_t seed) {
  VectorDataset ds = make_dataset(n, d, ElemKind::f32);
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<float> centers(32 * d);
  for (auto& c : centers) c = static_cast<float>(unit() * 10.0);
  float* p = reinterpret_cast<float*>(ds.data.data());
  for (std::size_t i = 0; i < n; ++i) {
    const float* c = centers.data() + (rng() % 32) * d;
    for (std::size_t j = 0; j < d; ++j)
      p[i * d + j] = c[j] + 0.7f * static_cast<float>(unit() - 0.5);
  }
  return ds;
}

// On-disk fixture shared by all search benchmarks in this binary.
struct DiskFixture {
  std::filesystem::path dir;
  VectorDataset base = blob_set(20000, 32, 1);
  VectorDataset queries = blob_set(256, 32, 2);
  std::unique_ptr<SearchEngine> engine;

  DiskFixture() {
    dir = std::filesystem::temp_directory_path() / "octoann_bench_fixture";
    std::filesystem::create_directories(dir);
    VamanaParams params;
    params.R = 32;
    params.L_build = 64;
    GraphIndex g = build_vamana(base, params);
    save_graph(g, (dir / "g.ovg").string());
    pack_disk_index(base, g, 4096, nullptr, (dir / "idx.odi").string());
    std::uint32_t s_rec = record_size_bytes(base.d, base.elem, g.r_max);
    ShuffleResult sr = shuffle_pages(g, 4096, s_rec, 2, 0);
    pack_disk_index(base, g, 4096, &sr.layout, (dir / "idx.sh.odi").string());
    PQCodebook cb = train_codebook(base, 16, 256, 8, 1);
    save_codebook(cb, (dir / "pq.opq").string());
    save_codes(encode_dataset(cb, base), (dir / "pq.opc").string());
    save_memgraph(build_memgraph(base, 0.01, 16, 32, 3), (dir / "nav.omg").string());

    SearchEngine::Options opts;
    opts.index_path = (dir / "idx.odi").string();
    opts.shuffled_index_path = (dir / "idx.sh.odi").string();
    opts.pq_codebook_path = (dir / "pq.opq").string();
    opts.pq_codes_path = (dir / "pq.opc").string();
    opts.memgraph_path = (dir / "nav.omg").string();
    opts.graph_path = (dir / "g.ovg").string();
    opts.cache_budget = 200;
    opts.direct_io = DirectIo::on;
    engine = std::make_unique<SearchEngine>(opts);
  }
  ~DiskFixture() {
    engine.reset();
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
};

DiskFixture& fixture() {
  static DiskFixture f;
  return f;
}

void run_arm(benchmark::State& state, const char* name) {
  auto& f = fixture();
  SearchConfig cfg;
  cfg.k = 10;
  cfg.L = static_cast<std::uint32_t>(state.range(0));
  cfg.beam = 8;
  apply_toggles(cfg, *find_config(name));
  std::size_t qi = 0;
  std::uint64_t pages = 0, queries = 0;
  for (auto _ : state) {
    SearchResult res = f.engine->search(f.queries, qi, cfg);
    benchmark::DoNotOptimize(res.ids.data());
    pages += res.stats.pages_read;
    ++queries;
    qi = (qi + 1) & 255;
  }
  state.SetItemsProcessed(state.iterations());
  state.counters["pages/query"] =
      benchmark::Counter(static_cast<double>(pages) / static_cast<double>(queries));
}

}  // namespace

static void BM_SearchBaseline(benchmark::State& state) { run_arm(state, "baseline"); }
BENCHMARK(BM_SearchBaseline)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

static void BM_SearchMemGraph(benchmark::State& state) { run_arm(state, "memgraph"); }
BENCHMARK(BM_SearchMemGraph)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

static void BM_SearchC5(benchmark::State& state) { run_arm(state, "c5"); }
BENCHMARK(BM_SearchC5)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
