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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "octoann/bench.hpp"
#include "octoann/search.hpp"
#include "testutil.hpp"

using namespace octoann;
using namespace octotest;

namespace {

// Full artifact pipeline over a 2000-vector blob dataset, shared by most
// cases in this file.
struct EngineFixture {
  TempDir tmp{"engine"};
  VectorDataset base;
  VectorDataset queries;
  GraphIndex g;
  SearchEngine::Options opts;
  std::unique_ptr<SearchEngine> engine;

  EngineFixture() {
    BlobPair pair = make_blob_pair(2000, 100, 16, 10, 101, 0.7f);
    base = std::move(pair.base);
    queries = std::move(pair.queries);

    VamanaParams params;
    params.R = 24;
    params.L_build = 48;
    params.seed = 5;
    g = build_vamana(base, params);
    save_graph(g, tmp.file("g.ovg"));

    pack_disk_index(base, g, 4096, nullptr, tmp.file("idx.odi"));
    std::uint32_t s_rec = record_size_bytes(base.d, base.elem, g.r_max);
    ShuffleResult sr = shuffle_pages(g, 4096, s_rec, 2, 0);
    pack_disk_index(base, g, 4096, &sr.layout, tmp.file("idx.shuffled.odi"));

    VectorDataset sample = base;  // train on the full set at this scale
    PQCodebook cb = train_codebook(sample, 8, 64, 10, 3);
    save_codebook(cb, tmp.file("pq.opq"));
    save_codes(encode_dataset(cb, base), tmp.file("pq.opc"));

    MemGraph mg = build_memgraph(base, 0.02, 12, 32, 9);
    save_memgraph(mg, tmp.file("nav.omg"));

    opts.index_path = tmp.file("idx.odi");
    opts.shuffled_index_path = tmp.file("idx.shuffled.odi");
    opts.pq_codebook_path = tmp.file("pq.opq");
    opts.pq_codes_path = tmp.file("pq.opc");
    opts.memgraph_path = tmp.file("nav.omg");
    opts.graph_path = tmp.file("g.ovg");
    opts.cache_budget = 100;
    opts.direct_io = DirectIo::on;
    engine = std::make_unique<SearchEngine>(opts);
  }

  SearchConfig cfg(std::uint32_t L = 100, std::uint32_t beam = 8) const {
    SearchConfig c;
    c.k = 10;
    c.L = L;
    c.beam = beam;
    return c;
  }
};

EngineFixture& fixture() {
  static EngineFixture fix;
  return fix;
}

bool same_results(const SearchResult& a, const SearchResult& b) {
  return a.ids == b.ids && a.dists == b.dists;
}

}  // namespace

TEST_CASE("single-record index") {
  TempDir tmp("one");
  VectorDataset base = make_blobs(1, 8, 1, 1);
  GraphIndex g = graph_from_adj({{}});
  pack_disk_index(base, g, 4096, nullptr, tmp.file("one.odi"));
  VectorDataset sample = base;
  PQCodebook cb = train_codebook(sample, 2, 1, 2, 0);
  save_codebook(cb, tmp.file("pq.opq"));
  save_codes(encode_dataset(cb, base), tmp.file("pq.opc"));

  SearchEngine::Options opts;
  opts.index_path = tmp.file("one.odi");
  opts.pq_codebook_path = tmp.file("pq.opq");
  opts.pq_codes_path = tmp.file("pq.opc");
  opts.direct_io = DirectIo::off;
  SearchEngine engine(opts);

  SearchConfig cfg;
  cfg.k = 1;
  cfg.L = 4;
  SearchResult res = engine.search(base, 0, cfg);
  REQUIRE(res.ids.size() == 1);
  CHECK(res.ids[0] == 0);
  CHECK(res.stats.hops == 1);
  CHECK(res.stats.pages_read == 1);
  CHECK(res.stats.n_read == 1);
}

TEST_CASE("baseline recall >= 0.95 at L=100 against the brute-force oracle") {
  auto& fix = fixture();
  GroundTruth gt = brute_force_knn(fix.base, fix.queries, 10);
  std::vector<std::vector<RecordId>> results;
  for (std::size_t qi = 0; qi < fix.queries.n; ++qi) {
    SearchResult res = fix.engine->search(fix.queries, qi, fix.cfg(100, 8));
    results.push_back(res.ids);
  }
  double recall = recall_at_k(results, gt, 10);
  CHECK(recall >= 0.95);
}

TEST_CASE("pq off with beam 1 equals the in-memory greedy search oracle") {
  auto& fix = fixture();
  SearchConfig cfg = fix.cfg(50, 1);
  cfg.use_pq = false;
  for (std::size_t qi = 0; qi < 20; ++qi) {
    SearchResult res = fix.engine->search(fix.queries, qi, cfg);
    RecordId entry = fix.g.medoid;
    SearchTrace trace =
        greedy_search(fix.g, fix.base, fix.queries.row(qi), std::span(&entry, 1), 50);
    REQUIRE(res.ids.size() == 10);
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(res.ids[j] == trace.candidates[j].second);
      CHECK(res.dists[j] == trace.candidates[j].first);
    }
  }
}

TEST_CASE("accounting: N_read == N_eff + N_rbu on every query and config") {
  auto& fix = fixture();
  std::vector<SearchConfig> cfgs;
  for (const auto& [name, toggles] : config_registry()) {
    SearchConfig c = fix.cfg(50, 8);
    apply_toggles(c, toggles);
    cfgs.push_back(c);
  }
  SearchConfig fp = fix.cfg(50, 8);
  fp.use_pq = false;
  cfgs.push_back(fp);
  fp.page_search = true;
  cfgs.push_back(fp);
  fp.page_search = false;
  fp.use_cache = true;
  cfgs.push_back(fp);

  for (const auto& cfg : cfgs) {
    for (std::size_t qi = 0; qi < 10; ++qi) {
      SearchResult res = fix.engine->search(fix.queries, qi, cfg);
      CHECK(res.stats.n_read == res.stats.n_eff + res.stats.n_rbu);
      CHECK(res.stats.pages_read <= res.stats.n_read);
      CHECK(res.stats.full_dist_comps == res.stats.n_read);
      if (!cfg.use_pq) CHECK(res.stats.n_rbu > 0);  // scoring fetches dominate
    }
  }
}

TEST_CASE("io_utilization") {
  SearchStats s;
  s.n_eff = 40;
  s.n_rbu = 24;
  s.n_read = 64;
  CHECK(io_utilization(s) == doctest::Approx(0.625));
  s.n_rbu = 0;
  s.n_read = 40;
  CHECK(io_utilization(s) == doctest::Approx(1.0));
  s.n_read = 0;
  CHECK_THROWS_AS(io_utilization(s), Error);
}

TEST_CASE("dynamic width schedule") {
  SearchConfig cfg;
  cfg.dynamic_width = true;
  cfg.dw.omega_min = 8;
  cfg.dw.omega_max = 32;
  cfg.dw.warmup = 4;
  cfg.dw.patience = 2;
  CHECK(dynamic_width_schedule(0, -1, cfg) == 8);
  std::uint32_t prev = 0;
  for (std::uint32_t it = 0; it < 40; ++it) {
    std::uint32_t w = dynamic_width_schedule(it, -1, cfg);
    CHECK(w >= prev);
    CHECK(w >= 8);
    CHECK(w <= 32);
    prev = w;
  }
  CHECK(prev == 32);  // saturates
  // early phase signal removes the warmup hold
  CHECK(dynamic_width_schedule(3, 1, cfg) == 32);
  CHECK(dynamic_width_schedule(1, 1, cfg) == 8);
}

TEST_CASE("determinism: identical runs give identical results and stats") {
  auto& fix = fixture();
  for (const char* name : {"baseline", "cache", "memgraph", "pageshuffle", "dynamicwidth",
                           "pagesearch", "c1", "c3", "c5"}) {
    SearchConfig cfg = fix.cfg(50, 8);
    apply_toggles(cfg, *find_config(name));
    SearchResult a = fix.engine->search(fix.queries, 3, cfg);
    SearchResult b = fix.engine->search(fix.queries, 3, cfg);
    CHECK(same_results(a, b));
    CHECK(a.stats.pages_read == b.stats.pages_read);
    CHECK(a.stats.hops == b.stats.hops);
    CHECK(a.stats.n_read == b.stats.n_read);
  }
}

TEST_CASE("cache neutrality: identical results, fewer or equal pages") {
  auto& fix = fixture();
  SearchConfig off = fix.cfg(50, 8);
  SearchConfig on = off;
  on.use_cache = true;
  for (std::size_t qi = 0; qi < fix.queries.n; ++qi) {
    SearchResult a = fix.engine->search(fix.queries, qi, off);
    SearchResult b = fix.engine->search(fix.queries, qi, on);
    CHECK(same_results(a, b));
    CHECK(b.stats.pages_read <= a.stats.pages_read);
    CHECK(b.stats.hops == a.stats.hops);
  }
}

TEST_CASE("layout neutrality of results: shuffled layout changes pages only") {
  auto& fix = fixture();
  SearchConfig identity = fix.cfg(50, 8);
  SearchConfig shuffled = identity;
  shuffled.use_shuffled_layout = true;
  for (std::size_t qi = 0; qi < 30; ++qi) {
    SearchResult a = fix.engine->search(fix.queries, qi, identity);
    SearchResult b = fix.engine->search(fix.queries, qi, shuffled);
    CHECK(same_results(a, b));
    CHECK(a.stats.n_read == b.stats.n_read);
  }
}

TEST_CASE("memgraph entries reduce hops and pages across configurations") {
  auto& fix = fixture();
  for (std::uint32_t L : {10u, 20u, 50u}) {
    CAPTURE(L);
    SearchConfig medoid = fix.cfg(L, 8);
    SearchConfig nav = medoid;
    nav.use_memgraph = true;
    double hops_medoid = 0, hops_nav = 0, pages_medoid = 0, pages_nav = 0;
    for (std::size_t qi = 0; qi < fix.queries.n; ++qi) {
      SearchResult a = fix.engine->search(fix.queries, qi, medoid);
      SearchResult b = fix.engine->search(fix.queries, qi, nav);
      hops_medoid += a.stats.hops;
      pages_medoid += static_cast<double>(a.stats.pages_read);
      hops_nav += b.stats.hops;
      pages_nav += static_cast<double>(b.stats.pages_read);
    }
    CHECK(hops_nav < hops_medoid);
    CHECK(pages_nav < pages_medoid);
  }
}

TEST_CASE("pipeline") {
  auto& fix = fixture();

  SUBCASE("depth 1 equals sequential beam 1") {
    SearchConfig seq = fix.cfg(50, 1);
    SearchConfig pipe = fix.cfg(50, 1);
    pipe.pipeline = true;
    pipe.pipeline_depth = 1;
    for (std::size_t qi = 0; qi < 20; ++qi) {
      SearchResult a = fix.engine->search(fix.queries, qi, seq);
      SearchResult b = fix.engine->search(fix.queries, qi, pipe);
      CHECK(same_results(a, b));
      CHECK(a.stats.pages_read == b.stats.pages_read);
    }
  }

  SUBCASE("depth 8 reads at least as many pages as sequential on most queries") {
    SearchConfig seq = fix.cfg(50, 8);
    SearchConfig pipe = seq;
    pipe.pipeline = true;
    pipe.pipeline_depth = 8;
    std::size_t geq = 0;
    for (std::size_t qi = 0; qi < 50; ++qi) {
      auto a = fix.engine->search(fix.queries, qi, seq);
      auto b = fix.engine->search(fix.queries, qi, pipe);
      if (b.stats.pages_read >= a.stats.pages_read) ++geq;
    }
    CHECK(geq >= 40);  // >= 80%
  }

  SUBCASE("pipeline requires pq") {
    SearchConfig cfg = fix.cfg(50, 8);
    cfg.pipeline = true;
    cfg.use_pq = false;
    CHECK_THROWS_AS(fix.engine->search(fix.queries, 0, cfg), Error);
  }
}

TEST_CASE("page search") {
  auto& fix = fixture();

  SUBCASE("in-page distance computations bounded by n_p per page") {
    SearchConfig cfg = fix.cfg(50, 8);
    cfg.page_search = true;
    for (std::size_t qi = 0; qi < 10; ++qi) {
      SearchResult res = fix.engine->search(fix.queries, qi, cfg);
      CHECK(res.stats.full_dist_comps <=
            res.stats.pages_read * fix.engine->meta().n_p + res.stats.cache_hits);
    }
  }

  SUBCASE("recall never drops when page search is added") {
    GroundTruth gt = brute_force_knn(fix.base, fix.queries, 10);
    SearchConfig off = fix.cfg(20, 8);
    SearchConfig on = off;
    on.page_search = true;
    std::vector<std::vector<RecordId>> r_off, r_on;
    for (std::size_t qi = 0; qi < fix.queries.n; ++qi) {
      r_off.push_back(fix.engine->search(fix.queries, qi, off).ids);
      r_on.push_back(fix.engine->search(fix.queries, qi, on).ids);
    }
    CHECK(recall_at_k(r_on, gt, 10) >= recall_at_k(r_off, gt, 10) - 1e-9);
  }
}

TEST_CASE("page search: n_p=1 behaves exactly like plain search") {
  TempDir tmp("np1");
  VectorDataset base = make_blobs(300, 1020, 4, 7);  // 4080B vector forces n_p=1 at 8 KB
  VamanaParams params;
  params.R = 12;
  params.L_build = 24;
  GraphIndex g = build_vamana(base, params);
  REQUIRE(record_size_bytes(base.d, base.elem, g.r_max) > 4096);
  pack_disk_index(base, g, 8192, nullptr, tmp.file("x.odi"));
  PQCodebook cb = train_codebook(base, 8, 32, 6, 1);
  save_codebook(cb, tmp.file("pq.opq"));
  save_codes(encode_dataset(cb, base), tmp.file("pq.opc"));

  SearchEngine::Options opts;
  opts.index_path = tmp.file("x.odi");
  opts.pq_codebook_path = tmp.file("pq.opq");
  opts.pq_codes_path = tmp.file("pq.opc");
  opts.direct_io = DirectIo::off;
  SearchEngine engine(opts);
  REQUIRE(engine.meta().n_p == 1);

  VectorDataset q = make_blobs(10, 1020, 4, 8);
  SearchConfig off;
  off.k = 5;
  off.L = 20;
  SearchConfig on = off;
  on.page_search = true;
  for (std::size_t qi = 0; qi < q.n; ++qi) {
    SearchResult a = engine.search(q, qi, off);
    SearchResult b = engine.search(q, qi, on);
    CHECK(same_results(a, b));
    CHECK(a.stats.pages_read == b.stats.pages_read);
    CHECK(a.stats.n_read == b.stats.n_read);
  }
}

TEST_CASE("page search surfaces a co-resident true nearest neighbor") {
  // Two records per page; the true 1-NN shares a page with a record the
  // graph can reach, but is itself unreachable (no in-edges). The vectors
  // carry 478 zero dimensions so that exactly two records fit in 4 KB.
  const float pts[4][2] = {
      {0.f, 0.f},    // 0: entry/medoid, page 0
      {9.f, 9.f},    // 1: reachable hub, page 0
      {10.f, 10.f},  // 2: co-resident with 3 on page 1
      {9.5f, 9.5f},  // 3: TRUE nearest to the query, page 1, unreachable
  };
  TempDir tmp("cores");
  // adjacency: 0 -> 1, 1 -> 2, 2 -> 1; nothing points at 3
  GraphIndex g = graph_from_adj({{1}, {2}, {1}, {}}, 0);
  VectorDataset wide = make_dataset(4, 480, ElemKind::f32);
  std::fill(wide.data.begin(), wide.data.end(), std::byte{0});
  for (std::size_t i = 0; i < 4; ++i) {
    float* row = reinterpret_cast<float*>(wide.row_mut(i));
    row[0] = pts[i][0];
    row[1] = pts[i][1];
  }
  std::uint32_t wide_rec = record_size_bytes(480, ElemKind::f32, g.r_max);
  REQUIRE(PageLayout::identity(4, 4096, wide_rec).n_p == 2);
  pack_disk_index(wide, g, 4096, nullptr, tmp.file("x.odi"));
  PQCodebook cb = train_codebook(wide, 2, 4, 6, 0);
  save_codebook(cb, tmp.file("pq.opq"));
  save_codes(encode_dataset(cb, wide), tmp.file("pq.opc"));

  SearchEngine::Options opts;
  opts.index_path = tmp.file("x.odi");
  opts.pq_codebook_path = tmp.file("pq.opq");
  opts.pq_codes_path = tmp.file("pq.opc");
  opts.direct_io = DirectIo::off;
  SearchEngine engine(opts);
  REQUIRE(engine.meta().n_p == 2);

  VectorDataset q = make_dataset(1, 480, ElemKind::f32);
  float* qrow = reinterpret_cast<float*>(q.row_mut(0));
  qrow[0] = 9.4f;
  qrow[1] = 9.4f;

  SearchConfig off;
  off.k = 1;
  off.L = 8;
  SearchConfig on = off;
  on.page_search = true;
  // without page search record 3 is invisible to the graph
  CHECK(engine.search(q, 0, off).ids[0] != 3);
  // fetching page 1 for record 2 discovers record 3
  CHECK(engine.search(q, 0, on).ids[0] == 3);
}

TEST_CASE("page-read model: per-query ratio is stable within each layout") {
  // With PQ on, pages/query tracks hops / (OR(G) * n_p) up to a per-layout
  // constant; the per-query ratio pages * OR * n_p / hops should have a low
  // coefficient of variation, and the higher-OR layout reads fewer pages.
  auto& fix = fixture();
  DiskIndexMeta meta_id = read_disk_index_meta(fix.opts.index_path);
  DiskIndexMeta meta_sh = read_disk_index_meta(fix.opts.shuffled_index_path);
  PageLayout identity = PageLayout::identity(meta_id.n, meta_id.page_size, meta_id.record_size());
  PageLayout shuffled = load_layout_sidecar(fix.opts.shuffled_index_path, meta_sh);
  double or_id = overlap_ratio_graph(identity, fix.g);
  double or_sh = overlap_ratio_graph(shuffled, fix.g);
  REQUIRE(or_sh > or_id);

  double mean_pages[2] = {0, 0};
  for (int layout = 0; layout < 2; ++layout) {
    SearchConfig cfg = fix.cfg(50, 8);
    cfg.use_shuffled_layout = layout == 1;
    double orr = layout == 1 ? or_sh : or_id;
    std::vector<double> ratios;
    for (std::size_t qi = 0; qi < fix.queries.n; ++qi) {
      SearchResult res = fix.engine->search(fix.queries, qi, cfg);
      mean_pages[layout] += static_cast<double>(res.stats.pages_read);
      ratios.push_back(static_cast<double>(res.stats.pages_read) * orr * meta_id.n_p /
                       std::max<double>(res.stats.hops, 1));
    }
    mean_pages[layout] /= static_cast<double>(fix.queries.n);
    double mean = 0;
    for (double r : ratios) mean += r;
    mean /= static_cast<double>(ratios.size());
    double var = 0;
    for (double r : ratios) var += (r - mean) * (r - mean);
    double cv = std::sqrt(var / static_cast<double>(ratios.size())) / mean;
    CAPTURE(layout);
    CHECK(cv < 0.5);
    // fitted bound: every query satisfies pages <= c * hops / (OR * n_p)
    double c = *std::max_element(ratios.begin(), ratios.end());
    for (double r : ratios) CHECK(r <= c * 1.0000001);
  }
  CHECK(mean_pages[1] < mean_pages[0]);  // higher OR(G), fewer pages
}

TEST_CASE("recall is non-decreasing in L (statistical)") {
  auto& fix = fixture();
  GroundTruth gt = brute_force_knn(fix.base, fix.queries, 10);
  double prev = -1.0;
  for (std::uint32_t L : {10u, 20u, 50u, 100u}) {
    std::vector<std::vector<RecordId>> results;
    for (std::size_t qi = 0; qi < fix.queries.n; ++qi)
      results.push_back(fix.engine->search(fix.queries, qi, fix.cfg(L, 8)).ids);
    double recall = recall_at_k(results, gt, 10);
    CHECK(recall >= prev - 0.01);  // tiny statistical slack
    prev = recall;
  }
}

TEST_CASE("config errors surface before any I/O") {
  TempDir tmp("cfgerr");
  VectorDataset base = make_blobs(50, 8, 2, 3);
  VamanaParams params;
  params.R = 8;
  params.L_build = 16;
  GraphIndex g = build_vamana(base, params);
  pack_disk_index(base, g, 4096, nullptr, tmp.file("x.odi"));
  PQCodebook cb = train_codebook(base, 2, 8, 4, 0);
  save_codebook(cb, tmp.file("pq.opq"));
  save_codes(encode_dataset(cb, base), tmp.file("pq.opc"));

  SearchEngine::Options opts;
  opts.index_path = tmp.file("x.odi");
  opts.pq_codebook_path = tmp.file("pq.opq");
  opts.pq_codes_path = tmp.file("pq.opc");
  opts.direct_io = DirectIo::off;
  SearchEngine engine(opts);  // no memgraph, no cache, no shuffled index

  SearchConfig cfg;
  cfg.use_memgraph = true;
  CHECK_THROWS_AS(engine.search(base, 0, cfg), Error);
  cfg = SearchConfig{};
  cfg.use_cache = true;
  CHECK_THROWS_AS(engine.search(base, 0, cfg), Error);
  cfg = SearchConfig{};
  cfg.use_shuffled_layout = true;
  CHECK_THROWS_AS(engine.search(base, 0, cfg), Error);
  cfg = SearchConfig{};
  cfg.k = 20;
  cfg.L = 10;
  CHECK_THROWS_AS(engine.search(base, 0, cfg), Error);
}
