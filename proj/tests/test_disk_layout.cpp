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

#include <filesystem>
#include <random>

#include "octoann/disk_layout.hpp"
#include "testutil.hpp"

using namespace octoann;
using namespace octotest;

namespace {

// Random out-neighbor graph over n vertices.
GraphIndex random_graph(std::uint32_t n, std::uint32_t degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<RecordId>> adj(n);
  for (RecordId u = 0; u < n; ++u) {
    while (adj[u].size() < degree) {
      RecordId v = static_cast<RecordId>(rng() % n);
      if (v != u && std::find(adj[u].begin(), adj[u].end(), v) == adj[u].end())
        adj[u].push_back(v);
    }
  }
  return graph_from_adj(std::move(adj));
}

// Random bijective layout for oracle cross-checks.
PageLayout random_layout(std::uint32_t n, std::uint32_t P, std::uint32_t s_rec,
                         std::uint64_t seed) {
  PageLayout l = PageLayout::identity(n, P, s_rec);
  l.mapped = true;
  std::vector<RecordId> perm(n);
  for (RecordId i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
  l.page_of.resize(n);
  l.slot_of.resize(n);
  for (RecordId pos = 0; pos < n; ++pos) {
    l.page_of[perm[pos]] = pos / l.n_p;
    l.slot_of[perm[pos]] = static_cast<std::uint16_t>(pos % l.n_p);
  }
  return l;
}

// Brute-force OR(G) recount, independent of overlap_ratio_graph.
double oracle_or(const PageLayout& l, const GraphIndex& g) {
  if (l.n_p <= 1) return 0.0;
  auto inv = l.build_inverse();
  double total = 0;
  for (RecordId u = 0; u < g.n; ++u) {
    std::size_t shared = 0;
    std::uint32_t page = l.page_of_id(u);
    for (std::uint32_t slot = 0; slot < l.n_p; ++slot) {
      RecordId resident = inv[static_cast<std::size_t>(page) * l.n_p + slot];
      if (resident == kInvalidId || resident == u) continue;
      if (std::find(g.adj[u].begin(), g.adj[u].end(), resident) != g.adj[u].end()) ++shared;
    }
    total += static_cast<double>(shared) / static_cast<double>(l.n_p - 1);
  }
  return total / g.n;
}

}  // namespace

TEST_CASE("identity layout arithmetic: s_rec=256, P=4096") {
  PageLayout l = PageLayout::identity(100, 4096, 256);
  CHECK(l.n_p == 16);
  CHECK(l.page_of_id(17) == 1);
  CHECK(l.slot_of_id(17) == 1);
  CHECK(l.page_count == 7);  // ceil(100/16)
}

TEST_CASE("layout bijectivity: map then inverse is identity") {
  PageLayout l = random_layout(97, 4096, 300, 5);
  auto inv = l.build_inverse();
  for (RecordId id = 0; id < l.n; ++id)
    CHECK(inv[static_cast<std::size_t>(l.page_of_id(id)) * l.n_p + l.slot_of_id(id)] == id);
}

TEST_CASE("960-d float records: 4 KB errors, 8 KB packs a single record per page") {
  VectorDataset base = make_blobs(40, 960, 2, 3);
  std::vector<std::vector<RecordId>> adj(40);
  for (RecordId u = 0; u < 40; ++u)
    for (RecordId step = 1; step <= 64; ++step) adj[u].push_back((u + step) % 40);
  GraphIndex g = graph_from_adj(std::move(adj));
  REQUIRE(g.r_max == 64);
  CHECK(record_size_bytes(960, ElemKind::f32, 64) == 4100);

  TempDir tmp("gistlike");
  CHECK_THROWS_WITH_AS(pack_disk_index(base, g, 4096, nullptr, tmp.file("x.odi")),
                       doctest::Contains("larger --page-size"), Error);
  DiskIndexMeta meta = pack_disk_index(base, g, 8192, nullptr, tmp.file("x.odi"));
  CHECK(meta.n_p == 1);

  ShuffleResult sr = shuffle_pages(g, 8192, meta.record_size(), 2, 0);
  CHECK(sr.degenerate);
  CHECK_FALSE(sr.layout.mapped);
}

TEST_CASE("pack then read-all equals the source (round-trip oracle)") {
  VectorDataset base = make_blobs(500, 24, 6, 17);
  GraphIndex g = random_graph(500, 10, 3);
  g.medoid = 7;
  TempDir tmp("packrt");
  pack_disk_index(base, g, 4096, nullptr, tmp.file("id.odi"));

  DiskIndexReader reader(tmp.file("id.odi"), DirectIo::off);
  CHECK(reader.meta().n == 500);
  CHECK(reader.meta().medoid == 7);
  for (RecordId id = 0; id < 500; ++id) {
    DecodedRecord rec = reader.read_record(id);
    CHECK(std::memcmp(rec.vec.data(), base.row(id), base.row_bytes()) == 0);
    CHECK(rec.neighbors == g.adj[id]);
  }

  SUBCASE("mapped layout round-trips through the sidecar") {
    PageLayout l = random_layout(500, 4096, reader.meta().record_size(), 11);
    pack_disk_index(base, g, 4096, &l, tmp.file("map.odi"));
    DiskIndexReader mapped(tmp.file("map.odi"), DirectIo::off);
    CHECK(mapped.meta().mapped);
    for (RecordId id = 0; id < 500; id += 13) {
      DecodedRecord rec = mapped.read_record(id);
      CHECK(std::memcmp(rec.vec.data(), base.row(id), base.row_bytes()) == 0);
      CHECK(rec.neighbors == g.adj[id]);
    }
  }
}

TEST_CASE("file length is header page plus page_count pages") {
  VectorDataset base = make_blobs(33, 8, 2, 29);
  GraphIndex g = random_graph(33, 4, 7);
  TempDir tmp("len");
  DiskIndexMeta meta = pack_disk_index(base, g, 4096, nullptr, tmp.file("x.odi"));
  PageLayout l = PageLayout::identity(33, 4096, meta.record_size());
  CHECK(std::filesystem::file_size(tmp.file("x.odi")) ==
        4096ull * (1 + l.page_count));
}

TEST_CASE("overlap ratio: frozen formula value 2/(16-1)") {
  // one page of 16 records; vertex 0 has exactly 2 of its neighbors inside
  std::vector<std::vector<RecordId>> adj(32);
  adj[0] = {1, 2, 20, 21, 22};  // 1, 2 co-resident; 20..22 on the next page
  GraphIndex g = graph_from_adj(std::move(adj));
  PageLayout l = PageLayout::identity(32, 4096, 256);
  REQUIRE(l.n_p == 16);
  CHECK(overlap_ratio_vertex(l, g, 0) == doctest::Approx(2.0 / 15.0));
  CHECK(overlap_ratio_vertex(l, g, 0) == doctest::Approx(0.13333).epsilon(1e-3));
}

TEST_CASE("overlap ratio edge cases") {
  SUBCASE("no co-located neighbors gives 0") {
    std::vector<std::vector<RecordId>> adj(32);
    adj[0] = {16, 17};
    GraphIndex g = graph_from_adj(std::move(adj));
    PageLayout l = PageLayout::identity(32, 4096, 256);
    CHECK(overlap_ratio_vertex(l, g, 0) == 0.0);
  }
  SUBCASE("K4 packed four per page gives OR(u) = OR(G) = 1") {
    std::vector<std::vector<RecordId>> adj(4);
    for (RecordId u = 0; u < 4; ++u)
      for (RecordId v = 0; v < 4; ++v)
        if (u != v) adj[u].push_back(v);
    GraphIndex g = graph_from_adj(std::move(adj));
    PageLayout l = PageLayout::identity(4, 4096, 1024);
    REQUIRE(l.n_p == 4);
    for (RecordId u = 0; u < 4; ++u) CHECK(overlap_ratio_vertex(l, g, u) == doctest::Approx(1.0));
    CHECK(overlap_ratio_graph(l, g) == doctest::Approx(1.0));
  }
  SUBCASE("n_p == 1 is defined as zero") {
    GraphIndex g = graph_from_adj({{1}, {0}});
    PageLayout l = PageLayout::identity(2, 4096, 4000);
    CHECK(overlap_ratio_vertex(l, g, 0) == 0.0);
  }
}

TEST_CASE("OR(G) equals the recount oracle on random graph/layout pairs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 12; ++trial) {
    std::uint32_t n = 40 + static_cast<std::uint32_t>(rng() % 160);
    GraphIndex g = random_graph(n, 6, rng());
    PageLayout l = random_layout(n, 4096, 512, rng());
    CHECK(overlap_ratio_graph(l, g) == doctest::Approx(oracle_or(l, g)).epsilon(1e-12));
  }
}

TEST_CASE("identity OR(G) of a random graph is near the R/n baseline") {
  const std::uint32_t n = 4000, degree = 16;
  GraphIndex g = random_graph(n, degree, 1);
  PageLayout l = PageLayout::identity(n, 4096, 256);
  // expected co-located neighbors per vertex ~ degree * (n_p - 1) / n
  double expected = degree * 15.0 / n / 15.0;
  double got = overlap_ratio_graph(l, g);
  CHECK(got == doctest::Approx(expected).epsilon(0.75));
  CHECK(got < 0.01);
}

TEST_CASE("predicted page reads") {
  SUBCASE("frozen example: R=64, H=50, OR=6.25%, n_p=16") {
    PageReadModel m = predicted_page_reads(64, 50, 0.0625, 16);
    CHECK(m.with_neighbor_reads == doctest::Approx(3200.0));
  }
  SUBCASE("OR=1, n_p=H gives one page") {
    PageReadModel m = predicted_page_reads(10, 16, 1.0, 16);
    CHECK(m.pq_optimized == doctest::Approx(1.0));
  }
  SUBCASE("pq_optimized == with_neighbor_reads / R_bar") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
      double r = 1 + static_cast<double>(rng() % 100);
      double h = 1 + static_cast<double>(rng() % 200);
      double orr = 0.01 + static_cast<double>(rng() % 90) / 100.0;
      std::uint32_t np = 1 + static_cast<std::uint32_t>(rng() % 30);
      PageReadModel m = predicted_page_reads(r, h, orr, np);
      CHECK(m.pq_optimized == doctest::Approx(m.with_neighbor_reads / r));
    }
  }
  SUBCASE("OR == 0 signals") {
    CHECK_THROWS_AS(predicted_page_reads(64, 50, 0.0, 16), Error);
  }
}

TEST_CASE("shuffle on the C8 ring reaches consecutive packing") {
  // ring 0-1-2-...-7-0, both directions; n_p=4. Optimal packing puts two
  // arcs of 4 consecutive vertices on the two pages: 6 of 8 undirected
  // edges co-located (12 directed), OR(G) = 12 / (8 * 3) = 0.5.
  std::vector<std::vector<RecordId>> adj(8);
  for (RecordId u = 0; u < 8; ++u) {
    adj[u].push_back((u + 1) % 8);
    adj[u].push_back((u + 7) % 8);
  }
  GraphIndex g = graph_from_adj(std::move(adj));
  ShuffleResult sr = shuffle_pages(g, 4096, 1024, 4, 0);
  REQUIRE(sr.layout.n_p == 4);
  PageLayout identity = PageLayout::identity(8, 4096, 1024);
  CHECK(overlap_ratio_graph(sr.layout, g) >= overlap_ratio_graph(identity, g));
  CHECK(sr.colocated_shuffled == 12);  // enumerated optimum for C8 at n_p=4
  CHECK(overlap_ratio_graph(sr.layout, g) == doctest::Approx(0.5));
}

TEST_CASE("shuffle of an edgeless graph terminates with OR 0") {
  GraphIndex g = graph_from_adj(std::vector<std::vector<RecordId>>(20));
  ShuffleResult sr = shuffle_pages(g, 4096, 1024, 2, 0);
  CHECK(overlap_ratio_graph(sr.layout, g) == 0.0);
  CHECK(sr.colocated_shuffled == 0);
}

TEST_CASE("shuffle never loses to identity and bookkeeping matches recounts") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    std::uint32_t n = 40 + static_cast<std::uint32_t>(rng() % 200);
    GraphIndex g = random_graph(n, 8, rng());
    ShuffleResult sr = shuffle_pages(g, 4096, 512, 2, rng());
    PageLayout identity = PageLayout::identity(n, 4096, 512);
    CHECK(sr.colocated_identity == colocated_edges(identity, g));
    CHECK(sr.colocated_shuffled == colocated_edges(sr.layout, g));
    CHECK(sr.colocated_shuffled >= sr.colocated_identity);
    // bijectivity of the result
    auto inv = sr.layout.build_inverse();
    std::size_t occupied = 0;
    for (RecordId id : inv)
      if (id != kInvalidId) ++occupied;
    CHECK(occupied == n);
  }
}

TEST_CASE("additional hill-climb passes never reduce the objective") {
  GraphIndex g = random_graph(400, 8, 17);
  std::uint64_t prev = 0;
  for (std::uint32_t passes : {0u, 1u, 2u, 4u}) {
    ShuffleResult sr = shuffle_pages(g, 4096, 512, passes, 1);
    CHECK(sr.colocated_shuffled >= prev);
    prev = sr.colocated_shuffled;
  }
}
