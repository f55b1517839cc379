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

#include "octoann/disk_layout.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <queue>

namespace octoann {

namespace {

constexpr char kIndexMagic[4] = {'O', 'D', 'I', '1'};
constexpr std::size_t kHeaderFixed = 4 + 4 * 7 + 2;  // magic + 7 u32 + elem + flag

void put_u32(std::byte* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
std::uint32_t get_u32(const std::byte* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

std::uint32_t record_size_bytes(std::size_t d, ElemKind elem, std::uint32_t r_max) {
  return static_cast<std::uint32_t>(d * elem_size(elem) + 4 + 4ull * r_max);
}

PageLayout PageLayout::identity(std::uint32_t n, std::uint32_t page_size,
                                std::uint32_t record_size) {
  require(record_size >= 1 && record_size <= page_size, "record does not fit in a page");
  PageLayout l;
  l.page_size = page_size;
  l.record_size = record_size;
  l.n_p = page_size / record_size;
  l.n = n;
  l.page_count = (n + l.n_p - 1) / l.n_p;
  l.mapped = false;
  return l;
}

std::vector<RecordId> PageLayout::build_inverse() const {
  std::vector<RecordId> inv(static_cast<std::size_t>(page_count) * n_p, kInvalidId);
  for (std::uint32_t id = 0; id < n; ++id) {
    std::size_t pos = static_cast<std::size_t>(page_of_id(id)) * n_p + slot_of_id(id);
    require(pos < inv.size() && inv[pos] == kInvalidId, "layout is not a bijection");
    inv[pos] = id;
  }
  return inv;
}

DiskIndexMeta pack_disk_index(const VectorDataset& base, const GraphIndex& g,
                              std::uint32_t page_size, const PageLayout* layout,
                              const std::string& path) {
  require(base.n == g.n, "dataset and graph disagree on n");
  require(page_size >= 4096 && (page_size & (page_size - 1)) == 0,
          "page size must be a power of two >= 4096");
  const std::uint32_t s_rec = record_size_bytes(base.d, base.elem, g.r_max);
  if (s_rec > page_size) {
    raise("record size " + std::to_string(s_rec) + " exceeds page size " +
          std::to_string(page_size) + "; retry with a larger --page-size");
  }

  PageLayout identity = PageLayout::identity(g.n, page_size, s_rec);
  const PageLayout& l = layout ? *layout : identity;
  require(l.page_size == page_size && l.record_size == s_rec && l.n == g.n,
          "layout does not match dataset/page parameters");

  DiskIndexMeta meta;
  meta.n = g.n;
  meta.d = static_cast<std::uint32_t>(base.d);
  meta.elem = base.elem;
  meta.r_max = g.r_max;
  meta.page_size = page_size;
  meta.n_p = l.n_p;
  meta.medoid = g.medoid;
  meta.mapped = l.mapped;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create file: " + path);

  std::vector<std::byte> page(page_size);
  std::byte* h = page.data();
  std::memcpy(h, kIndexMagic, 4);
  put_u32(h + 4, meta.version);
  put_u32(h + 8, meta.n);
  put_u32(h + 12, meta.d);
  h[16] = static_cast<std::byte>(meta.elem);
  put_u32(h + 17, meta.r_max);
  put_u32(h + 21, meta.page_size);
  put_u32(h + 25, meta.n_p);
  put_u32(h + 29, meta.medoid);
  h[33] = static_cast<std::byte>(meta.mapped ? 1 : 0);
  static_assert(kHeaderFixed == 34);
  out.write(reinterpret_cast<const char*>(page.data()), page_size);

  std::vector<RecordId> inverse = l.build_inverse();
  const std::size_t vec_bytes = base.row_bytes();
  for (std::uint32_t p = 0; p < l.page_count; ++p) {
    std::fill(page.begin(), page.end(), std::byte{0});
    for (std::uint32_t s = 0; s < l.n_p; ++s) {
      RecordId id = inverse[static_cast<std::size_t>(p) * l.n_p + s];
      if (id == kInvalidId) continue;
      std::byte* rec = page.data() + static_cast<std::size_t>(s) * s_rec;
      std::memcpy(rec, base.row(id), vec_bytes);
      std::uint32_t count = static_cast<std::uint32_t>(g.adj[id].size());
      put_u32(rec + vec_bytes, count);
      std::memcpy(rec + vec_bytes + 4, g.adj[id].data(), 4ull * count);
    }
    out.write(reinterpret_cast<const char*>(page.data()), page_size);
  }
  require(out.good(), "short write on " + path);
  out.close();

  if (l.mapped) save_layout_sidecar(l, path);
  return meta;
}

void save_layout_sidecar(const PageLayout& layout, const std::string& index_path) {
  std::ofstream out(index_path + ".map", std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create sidecar map for " + index_path);
  for (std::uint32_t id = 0; id < layout.n; ++id) {
    std::uint32_t p = layout.page_of_id(id);
    std::uint16_t s = layout.slot_of_id(id);
    out.write(reinterpret_cast<const char*>(&p), 4);
    out.write(reinterpret_cast<const char*>(&s), 2);
  }
  require(out.good(), "short write on sidecar map for " + index_path);
}

DiskIndexMeta read_disk_index_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::byte h[kHeaderFixed];
  in.read(reinterpret_cast<char*>(h), kHeaderFixed);
  require(in.good() && std::memcmp(h, kIndexMagic, 4) == 0, "bad index magic in " + path);
  DiskIndexMeta meta;
  meta.version = get_u32(h + 4);
  meta.n = get_u32(h + 8);
  meta.d = get_u32(h + 12);
  meta.elem = static_cast<ElemKind>(h[16]);
  meta.r_max = get_u32(h + 17);
  meta.page_size = get_u32(h + 21);
  meta.n_p = get_u32(h + 25);
  meta.medoid = get_u32(h + 29);
  meta.mapped = h[33] != std::byte{0};
  require(meta.version == 1, "unsupported index version in " + path);
  require(meta.n >= 1 && meta.n_p >= 1 && meta.medoid < meta.n, "corrupt index header in " + path);
  return meta;
}

PageLayout load_layout_sidecar(const std::string& index_path, const DiskIndexMeta& meta) {
  PageLayout l = PageLayout::identity(meta.n, meta.page_size, meta.record_size());
  if (!meta.mapped) return l;
  std::ifstream in(index_path + ".map", std::ios::binary);
  require(in.good(), "missing sidecar map " + index_path + ".map");
  l.mapped = true;
  l.page_of.resize(meta.n);
  l.slot_of.resize(meta.n);
  for (std::uint32_t id = 0; id < meta.n; ++id) {
    in.read(reinterpret_cast<char*>(&l.page_of[id]), 4);
    in.read(reinterpret_cast<char*>(&l.slot_of[id]), 2);
  }
  require(in.good(), "truncated sidecar map for " + index_path);
  return l;
}

RecordView decode_record(const DiskIndexMeta& meta, const std::byte* page_bytes,
                         std::uint32_t slot) {
  require(slot < meta.n_p, "slot out of range");
  const std::byte* rec = page_bytes + static_cast<std::size_t>(slot) * meta.record_size();
  const std::size_t vec_bytes = static_cast<std::size_t>(meta.d) * elem_size(meta.elem);
  RecordView view;
  view.vec = rec;
  std::uint32_t count = get_u32(rec + vec_bytes);
  require(count <= meta.r_max, "corrupt record: neighbor count exceeds bound");
  view.neighbors = std::span<const RecordId>(
      reinterpret_cast<const RecordId*>(rec + vec_bytes + 4), count);
  return view;
}

DiskIndexReader::DiskIndexReader(const std::string& path, DirectIo mode, unsigned io_threads)
    : meta_(read_disk_index_meta(path)) {
  layout_ = load_layout_sidecar(path, meta_);
  inverse_ = layout_.build_inverse();
  reader_ = std::make_unique<PageReader>(path, meta_.page_size, meta_.page_size, mode, io_threads);
  require(reader_->page_count() == layout_.page_count,
          "index file length disagrees with header on page count");
}

DecodedRecord DiskIndexReader::read_record(RecordId id) const {
  require(id < meta_.n, "record id out of range");
  std::vector<std::byte> page(meta_.page_size);
  reader_->read_page(layout_.page_of_id(id), page.data());
  RecordView view = decode_record(meta_, page.data(), layout_.slot_of_id(id));
  DecodedRecord rec;
  rec.vec.assign(view.vec, view.vec + static_cast<std::size_t>(meta_.d) * elem_size(meta_.elem));
  rec.neighbors.assign(view.neighbors.begin(), view.neighbors.end());
  return rec;
}

// ---- layout metrics ------------------------------------------------------

double overlap_ratio_vertex(const PageLayout& layout, const GraphIndex& g, RecordId u) {
  require(u < g.n, "vertex id out of range");
  if (layout.n_p <= 1) return 0.0;
  const std::uint32_t pu = layout.page_of_id(u);
  std::size_t shared = 0;
  for (RecordId v : g.adj[u])
    if (layout.page_of_id(v) == pu) ++shared;
  return static_cast<double>(shared) / static_cast<double>(layout.n_p - 1);
}

double overlap_ratio_graph(const PageLayout& layout, const GraphIndex& g) {
  double total = 0.0;
  for (RecordId u = 0; u < g.n; ++u) total += overlap_ratio_vertex(layout, g, u);
  return total / static_cast<double>(g.n);
}

std::uint64_t colocated_edges(const PageLayout& layout, const GraphIndex& g) {
  std::uint64_t count = 0;
  for (RecordId u = 0; u < g.n; ++u) {
    const std::uint32_t pu = layout.page_of_id(u);
    for (RecordId v : g.adj[u])
      if (layout.page_of_id(v) == pu) ++count;
  }
  return count;
}

PageReadModel predicted_page_reads(double r_bar, double hops, double overlap,
                                   std::uint32_t n_p) {
  require(n_p >= 1, "n_p must be >= 1");
  require(overlap > 0.0, "overlap ratio must be positive; the model is undefined at 0");
  PageReadModel m;
  m.with_neighbor_reads = r_bar * hops / (overlap * n_p);
  m.pq_optimized = hops / (overlap * n_p);
  return m;
}

// ---- page shuffle --------------------------------------------------------

namespace {

// Undirected adjacency with per-pair multiplicity (1 for each direction that
// exists); the shuffle objective counts directed co-located edges, and a
// pair's contribution equals this weight.
struct WeightedGraph {
  std::vector<std::pair<RecordId, std::uint16_t>> edges;  // (neighbor, weight)
  std::vector<std::size_t> offset;                        // n + 1

  std::span<const std::pair<RecordId, std::uint16_t>> of(RecordId u) const {
    return {edges.data() + offset[u], offset[u + 1] - offset[u]};
  }
};

WeightedGraph build_undirected(const GraphIndex& g) {
  std::vector<std::vector<std::pair<RecordId, std::uint16_t>>> tmp(g.n);
  for (RecordId u = 0; u < g.n; ++u)
    for (RecordId v : g.adj[u]) {
      tmp[u].emplace_back(v, 1);
      tmp[v].emplace_back(u, 1);
    }
  WeightedGraph w;
  w.offset.assign(g.n + 1, 0);
  for (RecordId u = 0; u < g.n; ++u) {
    auto& list = tmp[u];
    std::sort(list.begin(), list.end());
    std::size_t out = 0;
    for (std::size_t i = 0; i < list.size();) {
      std::size_t j = i;
      std::uint16_t weight = 0;
      while (j < list.size() && list[j].first == list[i].first) weight += list[j++].second;
      list[out++] = {list[i].first, weight};
      i = j;
    }
    list.resize(out);
    w.offset[u + 1] = w.offset[u] + out;
  }
  w.edges.resize(w.offset.back());
  for (RecordId u = 0; u < g.n; ++u)
    std::copy(tmp[u].begin(), tmp[u].end(), w.edges.begin() + w.offset[u]);
  return w;
}

}  // namespace

ShuffleResult shuffle_pages(const GraphIndex& g, std::uint32_t page_size,
                            std::uint32_t record_size, std::uint32_t passes,
                            std::uint64_t seed) {
  (void)seed;  // the heuristic is fully deterministic; seed reserved for variants
  ShuffleResult result;
  PageLayout identity = PageLayout::identity(g.n, page_size, record_size);
  result.colocated_identity = colocated_edges(identity, g);

  if (identity.n_p < 2) {
    result.layout = identity;
    result.degenerate = true;
    result.note = "n_p == 1: one record per page, shuffle is ineffective; identity layout kept";
    result.colocated_shuffled = result.colocated_identity;
    std::cerr << "[octoann] warning: " << result.note << "\n";
    return result;
  }

  const std::uint32_t n = g.n;
  const std::uint32_t n_p = identity.n_p;
  WeightedGraph und = build_undirected(g);

  PageLayout l = identity;
  l.mapped = true;
  l.page_of.assign(n, kInvalidId);
  l.slot_of.assign(n, 0);

  result.peak_mem_bytes = und.edges.size() * sizeof(und.edges[0]) +
                          und.offset.size() * sizeof(std::size_t) +
                          static_cast<std::uint64_t>(n) * (4 + 2 + 8 + 4);

  // Residual degree = summed weight of edges to still-unassigned vertices.
  std::vector<std::int64_t> residual(n, 0);
  for (RecordId u = 0; u < n; ++u)
    for (auto [v, w] : und.of(u)) residual[u] += w;

  // Seed picking: lazy max-heap keyed by (residual, lowest id wins ties).
  using SeedKey = std::pair<std::int64_t, std::int64_t>;  // (residual, -id)
  std::priority_queue<std::pair<SeedKey, RecordId>> seeds;
  for (RecordId u = 0; u < n; ++u)
    seeds.push({{residual[u], -static_cast<std::int64_t>(u)}, u});

  std::vector<std::vector<RecordId>> members(identity.page_count);
  std::vector<std::int64_t> gain(n, 0);
  std::vector<RecordId> touched;
  RecordId filler_cursor = 0;  // lowest unassigned id, for zero-gain fills
  std::uint32_t assigned = 0;

  auto assign = [&](RecordId v, std::uint32_t page) {
    l.page_of[v] = page;
    l.slot_of[v] = static_cast<std::uint16_t>(members[page].size());
    members[page].push_back(v);
    ++assigned;
    for (auto [w, weight] : und.of(v)) {
      if (l.page_of[w] != kInvalidId) continue;
      residual[w] -= weight;  // lazily refreshed in the seed heap on pop
      if (gain[w] == 0) touched.push_back(w);
      gain[w] += weight;
    }
  };

  std::uint32_t page = 0;
  while (assigned < n) {
    // seed: unassigned vertex of maximal residual degree
    RecordId seed_v = kInvalidId;
    while (!seeds.empty()) {
      auto [key, v] = seeds.top();
      if (l.page_of[v] != kInvalidId) {
        seeds.pop();
        continue;
      }
      if (key.first != residual[v]) {
        seeds.pop();
        seeds.push({{residual[v], -static_cast<std::int64_t>(v)}, v});
        continue;
      }
      seed_v = v;
      seeds.pop();
      break;
    }
    require(seed_v != kInvalidId, "seed heap exhausted before all records were assigned");

    touched.clear();
    assign(seed_v, page);
    while (members[page].size() < n_p && assigned < n) {
      // grow: unassigned vertex with the most edges into the page
      RecordId best = kInvalidId;
      std::int64_t best_gain = 0;
      for (RecordId v : touched) {
        if (l.page_of[v] != kInvalidId) continue;
        if (gain[v] > best_gain || (gain[v] == best_gain && best != kInvalidId && v < best))
          best = v, best_gain = gain[v];
      }
      if (best == kInvalidId) {
        // no connected unassigned vertex: everything ties at zero, lowest id
        while (l.page_of[filler_cursor] != kInvalidId) ++filler_cursor;
        best = filler_cursor;
      }
      assign(best, page);
    }
    for (RecordId v : touched) gain[v] = 0;
    ++page;
  }

  // Pairwise-swap hill climbing: pull each vertex's strongest non-co-located
  // neighbor into its page when some resident swap strictly raises the
  // co-located edge count.
  std::int64_t objective = static_cast<std::int64_t>(colocated_edges(l, g));
  auto weight_into_page = [&](RecordId x, std::uint32_t pg, RecordId excluded) {
    std::int64_t total = 0;
    for (auto [v, w] : und.of(x))
      if (v != excluded && l.page_of[v] == pg) total += w;
    return total;
  };

  for (std::uint32_t pass = 0; pass < passes; ++pass) {
    bool any = false;
    for (RecordId u = 0; u < n; ++u) {
      const std::uint32_t pu = l.page_of[u];
      // strongest neighbor not co-located with u, ties to the lowest id
      RecordId v = kInvalidId;
      std::int64_t vw = 0;
      for (auto [cand, w] : und.of(u))
        if (l.page_of[cand] != pu && w > vw) v = cand, vw = w;
      if (v == kInvalidId) continue;
      const std::uint32_t pv = l.page_of[v];

      for (RecordId w : members[pu]) {
        if (w == u) continue;
        // swap v <-> w; the (v, w) pair itself stays split either way
        std::int64_t before = weight_into_page(v, pv, w) + weight_into_page(w, pu, v);
        std::int64_t after = weight_into_page(v, pu, w) + weight_into_page(w, pv, v);
        std::int64_t delta = after - before;
        if (delta <= 0) continue;
        std::uint16_t sv = l.slot_of[v], sw = l.slot_of[w];
        std::swap(members[pv][sv], members[pu][sw]);
        l.page_of[v] = pu;
        l.slot_of[v] = sw;
        l.page_of[w] = pv;
        l.slot_of[w] = sv;
        objective += delta;
        any = true;
        break;
      }
    }
    if (!any) break;
  }

  result.colocated_shuffled = colocated_edges(l, g);
  require(result.colocated_shuffled == static_cast<std::uint64_t>(objective),
          "shuffle objective bookkeeping diverged from recount");

  if (result.colocated_shuffled < result.colocated_identity) {
    // Guard: never hand back a layout worse than identity.
    result.layout = identity;
    result.colocated_shuffled = result.colocated_identity;
    result.note = "greedy packing lost to identity order; identity layout kept";
    return result;
  }
  result.layout = std::move(l);
  return result;
}

}  // namespace octoann
