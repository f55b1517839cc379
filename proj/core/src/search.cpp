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

#include "octoann/search.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <deque>
#include <limits>
#include <unordered_map>

namespace octoann {

void SearchConfig::validate() const {
  require(k >= 1 && k <= L, "k must satisfy 1 <= k <= L");
  require(beam >= 1, "beam width must be >= 1");
  if (dynamic_width) {
    require(dw.omega_min >= 1 && dw.omega_min <= dw.omega_max,
            "dynamic width requires 1 <= omega_min <= omega_max");
    require(dw.omega_min <= beam && beam <= dw.omega_max,
            "beam width must lie in [omega_min, omega_max]");
  }
  if (pipeline) require(pipeline_depth >= 1, "pipeline depth must be >= 1");
  if (use_memgraph) require(mem_fanout >= 1, "memgraph fanout must be >= 1");
}

double io_utilization(const SearchStats& stats) {
  require(stats.n_read > 0, "io_utilization undefined: no records read");
  return static_cast<double>(stats.n_eff) / static_cast<double>(stats.n_eff + stats.n_rbu);
}

std::uint32_t dynamic_width_schedule(std::uint32_t iteration, std::int64_t signal_iteration,
                                     const SearchConfig& cfg) {
  std::uint32_t start = cfg.dw.warmup;
  if (signal_iteration >= 0)
    start = std::min<std::uint32_t>(start, static_cast<std::uint32_t>(signal_iteration));
  std::uint32_t e = iteration > start ? iteration - start : 0;
  if (e > 30) e = 30;
  std::uint64_t w = static_cast<std::uint64_t>(cfg.dw.omega_min) << e;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(w, cfg.dw.omega_max));
}

// ---- engine construction ---------------------------------------------------

SearchEngine::SearchEngine(const Options& opts) {
  require(!opts.index_path.empty(), "index path is required");
  identity_ = std::make_unique<DiskIndexReader>(opts.index_path, opts.direct_io, opts.io_threads);
  if (!opts.shuffled_index_path.empty()) {
    shuffled_ = std::make_unique<DiskIndexReader>(opts.shuffled_index_path, opts.direct_io,
                                                  opts.io_threads);
    require(shuffled_->meta().n == identity_->meta().n &&
                shuffled_->meta().d == identity_->meta().d,
            "shuffled index disagrees with identity index");
  }
  if (!opts.pq_codebook_path.empty() || !opts.pq_codes_path.empty()) {
    require(!opts.pq_codebook_path.empty() && !opts.pq_codes_path.empty(),
            "PQ needs both codebook and codes files");
    codebook_ = load_codebook(opts.pq_codebook_path);
    codes_ = load_codes(opts.pq_codes_path);
    require(codes_->n == identity_->meta().n, "PQ codes cover a different record count");
    require(codebook_->d == identity_->meta().d, "PQ codebook dimension mismatch");
    metric_ = codebook_->metric;
  }
  if (!opts.memgraph_path.empty()) {
    memgraph_ = load_memgraph(opts.memgraph_path);
    require(memgraph_->vectors.d == identity_->meta().d, "memgraph dimension mismatch");
  }
  if (opts.cache_budget > 0) {
    require(!opts.graph_path.empty(), "cache build needs the graph file");
    GraphIndex g = load_graph(opts.graph_path);
    cache_ = build_sssp_cache(g, *identity_, identity_->meta().medoid, opts.cache_budget);
  }
}

const DiskIndexReader& SearchEngine::reader_for(const SearchConfig& cfg) const {
  if (cfg.use_shuffled_layout) {
    require(shuffled_ != nullptr, "use_shuffled_layout set but no shuffled index is loaded");
    return *shuffled_;
  }
  return *identity_;
}

void SearchEngine::check_config(const SearchConfig& cfg) const {
  cfg.validate();
  if (cfg.use_pq) require(has_pq(), "use_pq set but no PQ model is loaded");
  if (cfg.use_memgraph) require(has_memgraph(), "use_memgraph set but no memgraph is loaded");
  if (cfg.use_cache) require(has_cache(), "use_cache set but no cache was built");
  if (cfg.use_shuffled_layout)
    require(has_shuffled(), "use_shuffled_layout set but no shuffled index is loaded");
  if (cfg.pipeline)
    require(cfg.use_pq, "pipeline mode requires PQ scoring (neighbors must be scorable in memory)");
}

IoStats SearchEngine::io_stats() const {
  IoStats s = identity_->io_stats();
  if (shuffled_) {
    IoStats t = shuffled_->io_stats();
    s.pages += t.pages;
    s.bytes += t.bytes;
    s.read_ns += t.read_ns;
    for (std::size_t i = 0; i < s.latency_hist.size(); ++i)
      s.latency_hist[i] += t.latency_hist[i];
  }
  return s;
}

// ---- per-query state -------------------------------------------------------

namespace {

struct NodeState {
  float key = 0.0f;        // candidate-list ordering key
  float full_dist = 0.0f;  // valid once materialized
  bool materialized = false;
  bool expanded = false;
  bool requested = false;
  bool in_list = false;
  bool offered = false;  // ever presented to the candidate list
  std::vector<RecordId> neighbors;  // kept only in full-precision mode
};

}  // namespace

struct SearchEngine::QueryCtx {
  const SearchEngine& eng;
  const DiskIndexReader& reader;
  const SearchConfig& cfg;
  const std::byte* query;
  std::vector<float> query_f;
  std::optional<DistanceTable> table;

  std::unordered_map<RecordId, NodeState> states;     // doubles as the seen set
  std::vector<std::pair<float, RecordId>> list;       // sorted by (key, id), <= L
  std::vector<std::pair<float, RecordId>> pool;       // materialized records
  std::unordered_map<std::uint32_t, std::vector<std::byte>> scratch;  // fetched pages
  SearchStats stats;

  float best_full = std::numeric_limits<float>::max();
  bool improved = false;
  std::uint32_t round = 0;
  std::uint32_t last_improve = 0;
  std::int64_t signal = -1;

  QueryCtx(const SearchEngine& e, const DiskIndexReader& r, const SearchConfig& c,
           const std::byte* q)
      : eng(e), reader(r), cfg(c), query(q) {
    const DiskIndexMeta& m = r.meta();
    query_f.resize(m.d);
    if (m.elem == ElemKind::f32) {
      std::memcpy(query_f.data(), q, m.d * 4);
    } else {
      for (std::uint32_t j = 0; j < m.d; ++j)
        query_f[j] = m.elem == ElemKind::u8
                         ? static_cast<float>(static_cast<std::uint8_t>(q[j]))
                         : static_cast<float>(static_cast<std::int8_t>(q[j]));
    }
    if (cfg.use_pq) {
      table = build_distance_table(*e.codebook_, query_f.data());
    }
  }

  float pq_key(RecordId id) {
    ++stats.pq_dist_comps;
    return approx_distance(*table, eng.codes_->code(id));
  }

  float full_distance(const std::byte* vec) {
    ++stats.full_dist_comps;
    return raw_distance(reader.meta().elem, eng.metric_, vec, query, reader.meta().d);
  }

  // Offer an id to the L-bounded list once. Dropped/evicted ids stay in
  // `states` and are never re-inserted.
  void insert_candidate(RecordId id, float key) {
    NodeState& st = states[id];
    if (st.offered) return;
    st.offered = true;
    st.key = key;
    std::pair<float, RecordId> entry{key, id};
    if (list.size() == cfg.L && entry >= list.back()) {
      st.in_list = false;
      return;
    }
    list.insert(std::lower_bound(list.begin(), list.end(), entry), entry);
    st.in_list = true;
    if (list.size() > cfg.L) {
      states[list.back().second].in_list = false;
      list.pop_back();
    }
  }

  void materialize(RecordId id, const std::byte* vec) {
    NodeState& st = states[id];
    if (st.materialized) return;
    st.materialized = true;
    st.full_dist = full_distance(vec);
    pool.emplace_back(st.full_dist, id);
    ++stats.n_read;
    if (st.full_dist < best_full) {
      best_full = st.full_dist;
      improved = true;
    }
  }

  // Expansion: score and enqueue every unseen neighbor (PQ mode).
  void expand_pq(RecordId id, std::span<const RecordId> neighbors) {
    NodeState& st = states[id];
    if (st.expanded) return;
    st.expanded = true;
    ++stats.n_eff;
    for (RecordId v : neighbors) {
      if (states.count(v)) continue;
      states.emplace(v, NodeState{});
      insert_candidate(v, pq_key(v));
    }
  }

  const std::byte* page_bytes(std::uint32_t page) {
    auto it = scratch.find(page);
    return it == scratch.end() ? nullptr : it->second.data();
  }

  const std::byte* fetch_page(std::uint32_t page) {
    auto [it, fresh] = scratch.try_emplace(page);
    if (fresh) {
      it->second.resize(reader.meta().page_size);
      reader.read_page(page, it->second.data());
      ++stats.pages_read;
    }
    return it->second.data();
  }

  // In-page discovery on a freshly read page: every resident gets a
  // full-precision distance; in PQ mode its neighbors are enqueued, in
  // full-precision mode the resident itself becomes a candidate.
  void page_search_expand(std::uint32_t page, const std::byte* bytes) {
    const DiskIndexMeta& m = reader.meta();
    const auto& inverse = reader.inverse();
    for (std::uint32_t slot = 0; slot < m.n_p; ++slot) {
      RecordId rid = inverse[static_cast<std::size_t>(page) * m.n_p + slot];
      if (rid == kInvalidId) continue;
      NodeState& st = states.try_emplace(rid).first->second;
      if (st.materialized) continue;
      RecordView view = decode_record(m, bytes, slot);
      materialize(rid, view.vec);
      if (cfg.use_pq) {
        expand_pq(rid, view.neighbors);
      } else {
        st.neighbors.assign(view.neighbors.begin(), view.neighbors.end());
        if (!st.in_list && !st.expanded) insert_candidate(rid, st.full_dist);
      }
    }
  }

  // Resolve record bytes for the given ids: cache first, then the per-query
  // scratch map, reading missing pages in ascending page order. Calls
  // fn(id, vec, neighbors) in the ids' order. Newly read pages get in-page
  // discovery when page_search is on.
  template <typename Fn>
  void resolve_records(std::span<const RecordId> ids, Fn&& fn) {
    const DiskIndexMeta& m = reader.meta();
    const PageLayout& layout = reader.layout();
    std::vector<std::uint32_t> needed;
    for (RecordId id : ids) {
      if (cfg.use_cache && eng.cache_->lookup(id) != nullptr) continue;
      std::uint32_t page = layout.page_of_id(id);
      if (!scratch.count(page)) needed.push_back(page);
    }
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    for (std::uint32_t page : needed) {
      const std::byte* bytes = fetch_page(page);
      if (cfg.page_search) page_search_expand(page, bytes);
    }
    for (RecordId id : ids) {
      if (cfg.use_cache) {
        if (const DecodedRecord* rec = eng.cache_->lookup(id)) {
          ++stats.cache_hits;
          fn(id, rec->vec.data(), std::span<const RecordId>(rec->neighbors));
          continue;
        }
      }
      const std::byte* bytes = page_bytes(layout.page_of_id(id));
      RecordView view = decode_record(m, bytes, layout.slot_of_id(id));
      fn(id, view.vec, view.neighbors);
    }
  }

  void end_round() {
    if (improved) last_improve = round;
    if (signal < 0 && round - last_improve >= cfg.dw.patience)
      signal = static_cast<std::int64_t>(round);
    improved = false;
    ++round;
    ++stats.hops;
  }

  std::uint32_t width_now() const {
    return cfg.dynamic_width ? dynamic_width_schedule(round, signal, cfg) : cfg.beam;
  }

  std::vector<RecordId> collect_picks(std::uint32_t width) {
    std::vector<RecordId> picks;
    for (const auto& [key, id] : list) {
      if (picks.size() >= width) break;
      if (!states[id].expanded) picks.push_back(id);
    }
    return picks;
  }

  SearchResult finalize() {
    stats.n_rbu = stats.n_read - stats.n_eff;
    std::sort(pool.begin(), pool.end());
    SearchResult res;
    std::size_t k = std::min<std::size_t>(cfg.k, pool.size());
    res.ids.reserve(k);
    res.dists.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      res.dists.push_back(pool[i].first);
      res.ids.push_back(pool[i].second);
    }
    res.stats = stats;
    return res;
  }
};

// ---- search loops ----------------------------------------------------------

namespace {

std::vector<RecordId> dedup_entries(std::vector<RecordId> entries) {
  std::vector<RecordId> out;
  for (RecordId e : entries)
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  return out;
}

}  // namespace

SearchResult SearchEngine::search(const std::byte* query_row, const SearchConfig& cfg) const {
  check_config(cfg);
  auto t0 = std::chrono::steady_clock::now();

  const DiskIndexReader& reader = reader_for(cfg);
  QueryCtx ctx(*this, reader, cfg, query_row);

  std::vector<RecordId> entries;
  if (cfg.use_memgraph) {
    entries = dedup_entries(select_entries(*memgraph_, query_row, cfg.mem_L, cfg.mem_fanout));
  } else {
    entries = {reader.meta().medoid};
  }

  if (cfg.use_pq) {
    for (RecordId e : entries) {
      if (ctx.states.count(e)) continue;
      ctx.states.emplace(e, NodeState{});
      ctx.insert_candidate(e, ctx.pq_key(e));
    }
    if (cfg.pipeline) {
      run_pipeline(ctx);
    } else {
      run_beam_pq(ctx);
    }
  } else {
    // Full-precision traversal: a record must be fetched before it can be
    // scored, so entries and every enqueued neighbor are materialized.
    for (RecordId e : entries) ctx.states.try_emplace(e);
    ctx.resolve_records(entries, [&](RecordId id, const std::byte* vec,
                                     std::span<const RecordId> nbrs) {
      NodeState& st = ctx.states[id];
      if (!st.materialized) ctx.materialize(id, vec);
      st.neighbors.assign(nbrs.begin(), nbrs.end());
      if (!st.in_list) ctx.insert_candidate(id, st.full_dist);
    });
    run_beam_fp(ctx);
  }

  SearchResult res = ctx.finalize();
  auto t1 = std::chrono::steady_clock::now();
  res.stats.latency_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  return res;
}

SearchResult SearchEngine::search(const VectorDataset& queries, std::size_t qi,
                                  const SearchConfig& cfg) const {
  require(queries.d == meta().d, "query dimension mismatch");
  require(queries.elem == meta().elem, "query element kind mismatch");
  return search(queries.row(qi), cfg);
}

void SearchEngine::run_beam_pq(QueryCtx& ctx) const {
  for (;;) {
    std::vector<RecordId> picks = ctx.collect_picks(ctx.width_now());
    if (picks.empty()) break;
    ctx.resolve_records(picks, [&](RecordId id, const std::byte* vec,
                                   std::span<const RecordId> nbrs) {
      ctx.materialize(id, vec);
      ctx.expand_pq(id, nbrs);
    });
    ctx.end_round();
  }
}

void SearchEngine::run_beam_fp(QueryCtx& ctx) const {
  std::vector<RecordId> unseen;
  for (;;) {
    std::vector<RecordId> picks = ctx.collect_picks(ctx.width_now());
    if (picks.empty()) break;
    for (RecordId p : picks) {
      NodeState& st = ctx.states[p];
      if (st.expanded) continue;  // in-page discovery may have raced ahead
      st.expanded = true;
      ++ctx.stats.n_eff;
      unseen.clear();
      for (RecordId v : st.neighbors) {
        if (ctx.states.count(v)) continue;
        ctx.states.try_emplace(v);
        unseen.push_back(v);
      }
      ctx.resolve_records(unseen, [&](RecordId id, const std::byte* vec,
                                      std::span<const RecordId> nbrs) {
        NodeState& ns = ctx.states[id];
        if (!ns.materialized) ctx.materialize(id, vec);
        ns.neighbors.assign(nbrs.begin(), nbrs.end());
        if (!ns.in_list && !ns.expanded) ctx.insert_candidate(id, ns.full_dist);
      });
    }
    ctx.end_round();
  }
}

void SearchEngine::run_pipeline(QueryCtx& ctx) const {
  const DiskIndexMeta& m = ctx.reader.meta();
  const PageLayout& layout = ctx.reader.layout();
  IoBatch batch(ctx.reader.pages(), std::max(ctx.cfg.pipeline_depth, ctx.cfg.dw.omega_max));
  std::unordered_map<std::uint32_t, std::vector<RecordId>> pending;  // submitted, undigested
  std::deque<IoBatch::Completion> backlog;  // completed, not yet digested
  std::uint32_t processed_in_round = 0;

  auto width_cap = [&]() {
    return ctx.cfg.dynamic_width ? dynamic_width_schedule(ctx.round, ctx.signal, ctx.cfg)
                                 : ctx.cfg.pipeline_depth;
  };

  auto serve = [&](RecordId id, const std::byte* vec, std::span<const RecordId> nbrs) {
    ctx.materialize(id, vec);
    ctx.expand_pq(id, nbrs);
  };

  // Walk the candidate list best-first: serve zero-I/O candidates (cache or
  // already-fetched pages) unless an in-flight candidate outranks them, and
  // request reads for the rest while slots remain. Completed-but-undigested
  // pages hold their slot only at depth 1 (which must match the sequential
  // loop exactly); at depth >= 2 freed slots are re-requested immediately, so
  // the device queue never waits for compute and requests are committed
  // before the backlog's contents are known. Those commitments are the
  // speculative reads of pipelined search.
  auto occupied = [&]() {
    std::size_t held = batch.in_flight();
    if (width_cap() <= 1) held += backlog.size();
    return held;
  };

  auto pump = [&]() {
    for (bool progress = true; progress;) {
      progress = false;
      bool blocked = false;  // an in-flight candidate ranks above this point
      for (const auto& [key, id] : ctx.list) {
        NodeState& st = ctx.states[id];
        if (st.expanded) continue;
        if (st.requested) {
          blocked = true;
          continue;
        }
        if (ctx.cfg.use_cache && cache_->lookup(id) != nullptr) {
          if (blocked) continue;  // keep zero-I/O serving in rank order
          const DecodedRecord* rec = cache_->lookup(id);
          ++ctx.stats.cache_hits;
          serve(id, rec->vec.data(), std::span<const RecordId>(rec->neighbors));
          progress = true;
          break;
        }
        std::uint32_t page = layout.page_of_id(id);
        if (ctx.scratch.count(page) && !pending.count(page)) {
          if (blocked) continue;
          RecordView view = decode_record(m, ctx.page_bytes(page), layout.slot_of_id(id));
          serve(id, view.vec, view.neighbors);
          progress = true;
          break;
        }
        if (occupied() >= width_cap()) break;
        st.requested = true;
        auto [it, fresh] = pending.try_emplace(page);
        it->second.push_back(id);
        if (fresh) batch.submit(page);
        progress = true;
        break;
      }
    }
  };

  for (;;) {
    pump();
    if (batch.in_flight() == 0 && backlog.empty()) break;

    if (backlog.empty()) {
      auto completions = batch.poll(true);
      std::sort(completions.begin(), completions.end(),
                [](const IoBatch::Completion& a, const IoBatch::Completion& b) {
                  return a.page < b.page;
                });
      for (const auto& c : completions) backlog.push_back(c);
      pump();  // refill freed slots before digesting the completions
    }

    IoBatch::Completion comp = backlog.front();
    backlog.pop_front();
    require(comp.error == 0, "async page read failed");
    auto [it, fresh] = ctx.scratch.try_emplace(comp.page);
    require(fresh, "page submitted twice within one query");
    it->second.assign(comp.data, comp.data + m.page_size);
    batch.release(comp.slot);
    ++ctx.stats.pages_read;
    const std::byte* bytes = it->second.data();

    if (ctx.cfg.page_search) ctx.page_search_expand(comp.page, bytes);

    auto pend = pending.find(comp.page);
    for (RecordId id : pend->second) {
      NodeState& st = ctx.states[id];
      RecordView view = decode_record(m, bytes, layout.slot_of_id(id));
      ctx.materialize(id, view.vec);
      // Speculative read superseded by eviction: read but unexplored.
      if (st.in_list && !st.expanded) ctx.expand_pq(id, view.neighbors);
    }
    pending.erase(pend);

    // A round is one beam-width's worth of digested pages, keeping the
    // dynamic-width clock comparable with the sequential loop.
    if (++processed_in_round >= width_cap()) {
      processed_in_round = 0;
      ctx.end_round();
    }
  }
  if (processed_in_round > 0) ctx.end_round();
}

}  // namespace octoann
