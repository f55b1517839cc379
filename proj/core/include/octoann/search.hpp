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

#pragma once

#include <memory>
#include <optional>

#include "octoann/disk_layout.hpp"
#include "octoann/memgraph.hpp"
#include "octoann/pq.hpp"
#include "octoann/sssp_cache.hpp"
#include "octoann/types.hpp"

namespace octoann {

struct DynamicWidthParams {
  std::uint32_t omega_min = 8;
  std::uint32_t omega_max = 32;
  std::uint32_t warmup = 4;    // iterations held at omega_min before growth
  std::uint32_t patience = 2;  // non-improving iterations that end the approach phase
};

struct SearchConfig {
  std::uint32_t k = 10;
  std::uint32_t L = 100;   // candidate list bound
  std::uint32_t beam = 8;  // base beam width (omega)

  bool use_pq = true;  // off = full-precision traversal (every scored record is fetched)
  bool use_cache = false;
  bool use_memgraph = false;
  bool use_shuffled_layout = false;
  bool dynamic_width = false;
  bool pipeline = false;
  bool page_search = false;

  DynamicWidthParams dw;
  std::uint32_t pipeline_depth = 8;

  std::uint32_t mem_L = 10;  // in-memory navigation list size
  std::uint32_t mem_fanout = 1;

  void validate() const;
};

/// Per-query accounting. N_read counts records whose full vectors entered
/// the query (page decode, cache hit, or in-page discovery); N_eff counts
/// records whose neighbors were inserted into the candidate pool; N_rbu is
/// the difference. hops counts search iterations.
struct SearchStats {
  std::uint32_t hops = 0;
  std::uint64_t pages_read = 0;
  std::uint64_t n_read = 0;
  std::uint64_t n_eff = 0;
  std::uint64_t n_rbu = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t full_dist_comps = 0;
  std::uint64_t pq_dist_comps = 0;
  std::uint64_t latency_ns = 0;
};

/// U_io = N_eff / (N_eff + N_rbu). Undefined when nothing was read.
double io_utilization(const SearchStats& stats);

/// Beam width at `iteration`: omega_min * 2^max(0, iteration - start),
/// saturating at omega_max, where start is the warmup hold or the earlier
/// approach-to-converge phase signal (`signal_iteration`, -1 when unseen).
std::uint32_t dynamic_width_schedule(std::uint32_t iteration, std::int64_t signal_iteration,
                                     const SearchConfig& cfg);

struct SearchResult {
  std::vector<RecordId> ids;
  std::vector<float> dists;
  SearchStats stats;
};

/// Disk-resident beam-search engine. Immutable and shareable after
/// construction; each search() owns private state.
class SearchEngine {
 public:
  struct Options {
    std::string index_path;            // required, identity layout
    std::string shuffled_index_path;   // optional
    std::string pq_codebook_path;      // optional pair
    std::string pq_codes_path;
    std::string memgraph_path;         // optional
    std::string graph_path;            // required when cache_budget > 0
    std::uint64_t cache_budget = 0;    // records
    DirectIo direct_io = DirectIo::on;
    unsigned io_threads = 8;
  };

  explicit SearchEngine(const Options& opts);

  SearchResult search(const std::byte* query_row, const SearchConfig& cfg) const;
  SearchResult search(const VectorDataset& queries, std::size_t qi,
                      const SearchConfig& cfg) const;

  const DiskIndexMeta& meta() const { return identity_->meta(); }
  Metric metric() const { return metric_; }
  bool has_pq() const { return codebook_.has_value(); }
  bool has_memgraph() const { return memgraph_.has_value(); }
  bool has_cache() const { return cache_.has_value(); }
  bool has_shuffled() const { return shuffled_ != nullptr; }
  const CacheSet* cache() const { return cache_ ? &*cache_ : nullptr; }
  const MemGraph* memgraph() const { return memgraph_ ? &*memgraph_ : nullptr; }
  IoStats io_stats() const;

  /// Engine-level metric override (datasets default to squared Euclidean).
  void set_metric(Metric m) { metric_ = m; }

 private:
  struct QueryCtx;
  const DiskIndexReader& reader_for(const SearchConfig& cfg) const;
  void check_config(const SearchConfig& cfg) const;
  void run_beam_pq(QueryCtx& ctx) const;
  void run_beam_fp(QueryCtx& ctx) const;
  void run_pipeline(QueryCtx& ctx) const;

  std::unique_ptr<DiskIndexReader> identity_;
  std::unique_ptr<DiskIndexReader> shuffled_;
  std::optional<PQCodebook> codebook_;
  std::optional<PQCodes> codes_;
  std::optional<MemGraph> memgraph_;
  std::optional<CacheSet> cache_;
  Metric metric_ = Metric::l2;
};

}  // namespace octoann
