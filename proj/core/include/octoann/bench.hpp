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

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "octoann/dataset.hpp"
#include "octoann/search.hpp"
#include "octoann/types.hpp"

namespace octoann {

/// One ablation arm: which optimizations sit on top of the PQ baseline.
struct ToggleSet {
  bool pq = true;
  bool cache = false;
  bool memgraph = false;
  bool shuffle = false;
  bool dynamic_width = false;
  bool pipeline = false;
  bool page_search = false;

  bool operator==(const ToggleSet&) const = default;
};

/// Named arms: baseline, the six single-factor arms, the combination arms
/// c1..c5, and `octopus` as an alias for c5.
const std::vector<std::pair<std::string, ToggleSet>>& config_registry();
const ToggleSet* find_config(const std::string& name);
void apply_toggles(SearchConfig& cfg, const ToggleSet& t);

/// Flat key-value configuration with [section] headers; keys are stored as
/// "section.key". CLI flags override file keys.
class BenchConfig {
 public:
  static BenchConfig from_file(const std::string& path);
  BenchConfig() = default;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<std::uint32_t> get_int_list(const std::string& key,
                                          const std::vector<std::uint32_t>& fallback) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

/// Cache budget strings accept an absolute record count ("1000") or a
/// percentage of n ("0.1%").
std::uint64_t parse_cache_budget(const std::string& text, std::uint64_t n);

// ---- runner ---------------------------------------------------------------

struct QueryRecord {
  std::string config;
  std::uint32_t L = 0;
  std::uint32_t rep = 0;
  std::uint32_t qid = 0;
  std::uint64_t lat_ns = 0;
  std::uint32_t hops = 0;
  std::uint64_t pages = 0;
  std::uint64_t nread = 0;
  std::uint64_t neff = 0;
  std::uint64_t nrbu = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t fp_dists = 0;
  std::uint64_t pq_dists = 0;
  std::vector<RecordId> ids;
};

struct RepRecord {
  std::string config;
  std::uint32_t L = 0;
  std::uint32_t rep = 0;
  std::uint32_t queries = 0;
  std::uint32_t threads = 0;
  std::uint64_t wall_ns = 0;
};

struct RunLog {
  std::vector<QueryRecord> queries;
  std::vector<RepRecord> reps;

  void append(const RunLog& other);
};

/// Closed-loop run of one named configuration over an L sweep: `threads`
/// workers each issue the next query on completion; per-query rows are
/// ordered by query index regardless of scheduling.
RunLog run_config_sweep(const SearchEngine& engine, const VectorDataset& queries,
                        const std::string& name, const SearchConfig& base,
                        const std::vector<std::uint32_t>& L_sweep, std::uint32_t reps,
                        std::uint32_t threads);

/// JSON-lines persistence: one object per query plus one per rep summary.
void write_log(const RunLog& log, std::ostream& out);
RunLog load_log(const std::string& path);

/// One report row per (config, L): means over every query of every rep,
/// stddev across rep means where reps > 1.
struct RunRow {
  std::string config;
  std::uint32_t L = 0;
  std::uint32_t reps = 0;
  std::uint32_t queries = 0;
  std::uint32_t threads = 0;
  double recall = 0, recall_sd = 0;
  double mean_lat_us = 0, lat_sd_us = 0, p50_us = 0, p95_us = 0, p99_us = 0;
  double qps = 0, qps_sd = 0;
  double mean_pages = 0, pages_sd = 0;
  double mean_hops = 0;
  double mean_nread = 0, mean_neff = 0, mean_nrbu = 0;
  double u_io = 0;  // sum(neff) / sum(nread)
  double cache_hit_rate = 0;
};

std::vector<RunRow> aggregate_log(const RunLog& log, const GroundTruth* gt, std::size_t k);

/// Build-phase cost accounting appended to a CSV (BT, Disk, Mem columns).
void append_build_row(const std::string& csv_path, const std::string& phase, double seconds,
                      std::uint64_t disk_bytes, std::uint64_t mem_bytes,
                      const std::string& note);

}  // namespace octoann
