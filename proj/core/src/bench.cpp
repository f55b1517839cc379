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

#include "octoann/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace octoann {

using nlohmann::json;

const std::vector<std::pair<std::string, ToggleSet>>& config_registry() {
  static const std::vector<std::pair<std::string, ToggleSet>> registry = [] {
    std::vector<std::pair<std::string, ToggleSet>> r;
    ToggleSet t;
    r.emplace_back("baseline", t);
    t = {};
    t.cache = true;
    r.emplace_back("cache", t);
    t = {};
    t.memgraph = true;
    r.emplace_back("memgraph", t);
    t = {};
    t.shuffle = true;
    r.emplace_back("pageshuffle", t);
    t = {};
    t.pipeline = true;
    r.emplace_back("pipeline", t);
    t = {};
    t.dynamic_width = true;
    r.emplace_back("dynamicwidth", t);
    t = {};
    t.page_search = true;
    r.emplace_back("pagesearch", t);
    t = {};
    t.shuffle = t.page_search = true;
    r.emplace_back("c1", t);
    t = {};
    t.pipeline = t.dynamic_width = true;
    r.emplace_back("c2", t);
    t = {};
    t.memgraph = t.shuffle = t.page_search = true;
    r.emplace_back("c3", t);
    t = {};
    t.memgraph = t.pipeline = t.dynamic_width = true;
    r.emplace_back("c4", t);
    t = {};
    t.memgraph = t.shuffle = t.page_search = t.dynamic_width = true;
    r.emplace_back("c5", t);
    r.emplace_back("octopus", t);  // alias for c5
    return r;
  }();
  return registry;
}

const ToggleSet* find_config(const std::string& name) {
  for (const auto& [n, t] : config_registry())
    if (n == name) return &t;
  return nullptr;
}

void apply_toggles(SearchConfig& cfg, const ToggleSet& t) {
  cfg.use_pq = t.pq;
  cfg.use_cache = t.cache;
  cfg.use_memgraph = t.memgraph;
  cfg.use_shuffled_layout = t.shuffle;
  cfg.dynamic_width = t.dynamic_width;
  cfg.pipeline = t.pipeline;
  cfg.page_search = t.page_search;
}

// ---- config file ------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

BenchConfig BenchConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  BenchConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    require(eq != std::string::npos,
            "bad config line " + std::to_string(lineno) + " in " + path);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    require(!key.empty(), "empty key at line " + std::to_string(lineno) + " in " + path);
    cfg.set(section.empty() ? key : section + "." + key, value);
  }
  return cfg;
}

std::string BenchConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::int64_t BenchConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : std::stoll(it->second);
}

double BenchConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : std::stod(it->second);
}

std::vector<std::uint32_t> BenchConfig::get_int_list(
    const std::string& key, const std::vector<std::uint32_t>& fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<std::uint32_t> out;
  std::stringstream ss(it->second);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(static_cast<std::uint32_t>(std::stoul(part)));
  }
  require(!out.empty(), "empty list for key " + key);
  return out;
}

std::uint64_t parse_cache_budget(const std::string& text, std::uint64_t n) {
  std::string t = trim(text);
  if (t.empty()) return 0;
  if (t.back() == '%') {
    double pct = std::stod(t.substr(0, t.size() - 1));
    require(pct >= 0.0, "negative cache budget");
    return static_cast<std::uint64_t>(pct / 100.0 * static_cast<double>(n));
  }
  return static_cast<std::uint64_t>(std::stoull(t));
}

// ---- runner -----------------------------------------------------------------

void RunLog::append(const RunLog& other) {
  queries.insert(queries.end(), other.queries.begin(), other.queries.end());
  reps.insert(reps.end(), other.reps.begin(), other.reps.end());
}

RunLog run_config_sweep(const SearchEngine& engine, const VectorDataset& queries,
                        const std::string& name, const SearchConfig& base,
                        const std::vector<std::uint32_t>& L_sweep, std::uint32_t reps,
                        std::uint32_t threads) {
  require(reps >= 1, "repetitions must be >= 1");
  require(threads >= 1, "thread count must be >= 1");
  require(queries.n >= 1, "no queries");

  RunLog log;
  for (std::uint32_t L : L_sweep) {
    SearchConfig cfg = base;
    cfg.L = L;
    cfg.k = std::min(cfg.k, L);
    cfg.validate();
    for (std::uint32_t rep = 0; rep < reps; ++rep) {
      std::vector<QueryRecord> rows(queries.n);
      std::atomic<std::size_t> next{0};
      auto t0 = std::chrono::steady_clock::now();
      auto worker = [&]() {
        for (;;) {
          std::size_t qi = next.fetch_add(1, std::memory_order_relaxed);
          if (qi >= queries.n) return;
          SearchResult res = engine.search(queries, qi, cfg);
          QueryRecord& row = rows[qi];
          row.config = name;
          row.L = L;
          row.rep = rep;
          row.qid = static_cast<std::uint32_t>(qi);
          row.lat_ns = res.stats.latency_ns;
          row.hops = res.stats.hops;
          row.pages = res.stats.pages_read;
          row.nread = res.stats.n_read;
          row.neff = res.stats.n_eff;
          row.nrbu = res.stats.n_rbu;
          row.cache_hits = res.stats.cache_hits;
          row.fp_dists = res.stats.full_dist_comps;
          row.pq_dists = res.stats.pq_dist_comps;
          row.ids = std::move(res.ids);
        }
      };
      if (threads == 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (std::uint32_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
      }
      auto t1 = std::chrono::steady_clock::now();

      RepRecord rr;
      rr.config = name;
      rr.L = L;
      rr.rep = rep;
      rr.queries = static_cast<std::uint32_t>(queries.n);
      rr.threads = threads;
      rr.wall_ns = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
      log.reps.push_back(rr);
      for (auto& row : rows) log.queries.push_back(std::move(row));
    }
  }
  return log;
}

void write_log(const RunLog& log, std::ostream& out) {
  for (const auto& q : log.queries) {
    json j;
    j["type"] = "query";
    j["config"] = q.config;
    j["L"] = q.L;
    j["rep"] = q.rep;
    j["qid"] = q.qid;
    j["lat_ns"] = q.lat_ns;
    j["hops"] = q.hops;
    j["pages"] = q.pages;
    j["nread"] = q.nread;
    j["neff"] = q.neff;
    j["nrbu"] = q.nrbu;
    j["cache_hits"] = q.cache_hits;
    j["fp_dists"] = q.fp_dists;
    j["pq_dists"] = q.pq_dists;
    j["ids"] = q.ids;
    out << j.dump() << "\n";
  }
  for (const auto& r : log.reps) {
    json j;
    j["type"] = "rep";
    j["config"] = r.config;
    j["L"] = r.L;
    j["rep"] = r.rep;
    j["queries"] = r.queries;
    j["threads"] = r.threads;
    j["wall_ns"] = r.wall_ns;
    out << j.dump() << "\n";
  }
}

RunLog load_log(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open log file: " + path);
  RunLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    if (j.at("type") == "query") {
      QueryRecord q;
      q.config = j.at("config");
      q.L = j.at("L");
      q.rep = j.at("rep");
      q.qid = j.at("qid");
      q.lat_ns = j.at("lat_ns");
      q.hops = j.at("hops");
      q.pages = j.at("pages");
      q.nread = j.at("nread");
      q.neff = j.at("neff");
      q.nrbu = j.at("nrbu");
      q.cache_hits = j.at("cache_hits");
      q.fp_dists = j.at("fp_dists");
      q.pq_dists = j.at("pq_dists");
      q.ids = j.at("ids").get<std::vector<RecordId>>();
      log.queries.push_back(std::move(q));
    } else if (j.at("type") == "rep") {
      RepRecord r;
      r.config = j.at("config");
      r.L = j.at("L");
      r.rep = j.at("rep");
      r.queries = j.at("queries");
      r.threads = j.at("threads");
      r.wall_ns = j.at("wall_ns");
      log.reps.push_back(r);
    } else {
      raise("unknown log record type in " + path);
    }
  }
  return log;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double idx = p / 100.0 * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(idx);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

std::vector<RunRow> aggregate_log(const RunLog& log, const GroundTruth* gt, std::size_t k) {
  // group by (config, L)
  std::map<std::pair<std::string, std::uint32_t>, std::vector<const QueryRecord*>> groups;
  for (const auto& q : log.queries) groups[{q.config, q.L}].push_back(&q);

  std::vector<RunRow> rows;
  for (const auto& [key, qs] : groups) {
    RunRow row;
    row.config = key.first;
    row.L = key.second;

    std::vector<double> lat_us;
    lat_us.reserve(qs.size());
    double pages_total = 0, hops_total = 0, nread_total = 0, neff_total = 0, nrbu_total = 0,
           hits_total = 0;
    std::uint32_t max_rep = 0, max_qid = 0;
    for (const QueryRecord* q : qs) {
      lat_us.push_back(static_cast<double>(q->lat_ns) / 1000.0);
      pages_total += static_cast<double>(q->pages);
      hops_total += static_cast<double>(q->hops);
      nread_total += static_cast<double>(q->nread);
      neff_total += static_cast<double>(q->neff);
      nrbu_total += static_cast<double>(q->nrbu);
      hits_total += static_cast<double>(q->cache_hits);
      max_rep = std::max(max_rep, q->rep);
      max_qid = std::max(max_qid, q->qid);
    }
    row.reps = max_rep + 1;
    row.queries = max_qid + 1;
    const double n = static_cast<double>(qs.size());
    row.mean_lat_us = mean_of(lat_us);
    row.lat_sd_us = stddev_of(lat_us);
    row.p50_us = percentile(lat_us, 50);
    row.p95_us = percentile(lat_us, 95);
    row.p99_us = percentile(lat_us, 99);
    row.mean_pages = pages_total / n;
    row.mean_hops = hops_total / n;
    row.mean_nread = nread_total / n;
    row.mean_neff = neff_total / n;
    row.mean_nrbu = nrbu_total / n;
    row.u_io = nread_total > 0 ? neff_total / nread_total : 0.0;
    row.cache_hit_rate = nread_total > 0 ? hits_total / nread_total : 0.0;

    // per-rep recall, qps, pages spread
    std::vector<double> recalls, qps_list, rep_pages;
    for (std::uint32_t rep = 0; rep <= max_rep; ++rep) {
      std::vector<std::vector<RecordId>> ids(row.queries);
      double pages_rep = 0;
      std::size_t count = 0;
      for (const QueryRecord* q : qs) {
        if (q->rep != rep) continue;
        ids[q->qid] = q->ids;
        pages_rep += static_cast<double>(q->pages);
        ++count;
      }
      if (count == 0) continue;
      rep_pages.push_back(pages_rep / static_cast<double>(count));
      if (gt != nullptr) recalls.push_back(recall_at_k(ids, *gt, k));
    }
    for (const auto& r : log.reps) {
      if (r.config != key.first || r.L != key.second) continue;
      row.threads = r.threads;
      if (r.wall_ns > 0)
        qps_list.push_back(static_cast<double>(r.queries) /
                           (static_cast<double>(r.wall_ns) / 1e9));
    }
    row.recall = mean_of(recalls);
    row.recall_sd = stddev_of(recalls);
    row.qps = mean_of(qps_list);
    row.qps_sd = stddev_of(qps_list);
    row.pages_sd = stddev_of(rep_pages);
    rows.push_back(std::move(row));
  }
  return rows;
}

void append_build_row(const std::string& csv_path, const std::string& phase, double seconds,
                      std::uint64_t disk_bytes, std::uint64_t mem_bytes,
                      const std::string& note) {
  bool fresh = !std::filesystem::exists(csv_path);
  std::ofstream out(csv_path, std::ios::app);
  require(out.good(), "cannot open build report " + csv_path);
  if (fresh) out << "phase,build_time_s,disk_bytes,mem_bytes,note\n";
  out << phase << "," << seconds << "," << disk_bytes << "," << mem_bytes << "," << note << "\n";
}

}  // namespace octoann
