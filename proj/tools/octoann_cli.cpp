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

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "octoann/bench.hpp"
#include "octoann/report.hpp"
#include "octoann/search.hpp"

namespace fs = std::filesystem;
using namespace octoann;

namespace {

struct Paths {
  std::string out;
  std::string graph() const { return out + "/graph.ovg"; }
  std::string index() const { return out + "/index.odi"; }
  std::string shuffled() const { return out + "/index.shuffled.odi"; }
  std::string codebook() const { return out + "/pq.codebook.opq"; }
  std::string codes() const { return out + "/pq.codes.opc"; }
  std::string memgraph() const { return out + "/navgraph.omg"; }
  std::string gt_ids() const { return out + "/gt.ids.ivecs"; }
  std::string gt_dists() const { return out + "/gt.dists.fvecs"; }
  std::string logs() const { return out + "/logs"; }
  std::string report() const { return out + "/report"; }
  std::string build_report() const { return out + "/build_report.csv"; }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t file_bytes(const std::string& path) {
  std::error_code ec;
  auto size = fs::file_size(path, ec);
  return ec ? 0 : static_cast<std::uint64_t>(size);
}

VectorDataset load_data(const BenchConfig& cfg) {
  std::string path = cfg.get("data.path");
  require(!path.empty(), "--data is required");
  VectorDataset ds = load_vectors(path, format_from_name(cfg.get("data.format", "fvecs")));
  ds.metric = metric_from_name(cfg.get("data.metric", "euclidean-squared"));
  return ds;
}

VectorDataset load_queries(const BenchConfig& cfg) {
  std::string path = cfg.get("data.queries");
  require(!path.empty(), "--queries is required");
  VectorDataset ds = load_vectors(
      path, format_from_name(cfg.get("data.queries_format", cfg.get("data.format", "fvecs"))));
  ds.metric = metric_from_name(cfg.get("data.metric", "euclidean-squared"));
  return ds;
}

std::uint64_t adjacency_bytes(const GraphIndex& g) {
  std::uint64_t total = 0;
  for (const auto& a : g.adj) total += a.size() * sizeof(RecordId) + sizeof(a);
  return total;
}

DirectIo direct_io_mode(const BenchConfig& cfg) {
  std::string v = cfg.get("io.direct", "on");
  if (v == "on") return DirectIo::on;
  if (v == "off") return DirectIo::off;
  raise("--direct-io must be 'on' or 'off'");
}

SearchEngine::Options engine_options(const BenchConfig& cfg, const Paths& paths,
                                     const ToggleSet& toggles) {
  SearchEngine::Options opts;
  opts.index_path = paths.index();
  if (toggles.shuffle) opts.shuffled_index_path = paths.shuffled();
  if (toggles.pq) {
    opts.pq_codebook_path = paths.codebook();
    opts.pq_codes_path = paths.codes();
  }
  if (toggles.memgraph) opts.memgraph_path = paths.memgraph();
  if (toggles.cache) {
    DiskIndexMeta meta = read_disk_index_meta(paths.index());
    opts.cache_budget = parse_cache_budget(cfg.get("cache.budget", "0.1%"), meta.n);
    opts.graph_path = paths.graph();
  }
  opts.direct_io = direct_io_mode(cfg);
  opts.io_threads = static_cast<unsigned>(cfg.get_int("io.threads", 8));
  return opts;
}

SearchConfig base_search_config(const BenchConfig& cfg) {
  SearchConfig sc;
  sc.k = static_cast<std::uint32_t>(cfg.get_int("search.k", 10));
  sc.beam = static_cast<std::uint32_t>(cfg.get_int("search.beam", 8));
  sc.dw.omega_min = static_cast<std::uint32_t>(cfg.get_int("search.dw_min", sc.beam));
  sc.dw.omega_max = static_cast<std::uint32_t>(cfg.get_int("search.dw_max", 32));
  sc.dw.warmup = static_cast<std::uint32_t>(cfg.get_int("search.dw_warmup", 4));
  sc.dw.patience = static_cast<std::uint32_t>(cfg.get_int("search.dw_patience", 2));
  sc.pipeline_depth = static_cast<std::uint32_t>(cfg.get_int("search.pipeline_depth", 8));
  sc.mem_L = static_cast<std::uint32_t>(cfg.get_int("memgraph.query_L", 10));
  sc.mem_fanout = static_cast<std::uint32_t>(cfg.get_int("memgraph.fanout", 1));
  return sc;
}

int cmd_build(const BenchConfig& cfg, const Paths& paths) {
  VectorDataset base = load_data(cfg);
  VamanaParams params;
  params.R = static_cast<std::uint32_t>(cfg.get_int("build.R", 64));
  params.L_build = static_cast<std::uint32_t>(cfg.get_int("build.L", 125));
  params.alpha = static_cast<float>(cfg.get_double("build.alpha", 1.2));
  params.seed = static_cast<std::uint64_t>(cfg.get_int("build.seed", 0));
  std::uint32_t page_size = static_cast<std::uint32_t>(cfg.get_int("layout.page_size", 4096));

  auto t0 = std::chrono::steady_clock::now();
  GraphIndex g = build_vamana(base, params);
  save_graph(g, paths.graph());
  pack_disk_index(base, g, page_size, nullptr, paths.index());
  double secs = seconds_since(t0);

  std::uint64_t disk = file_bytes(paths.index()) + file_bytes(paths.graph());
  append_build_row(paths.build_report(), "build", secs, disk, adjacency_bytes(g),
                   "R=" + std::to_string(g.r_max) + " L=" + std::to_string(params.L_build));
  std::cout << "build: n=" << g.n << " R_bar=" << mean_out_degree(g) << " medoid=" << g.medoid
            << " time_s=" << secs << "\n";
  return 0;
}

int cmd_pq(const BenchConfig& cfg, const Paths& paths) {
  VectorDataset base = load_data(cfg);
  std::uint32_t m = static_cast<std::uint32_t>(cfg.get_int("pq.m", 16));
  std::uint32_t k_c = static_cast<std::uint32_t>(cfg.get_int("pq.k", 256));
  std::uint32_t iters = static_cast<std::uint32_t>(cfg.get_int("pq.iters", 12));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("pq.seed", cfg.get_int("build.seed", 0)));

  auto t0 = std::chrono::steady_clock::now();
  // training sample: min(n, 256 * k_c) rows drawn uniformly
  std::uint64_t want = std::min<std::uint64_t>(base.n, 256ull * k_c);
  VectorDataset sample = base;
  if (want < base.n) {
    std::vector<std::uint32_t> rows(base.n);
    for (std::uint32_t i = 0; i < base.n; ++i) rows[i] = i;
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 77);
    for (std::uint64_t i = 0; i < want; ++i)
      std::swap(rows[i], rows[i + rng() % (base.n - i)]);
    sample = make_dataset(want, base.d, base.elem, base.metric);
    for (std::uint64_t i = 0; i < want; ++i)
      std::memcpy(sample.row_mut(i), base.row(rows[i]), base.row_bytes());
  }
  PQCodebook cb = train_codebook(sample, m, k_c, iters, seed);
  PQCodes codes = encode_dataset(cb, base);
  save_codebook(cb, paths.codebook());
  save_codes(codes, paths.codes());
  double secs = seconds_since(t0);

  append_build_row(paths.build_report(), "pq", secs,
                   file_bytes(paths.codebook()) + file_bytes(paths.codes()),
                   codes.bytes.size() + cb.centroids.size() * 4,
                   "m=" + std::to_string(m) + " k_c=" + std::to_string(k_c));
  std::cout << "pq: m=" << m << " k_c=" << k_c << " sample=" << sample.n
            << " reconstruction_mse=" << reconstruction_error(cb, sample) << " time_s=" << secs
            << "\n";
  return 0;
}

int cmd_shuffle(const BenchConfig& cfg, const Paths& paths) {
  require(fs::exists(paths.graph()), "shuffle needs the graph file; run build first");
  require(fs::exists(paths.index()), "shuffle needs the packed index; run build first");
  VectorDataset base = load_data(cfg);
  GraphIndex g = load_graph(paths.graph());
  DiskIndexMeta meta = read_disk_index_meta(paths.index());
  std::uint32_t passes = static_cast<std::uint32_t>(cfg.get_int("layout.passes", 2));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("layout.seed", 0));

  auto t0 = std::chrono::steady_clock::now();
  ShuffleResult sr = shuffle_pages(g, meta.page_size, meta.record_size(), passes, seed);
  pack_disk_index(base, g, meta.page_size, &sr.layout, paths.shuffled());
  double secs = seconds_since(t0);

  PageLayout identity = PageLayout::identity(g.n, meta.page_size, meta.record_size());
  double or_identity = overlap_ratio_graph(identity, g);
  double or_shuffled = overlap_ratio_graph(sr.layout, g);
  append_build_row(paths.build_report(), "shuffle", secs, file_bytes(paths.shuffled()),
                   sr.peak_mem_bytes, sr.degenerate ? "degenerate n_p=1" : "");
  std::cout << "shuffle: n_p=" << sr.layout.n_p << " OR_identity=" << or_identity
            << " OR_shuffled=" << or_shuffled << " colocated=" << sr.colocated_shuffled << "/"
            << sr.colocated_identity << " time_s=" << secs
            << (sr.degenerate ? "  (warning: identity kept)" : "") << "\n";
  return 0;
}

int cmd_memgraph(const BenchConfig& cfg, const Paths& paths) {
  VectorDataset base = load_data(cfg);
  double ratio = cfg.get_double("memgraph.ratio", 0.001);
  std::uint32_t R = static_cast<std::uint32_t>(cfg.get_int("memgraph.R", 48));
  std::uint32_t L = static_cast<std::uint32_t>(cfg.get_int("memgraph.L", 128));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("memgraph.seed", cfg.get_int("build.seed", 0)));

  auto t0 = std::chrono::steady_clock::now();
  MemGraph mg = build_memgraph(base, ratio, R, L, seed);
  save_memgraph(mg, paths.memgraph());
  double secs = seconds_since(t0);

  append_build_row(paths.build_report(), "memgraph", secs, file_bytes(paths.memgraph()),
                   mg.memory_bytes(), "ratio=" + std::to_string(ratio));
  std::cout << "memgraph: samples=" << mg.sample_count() << " mem_bytes=" << mg.memory_bytes()
            << " time_s=" << secs << "\n";
  return 0;
}

int cmd_cache(const BenchConfig& cfg, const Paths& paths) {
  require(fs::exists(paths.graph()) && fs::exists(paths.index()),
          "cache needs the graph and index files; run build first");
  GraphIndex g = load_graph(paths.graph());
  DiskIndexReader reader(paths.index(), direct_io_mode(cfg));
  std::uint64_t budget = parse_cache_budget(cfg.get("cache.budget", "0.1%"), g.n);

  auto t0 = std::chrono::steady_clock::now();
  CacheSet cache = build_sssp_cache(g, reader, g.medoid, budget);
  double secs = seconds_since(t0);

  std::uint64_t bytes = 0;
  for (const auto& [id, rec] : cache.records)
    bytes += rec.vec.size() + rec.neighbors.size() * 4 + 16;
  append_build_row(paths.build_report(), "cache", secs, 0, bytes,
                   "records=" + std::to_string(cache.size()));
  std::cout << "cache: records=" << cache.size() << " mem_bytes=" << bytes << " time_s=" << secs
            << "  (not persisted; rebuilt at engine start)\n";
  return 0;
}

int cmd_gt(const BenchConfig& cfg, const Paths& paths) {
  VectorDataset base = load_data(cfg);
  VectorDataset queries = load_queries(cfg);
  std::size_t k = static_cast<std::size_t>(cfg.get_int("gt.k", 100));
  unsigned threads = static_cast<unsigned>(cfg.get_int("search.threads", 0));
  auto t0 = std::chrono::steady_clock::now();
  GroundTruth gt = brute_force_knn(base, queries, k, threads);
  save_ground_truth(gt, paths.gt_ids(), paths.gt_dists());
  std::cout << "gt: queries=" << queries.n << " k=" << k << " time_s=" << seconds_since(t0)
            << "\n";
  return 0;
}

int run_configs(const BenchConfig& cfg, const Paths& paths,
                const std::vector<std::string>& names) {
  VectorDataset queries = load_queries(cfg);
  std::vector<std::uint32_t> L_sweep = cfg.get_int_list("search.L", {10, 20, 50, 100});
  std::uint32_t reps = static_cast<std::uint32_t>(cfg.get_int("search.reps", 1));
  std::uint32_t threads = static_cast<std::uint32_t>(cfg.get_int("search.threads", 1));

  GroundTruth gt;
  const GroundTruth* gt_ptr = nullptr;
  if (fs::exists(paths.gt_ids()) && fs::exists(paths.gt_dists())) {
    gt = load_ground_truth(paths.gt_ids(), paths.gt_dists());
    gt_ptr = &gt;
  }

  fs::create_directories(paths.logs());
  std::vector<RunRow> all_rows;
  for (const std::string& name : names) {
    const ToggleSet* toggles = find_config(name);
    require(toggles != nullptr, "unknown configuration name: " + name);
    SearchEngine engine(engine_options(cfg, paths, *toggles));
    if (cfg.has("data.metric")) engine.set_metric(metric_from_name(cfg.get("data.metric")));
    SearchConfig base = base_search_config(cfg);
    apply_toggles(base, *toggles);

    RunLog log = run_config_sweep(engine, queries, name, base, L_sweep, reps, threads);
    std::ofstream log_out(paths.logs() + "/" + name + ".jsonl", std::ios::trunc);
    write_log(log, log_out);

    auto rows = aggregate_log(log, gt_ptr, base.k);
    for (const auto& r : rows) {
      std::cout << name << " L=" << r.L << " recall@" << base.k << "=" << r.recall
                << " qps=" << r.qps << " mean_lat_us=" << r.mean_lat_us
                << " pages/q=" << r.mean_pages << " hops=" << r.mean_hops << " u_io=" << r.u_io
                << "\n";
      all_rows.push_back(r);
    }
  }
  write_run_csv(all_rows, paths.out + "/search_results.csv");
  return 0;
}

int cmd_search(const BenchConfig& cfg, const Paths& paths) {
  std::string name = cfg.get("search.configs", "baseline");
  require(name.find(',') == std::string::npos, "search runs one configuration; use sweep");
  return run_configs(cfg, paths, {name});
}

int cmd_sweep(const BenchConfig& cfg, const Paths& paths) {
  std::string list = cfg.get("search.configs", "");
  std::vector<std::string> names;
  if (list.empty() || list == "all") {
    for (const auto& [n, t] : config_registry())
      if (n != "octopus") names.push_back(n);  // alias of c5, skip the duplicate run
  } else {
    std::stringstream ss(list);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) names.push_back(part);
  }
  return run_configs(cfg, paths, names);
}

int cmd_report(const BenchConfig& cfg, const Paths& paths,
               std::vector<std::string> log_paths) {
  if (log_paths.empty() && fs::is_directory(paths.logs()))
    for (const auto& e : fs::directory_iterator(paths.logs()))
      if (e.path().extension() == ".jsonl") log_paths.push_back(e.path().string());
  require(!log_paths.empty(), "report needs at least one run log");
  std::sort(log_paths.begin(), log_paths.end());

  RunLog merged;
  std::optional<std::uint32_t> expect_queries;
  for (const std::string& p : log_paths) {
    RunLog log = load_log(p);
    for (const auto& r : log.reps) {
      if (!expect_queries) expect_queries = r.queries;
      require(*expect_queries == r.queries,
              "inconsistent query counts across logs (" + p + ")");
    }
    merged.append(log);
  }
  for (const auto& q : merged.queries)
    require(q.nread == q.neff + q.nrbu, "log accounting violation: nread != neff + nrbu");

  GroundTruth gt;
  const GroundTruth* gt_ptr = nullptr;
  if (fs::exists(paths.gt_ids()) && fs::exists(paths.gt_dists())) {
    gt = load_ground_truth(paths.gt_ids(), paths.gt_dists());
    gt_ptr = &gt;
  }
  std::size_t k = static_cast<std::size_t>(cfg.get_int("search.k", 10));
  auto rows = aggregate_log(merged, gt_ptr, k);
  std::uint32_t breakdown_L =
      static_cast<std::uint32_t>(cfg.get_int("report.breakdown_L", 10));
  write_report_bundle(rows, paths.report(), breakdown_L);
  std::cout << "report: " << rows.size() << " rows -> " << paths.report() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"octoann: disk-resident graph ANN engine and benchmark harness"};
  app.require_subcommand(1);

  std::string config_file, out_dir = "octoann_out";
  std::map<std::string, std::string> overrides;

  auto add_override = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                          const std::string& help) {
    auto holder = std::make_shared<std::string>();
    sub->add_option_function<std::string>(
           flag, [&overrides, key, holder](const std::string& v) { overrides[key] = v; }, help)
        ->expected(1);
  };

  std::vector<std::string> report_logs;
  std::vector<CLI::App*> subs;
  for (const char* name : {"build", "pq", "shuffle", "memgraph", "cache", "gt", "search",
                           "sweep", "report"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("octoann ") + name);
    sub->add_option("--config", config_file, "key-value config file ([section] headers)");
    sub->add_option("--out", out_dir, "artifact/output directory");
    add_override(sub, "--data", "data.path", "base vector file");
    add_override(sub, "--format", "data.format", "fvecs|bvecs|ivecs|raw");
    add_override(sub, "--queries", "data.queries", "query vector file");
    add_override(sub, "--queries-format", "data.queries_format", "query file format");
    add_override(sub, "--metric", "data.metric", "euclidean-squared|cosine");
    add_override(sub, "--R", "build.R", "graph out-degree bound");
    add_override(sub, "--L-build", "build.L", "build candidate list size");
    add_override(sub, "--alpha", "build.alpha", "pruning alpha");
    add_override(sub, "--page-size", "layout.page_size", "page size in bytes");
    add_override(sub, "--passes", "layout.passes", "shuffle hill-climb passes");
    add_override(sub, "--pq-m", "pq.m", "PQ subspace count");
    add_override(sub, "--pq-k", "pq.k", "PQ centroids per subspace");
    add_override(sub, "--mem-ratio", "memgraph.ratio", "memgraph sampling ratio");
    add_override(sub, "--mem-R", "memgraph.R", "memgraph out-degree bound");
    add_override(sub, "--mem-L", "memgraph.L", "memgraph build list size");
    add_override(sub, "--cache-budget", "cache.budget", "records or percentage, e.g. 0.1%");
    add_override(sub, "--k", "search.k", "result count per query");
    add_override(sub, "--gt-k", "gt.k", "ground truth depth");
    add_override(sub, "--L", "search.L", "search list sweep, comma separated");
    add_override(sub, "--beam", "search.beam", "beam width");
    add_override(sub, "--config-name", "search.configs", "named configuration(s)");
    add_override(sub, "--threads", "search.threads", "query worker threads");
    add_override(sub, "--reps", "search.reps", "repetitions per sweep point");
    add_override(sub, "--seed", "build.seed", "build/sampling seed");
    add_override(sub, "--direct-io", "io.direct", "on|off");
    add_override(sub, "--breakdown-L", "report.breakdown_L", "L for the breakdown table");
    if (std::string(name) == "report")
      sub->add_option("logs", report_logs, "run log files (default: <out>/logs/*.jsonl)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    BenchConfig cfg;
    if (!config_file.empty()) cfg = BenchConfig::from_file(config_file);
    for (const auto& [k, v] : overrides) cfg.set(k, v);  // flags override file keys
    if (cfg.has("out.dir") && out_dir == "octoann_out") out_dir = cfg.get("out.dir");

    Paths paths{out_dir};
    fs::create_directories(paths.out);

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "build") return cmd_build(cfg, paths);
    if (sub == "pq") return cmd_pq(cfg, paths);
    if (sub == "shuffle") return cmd_shuffle(cfg, paths);
    if (sub == "memgraph") return cmd_memgraph(cfg, paths);
    if (sub == "cache") return cmd_cache(cfg, paths);
    if (sub == "gt") return cmd_gt(cfg, paths);
    if (sub == "search") return cmd_search(cfg, paths);
    if (sub == "sweep") return cmd_sweep(cfg, paths);
    if (sub == "report") return cmd_report(cfg, paths, report_logs);
    std::cerr << "unknown subcommand\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "octoann: " << e.what() << "\n";
    return 1;
  }
}
