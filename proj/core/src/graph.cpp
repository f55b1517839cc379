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

#include "octoann/graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <unordered_set>

namespace octoann {

namespace {

constexpr char kGraphMagic[4] = {'O', 'V', 'G', '1'};

struct Cand {
  float dist;
  RecordId id;
  bool expanded;
};

inline bool cand_less(const Cand& a, const Cand& b) {
  return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
}

// Insert into an L-bounded list sorted by (dist, id). Returns false when the
// candidate fell off the end or is a duplicate.
bool bounded_insert(std::vector<Cand>& list, std::uint32_t L, float dist, RecordId id) {
  Cand c{dist, id, false};
  auto it = std::lower_bound(list.begin(), list.end(), c,
                             [](const Cand& a, const Cand& b) { return cand_less(a, b); });
  if (it != list.end() && it->id == id && it->dist == dist) return false;
  if (list.size() == L && it == list.end()) return false;
  list.insert(it, c);
  if (list.size() > L) list.pop_back();
  return true;
}

}  // namespace

SearchTrace greedy_search(const GraphIndex& g, const VectorDataset& base,
                          const std::byte* query, std::span<const RecordId> entries,
                          std::uint32_t L) {
  require(L >= 1, "L must be >= 1");
  require(!entries.empty(), "empty entry list");

  SearchTrace trace;
  std::vector<Cand> list;
  list.reserve(L + 1);
  std::unordered_set<RecordId> seen;
  seen.reserve(L * 4);

  for (RecordId e : entries) {
    require(e < g.n, "entry id out of range");
    if (!seen.insert(e).second) continue;
    bounded_insert(list, L, row_distance(base, e, query), e);
  }

  for (;;) {
    auto it = std::find_if(list.begin(), list.end(), [](const Cand& c) { return !c.expanded; });
    if (it == list.end()) break;
    it->expanded = true;
    RecordId u = it->id;
    trace.visited.push_back(u);
    ++trace.hops;
    for (RecordId v : g.adj[u]) {
      if (!seen.insert(v).second) continue;
      bounded_insert(list, L, row_distance(base, v, query), v);
    }
  }

  trace.candidates.reserve(list.size());
  for (const Cand& c : list) trace.candidates.emplace_back(c.dist, c.id);
  return trace;
}

namespace {

std::vector<RecordId> robust_prune_scored(const VectorDataset& base, RecordId p,
                                          std::vector<std::pair<float, RecordId>>& pool,
                                          float alpha, std::uint32_t R) {
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end(),
                         [](const auto& a, const auto& b) { return a.second == b.second; }),
             pool.end());

  std::vector<RecordId> kept;
  std::vector<bool> dead(pool.size(), false);
  for (std::size_t i = 0; i < pool.size() && kept.size() < R; ++i) {
    if (dead[i]) continue;
    RecordId c = pool[i].second;
    if (c == p) continue;
    kept.push_back(c);
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (dead[j]) continue;
      float d_cc = row_distance(base, c, base.row(pool[j].second));
      if (alpha * d_cc <= pool[j].first) dead[j] = true;
    }
  }
  return kept;
}

}  // namespace

std::vector<RecordId> robust_prune(const VectorDataset& base, RecordId p,
                                   std::span<const RecordId> candidates, float alpha,
                                   std::uint32_t R) {
  require(alpha >= 1.0f, "alpha must be >= 1");
  std::vector<std::pair<float, RecordId>> pool;
  pool.reserve(candidates.size());
  for (RecordId c : candidates) {
    if (c == p) continue;
    pool.emplace_back(row_distance(base, c, base.row(p)), c);
  }
  return robust_prune_scored(base, p, pool, alpha, R);
}

RecordId find_medoid(const VectorDataset& base) {
  std::vector<double> centroid(base.d, 0.0);
  for (std::size_t i = 0; i < base.n; ++i)
    for (std::size_t j = 0; j < base.d; ++j) centroid[j] += base.value(i, j);
  for (double& v : centroid) v /= static_cast<double>(base.n);

  double best = std::numeric_limits<double>::max();
  RecordId best_id = 0;
  for (std::size_t i = 0; i < base.n; ++i) {
    double dist = 0.0;
    for (std::size_t j = 0; j < base.d; ++j) {
      double diff = static_cast<double>(base.value(i, j)) - centroid[j];
      dist += diff * diff;
    }
    if (dist < best) {
      best = dist;
      best_id = static_cast<RecordId>(i);
    }
  }
  return best_id;
}

GraphIndex build_vamana(const VectorDataset& base, const VamanaParams& params) {
  require(base.n >= 2, "build needs at least 2 vectors");
  const std::uint32_t n = static_cast<std::uint32_t>(base.n);

  GraphIndex g;
  g.n = n;
  g.params = params;
  g.r_max = params.R;
  if (params.R >= n) {
    g.r_max = n - 1;
    g.degree_clamped = true;
    std::cerr << "[octoann] warning: R >= n, clamping out-degree bound to " << g.r_max << "\n";
  }
  const std::uint32_t R = g.r_max;
  const std::uint32_t L = std::max(params.L_build, R);

  g.medoid = find_medoid(base);

  // Random R-regular-ish start: R distinct neighbors per vertex.
  g.adj.assign(n, {});
  std::mt19937_64 rng(params.seed * 0x9e3779b97f4a7c15ull + 1);
  std::unordered_set<RecordId> picked;
  for (std::uint32_t i = 0; i < n; ++i) {
    picked.clear();
    while (picked.size() < R) {
      RecordId v = static_cast<RecordId>(rng() % n);
      if (v != i) picked.insert(v);
    }
    g.adj[i].assign(picked.begin(), picked.end());
    std::sort(g.adj[i].begin(), g.adj[i].end());
  }

  std::vector<std::pair<float, RecordId>> pool;
  const float alphas[2] = {1.0f, params.alpha};
  for (float alpha : alphas) {
    for (std::uint32_t i = 0; i < n; ++i) {
      RecordId entry = g.medoid;
      SearchTrace trace = greedy_search(g, base, base.row(i), std::span(&entry, 1), L);

      pool.clear();
      for (RecordId v : trace.visited)
        if (v != i) pool.emplace_back(row_distance(base, v, base.row(i)), v);
      for (RecordId v : g.adj[i])
        pool.emplace_back(row_distance(base, v, base.row(i)), v);

      g.adj[i] = robust_prune_scored(base, i, pool, alpha, R);

      for (RecordId v : g.adj[i]) {
        auto& back = g.adj[v];
        if (std::find(back.begin(), back.end(), i) != back.end()) continue;
        back.push_back(i);
        if (back.size() > R) {
          pool.clear();
          for (RecordId w : back) pool.emplace_back(row_distance(base, w, base.row(v)), w);
          g.adj[v] = robust_prune_scored(base, v, pool, alpha, R);
        }
      }
    }
  }
  return g;
}

double mean_out_degree(const GraphIndex& g) {
  std::size_t total = 0;
  for (const auto& a : g.adj) total += a.size();
  return static_cast<double>(total) / static_cast<double>(g.n);
}

std::vector<RecordId> bfs_order(const GraphIndex& g, RecordId start) {
  require(start < g.n, "start id out of range");
  std::vector<bool> seen(g.n, false);
  std::vector<RecordId> order, frontier{start}, next;
  seen[start] = true;
  while (!frontier.empty()) {
    // ties within one hop resolve by ascending id
    std::sort(frontier.begin(), frontier.end());
    for (RecordId u : frontier) order.push_back(u);
    next.clear();
    for (RecordId u : frontier) {
      for (RecordId v : g.adj[u]) {
        if (seen[v]) continue;
        seen[v] = true;
        next.push_back(v);
      }
    }
    frontier.swap(next);
  }
  return order;
}

void save_graph(const GraphIndex& g, std::ostream& out) {
  out.write(kGraphMagic, 4);
  out.write(reinterpret_cast<const char*>(&g.n), 4);
  out.write(reinterpret_cast<const char*>(&g.r_max), 4);
  out.write(reinterpret_cast<const char*>(&g.medoid), 4);
  for (std::uint32_t i = 0; i < g.n; ++i) {
    std::uint32_t count = static_cast<std::uint32_t>(g.adj[i].size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    out.write(reinterpret_cast<const char*>(g.adj[i].data()), 4LL * count);
  }
  require(out.good(), "short write while saving graph");
}

void save_graph(const GraphIndex& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create file: " + path);
  save_graph(g, out);
}

GraphIndex load_graph(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, kGraphMagic, 4) == 0, "bad graph magic");
  GraphIndex g;
  in.read(reinterpret_cast<char*>(&g.n), 4);
  in.read(reinterpret_cast<char*>(&g.r_max), 4);
  in.read(reinterpret_cast<char*>(&g.medoid), 4);
  require(in.good() && g.n >= 1 && g.medoid < g.n, "corrupt graph header");
  g.adj.resize(g.n);
  for (std::uint32_t i = 0; i < g.n; ++i) {
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    require(in.good() && count <= g.r_max, "corrupt adjacency list");
    g.adj[i].resize(count);
    in.read(reinterpret_cast<char*>(g.adj[i].data()), 4LL * count);
    require(in.good(), "truncated graph data");
  }
  return g;
}

GraphIndex load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  return load_graph(in);
}

}  // namespace octoann
