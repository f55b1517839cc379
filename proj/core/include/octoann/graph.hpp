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

#include <span>
#include <vector>

#include "octoann/dataset.hpp"
#include "octoann/types.hpp"

namespace octoann {

struct VamanaParams {
  std::uint32_t R = 64;
  std::uint32_t L_build = 125;
  float alpha = 1.2f;
  std::uint64_t seed = 0;
};

/// Bounded out-degree proximity graph with a medoid entry point.
struct GraphIndex {
  std::uint32_t n = 0;
  std::uint32_t r_max = 0;
  RecordId medoid = 0;
  std::vector<std::vector<RecordId>> adj;
  VamanaParams params;      // in-memory metadata, not persisted
  bool degree_clamped = false;  // set when R >= n forced a clamp to n - 1
};

/// Result of one best-first traversal. `visited` lists expanded vertices in
/// expansion order; `candidates` is the final L-bounded list sorted by
/// (distance, id); `hops` equals the number of expansion steps.
struct SearchTrace {
  std::vector<RecordId> visited;
  std::vector<std::pair<float, RecordId>> candidates;
  std::uint32_t hops = 0;
};

/// Best-first expansion over full-precision distances. Terminates when the
/// L-bounded candidate list holds no unexpanded vertex; ties always break by
/// ascending id.
SearchTrace greedy_search(const GraphIndex& g, const VectorDataset& base,
                          const std::byte* query, std::span<const RecordId> entries,
                          std::uint32_t L);

/// Alpha-pruning over a candidate set: keep the closest remaining candidate
/// c, discard every c' with alpha * dist(c, c') <= dist(p, c'), stop at R.
/// Distances are squared, so alpha multiplies in the squared domain.
std::vector<RecordId> robust_prune(const VectorDataset& base, RecordId p,
                                   std::span<const RecordId> candidates, float alpha,
                                   std::uint32_t R);

/// Two-pass Vamana: random R-regular initialization, then per-vertex greedy
/// search from the medoid + robust prune + reverse-edge insertion, first
/// pass at alpha = 1, second at the requested alpha. Deterministic for a
/// fixed seed (insertion order is ascending id).
GraphIndex build_vamana(const VectorDataset& base, const VamanaParams& params);

double mean_out_degree(const GraphIndex& g);

RecordId find_medoid(const VectorDataset& base);

/// Vertices reachable from `start` (BFS); used by connectivity checks and
/// the hop-ordered cache population.
std::vector<RecordId> bfs_order(const GraphIndex& g, RecordId start);

void save_graph(const GraphIndex& g, const std::string& path);
GraphIndex load_graph(const std::string& path);
void save_graph(const GraphIndex& g, std::ostream& out);
GraphIndex load_graph(std::istream& in);

}  // namespace octoann
