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

#include "octoann/sssp_cache.hpp"

#include <algorithm>

namespace octoann {

CacheSet build_sssp_cache(const GraphIndex& g, const DiskIndexReader& disk, RecordId entry,
                          std::uint64_t budget) {
  require(entry < g.n, "entry id out of range");
  require(g.n == disk.meta().n, "graph and disk index disagree on n");

  CacheSet cache;
  cache.capacity = budget;
  if (budget == 0) return cache;
  cache.records.reserve(std::min<std::uint64_t>(budget, g.n));

  std::vector<bool> seen(g.n, false);
  std::vector<RecordId> frontier{entry}, next;
  seen[entry] = true;
  while (!frontier.empty() && cache.size() < budget) {
    std::sort(frontier.begin(), frontier.end());
    for (RecordId u : frontier) {
      if (cache.size() >= budget) break;
      cache.records.emplace(u, disk.read_record(u));
    }
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
  return cache;
}

}  // namespace octoann
