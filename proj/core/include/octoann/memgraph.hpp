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

#include "octoann/graph.hpp"
#include "octoann/types.hpp"

namespace octoann {

/// Memory-resident navigation graph over a uniform sample of the base
/// vectors. Queries traverse it first; the best hits become entry points
/// for the disk-resident search.
struct MemGraph {
  double ratio = 0.0;
  std::vector<RecordId> sample_ids;  // sorted, unique; sample index -> base id
  VectorDataset vectors;             // copy of the sampled rows
  GraphIndex graph;                  // over sample indices

  std::size_t sample_count() const { return sample_ids.size(); }
  std::uint64_t memory_bytes() const;
};

/// Uniform sample without replacement (fixed seed), then a Vamana build over
/// the sample. ceil(ratio * n) vertices are drawn.
MemGraph build_memgraph(const VectorDataset& base, double ratio, std::uint32_t R,
                        std::uint32_t L, std::uint64_t seed);

/// In-memory traversal; returns the top-`fanout` candidates mapped to base
/// ids, ordered by (distance, id).
std::vector<RecordId> select_entries(const MemGraph& mg, const std::byte* query,
                                     std::uint32_t L_mem, std::uint32_t fanout);

void save_memgraph(const MemGraph& mg, const std::string& path);
MemGraph load_memgraph(const std::string& path);

}  // namespace octoann
