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

#include <unordered_map>

#include "octoann/disk_layout.hpp"
#include "octoann/graph.hpp"
#include "octoann/types.hpp"

namespace octoann {

/// Static record cache populated in hop order from the search entry point.
/// Content is bit-equal to the on-disk records, so serving a hit never
/// changes search results, only I/O counts. Read-only after build.
struct CacheSet {
  std::uint64_t capacity = 0;
  std::unordered_map<RecordId, DecodedRecord> records;

  std::size_t size() const { return records.size(); }
  const DecodedRecord* lookup(RecordId id) const {
    auto it = records.find(id);
    return it == records.end() ? nullptr : &it->second;
  }
};

/// BFS from `entry` in hop order (ties within a hop by ascending id), caching
/// decoded records until `budget` records are held; the entry caches first.
CacheSet build_sssp_cache(const GraphIndex& g, const DiskIndexReader& disk, RecordId entry,
                          std::uint64_t budget);

}  // namespace octoann
