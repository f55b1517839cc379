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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "octoann/dataset.hpp"
#include "octoann/graph.hpp"

namespace octotest {

using namespace octoann;

// Gaussian mixture: `clusters` centers in [0, 10)^d, points jittered around
// them with the given spread.
inline VectorDataset make_blobs(std::size_t n, std::size_t d, std::size_t clusters,
                                std::uint64_t seed, float spread = 0.6f) {
  VectorDataset ds = make_dataset(n, d, ElemKind::f32);
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto gauss = [&] {
    double u1 = std::max(unit(), 1e-12), u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  std::vector<float> centers(clusters * d);
  for (auto& c : centers) c = static_cast<float>(unit() * 10.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* c = centers.data() + (rng() % clusters) * d;
    float* row = reinterpret_cast<float*>(ds.row_mut(i));
    for (std::size_t j = 0; j < d; ++j)
      row[j] = c[j] + spread * static_cast<float>(gauss());
  }
  return ds;
}

/// Base set plus held-out queries drawn from the same mixture (fresh centers
/// per seed would put queries out of distribution).
struct BlobPair {
  VectorDataset base;
  VectorDataset queries;
};

inline BlobPair make_blob_pair(std::size_t n, std::size_t n_queries, std::size_t d,
                               std::size_t clusters, std::uint64_t seed, float spread = 0.6f) {
  VectorDataset all = make_blobs(n + n_queries, d, clusters, seed, spread);
  BlobPair pair;
  pair.base = make_dataset(n, d, ElemKind::f32);
  std::memcpy(pair.base.data.data(), all.data.data(), pair.base.data.size());
  pair.queries = make_dataset(n_queries, d, ElemKind::f32);
  std::memcpy(pair.queries.data.data(), all.row(n), pair.queries.data.size());
  return pair;
}

inline VectorDataset make_uniform(std::size_t n, std::size_t d, std::uint64_t seed) {
  VectorDataset ds = make_dataset(n, d, ElemKind::f32);
  std::mt19937_64 rng(seed);
  float* p = reinterpret_cast<float*>(ds.data.data());
  for (std::size_t i = 0; i < n * d; ++i)
    p[i] = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return ds;
}

inline VectorDataset from_rows(const std::vector<std::vector<float>>& rows) {
  VectorDataset ds = make_dataset(rows.size(), rows[0].size(), ElemKind::f32);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(ds.row_mut(i), rows[i].data(), rows[i].size() * 4);
  return ds;
}

// Independent k-NN oracle: full sort of all n distances with double
// accumulation; deliberately a different code path from brute_force_knn.
inline std::vector<std::vector<RecordId>> oracle_knn(const VectorDataset& base,
                                                     const VectorDataset& queries,
                                                     std::size_t k) {
  std::vector<std::vector<RecordId>> out(queries.n);
  for (std::size_t qi = 0; qi < queries.n; ++qi) {
    std::vector<std::pair<double, RecordId>> all;
    all.reserve(base.n);
    for (std::size_t i = 0; i < base.n; ++i) {
      double dist = 0.0;
      for (std::size_t j = 0; j < base.d; ++j) {
        double diff = static_cast<double>(base.value(i, j)) -
                      static_cast<double>(queries.value(qi, j));
        dist += diff * diff;
      }
      all.emplace_back(dist, static_cast<RecordId>(i));
    }
    std::sort(all.begin(), all.end());
    out[qi].reserve(k);
    for (std::size_t j = 0; j < k; ++j) out[qi].push_back(all[j].second);
  }
  return out;
}

// Set-intersection recount, independent of recall_at_k's merge walk.
inline double oracle_recall(const std::vector<std::vector<RecordId>>& result,
                            const std::vector<std::vector<RecordId>>& truth, std::size_t k) {
  double total = 0.0;
  for (std::size_t qi = 0; qi < result.size(); ++qi) {
    std::size_t hits = 0;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        if (result[qi][a] == truth[qi][b]) {
          ++hits;
          break;
        }
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return total / static_cast<double>(result.size());
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("octoann_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

// Hand-built graph with explicit adjacency, for layout and cache tests.
inline GraphIndex graph_from_adj(std::vector<std::vector<RecordId>> adj, RecordId medoid = 0) {
  GraphIndex g;
  g.n = static_cast<std::uint32_t>(adj.size());
  g.medoid = medoid;
  std::size_t r_max = 1;
  for (const auto& a : adj) r_max = std::max(r_max, a.size());
  g.r_max = static_cast<std::uint32_t>(r_max);
  g.adj = std::move(adj);
  return g;
}

}  // namespace octotest
