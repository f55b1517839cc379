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

#include <vector>

#include "octoann/dataset.hpp"
#include "octoann/types.hpp"

namespace octoann {

/// Product-quantization codebook: m subspaces, k_c centroids each.
/// Subspace dimensions follow the even split of d over m (the first d % m
/// subspaces get one extra dimension), so the trailing subspaces may be
/// shorter; the per-subspace dims always sum to d.
struct PQCodebook {
  std::uint32_t m = 0;
  std::uint32_t k_c = 0;
  std::uint32_t d = 0;
  ElemKind elem = ElemKind::f32;  // element kind of the training data
  Metric metric = Metric::l2;
  std::vector<std::uint32_t> sub_offset;  // m + 1 boundaries into [0, d]
  std::vector<float> centroids;           // concatenated per subspace: k_c * sub_dim(s)

  std::size_t sub_dim(std::size_t s) const { return sub_offset[s + 1] - sub_offset[s]; }
  const float* centroid(std::size_t s, std::size_t c) const;
  float* centroid_mut(std::size_t s, std::size_t c);
};

/// One m-byte code per record (centroid index per subspace).
struct PQCodes {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::vector<std::uint8_t> bytes;  // n * m

  const std::uint8_t* code(std::size_t i) const { return bytes.data() + i * m; }
};

/// Per-query table of partial squared distances, m x k_c.
struct DistanceTable {
  std::uint32_t m = 0;
  std::uint32_t k_c = 0;
  std::vector<float> v;

  float at(std::size_t s, std::size_t c) const { return v[s * k_c + c]; }
};

/// k-means++ seeded Lloyd training, fixed iteration count, empty clusters
/// reseeded to the farthest assigned point. Deterministic for a fixed seed.
PQCodebook train_codebook(const VectorDataset& sample, std::uint32_t m, std::uint32_t k_c,
                          std::uint32_t iters = 12, std::uint64_t seed = 0);

/// Nearest centroid per subspace, ties broken toward the lowest index.
void encode(const PQCodebook& cb, const float* v, std::uint8_t* out);
PQCodes encode_dataset(const PQCodebook& cb, const VectorDataset& ds);

DistanceTable build_distance_table(const PQCodebook& cb, const float* q);
float approx_distance(const DistanceTable& t, const std::uint8_t* code);

/// Mean squared reconstruction error of the codebook over a sample.
double reconstruction_error(const PQCodebook& cb, const VectorDataset& sample);

std::vector<float> reconstruct(const PQCodebook& cb, const std::uint8_t* code);

void save_codebook(const PQCodebook& cb, const std::string& path);
PQCodebook load_codebook(const std::string& path);
void save_codes(const PQCodes& codes, const std::string& path);
PQCodes load_codes(const std::string& path);

/// Subspace count for a memory budget of `budget_bytes` across n records at
/// one byte per subspace (k_c = 256).
std::uint32_t pq_m_for_budget(std::uint64_t budget_bytes, std::uint64_t n, std::uint32_t d);

}  // namespace octoann
