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

#include <cstring>
#include <vector>

#include "octoann/types.hpp"

namespace octoann {

enum class VecFormat { fvecs, bvecs, ivecs, raw };

VecFormat format_from_name(const std::string& s);
const char* format_name(VecFormat f);

/// In-memory matrix of n d-dimensional vectors, row-major, immutable once
/// loaded. Element kind decides the byte width of every value; uint8/int8
/// values are promoted to 32-bit accumulation inside distance kernels.
struct VectorDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  ElemKind elem = ElemKind::f32;
  Metric metric = Metric::l2;
  std::vector<std::byte> data;  // n * d * elem_size(elem) bytes

  std::size_t row_bytes() const { return d * elem_size(elem); }
  const std::byte* row(std::size_t i) const { return data.data() + i * row_bytes(); }
  std::byte* row_mut(std::size_t i) { return data.data() + i * row_bytes(); }

  /// Value promoted to float; exact for all three element kinds.
  float value(std::size_t i, std::size_t j) const;
  std::vector<float> row_as_float(std::size_t i) const;
};

VectorDataset make_dataset(std::size_t n, std::size_t d, ElemKind elem,
                           Metric metric = Metric::l2);

VectorDataset load_vectors(const std::string& path, VecFormat fmt);
void save_vectors(const VectorDataset& ds, const std::string& path, VecFormat fmt);

// ---- distance kernels -------------------------------------------------

/// Distance between two rows of the given element kind. Euclidean is
/// computed and reported squared (argmin-equivalent, no square roots);
/// integer elements accumulate in int32 to avoid overflow.
float raw_distance(ElemKind elem, Metric metric, const std::byte* a,
                   const std::byte* b, std::size_t d);

float l2_sq(const float* a, const float* b, std::size_t d);

/// Distance between dataset row i and a query row of the same element kind.
inline float row_distance(const VectorDataset& ds, std::size_t i, const std::byte* q) {
  return raw_distance(ds.elem, ds.metric, ds.row(i), q, ds.d);
}

// ---- ground truth ------------------------------------------------------

/// Exact k-NN answers: per query an id list ordered by (distance, id)
/// ascending, with matching distances.
struct GroundTruth {
  std::size_t k = 0;
  std::vector<std::vector<RecordId>> ids;
  std::vector<std::vector<float>> dists;
};

GroundTruth brute_force_knn(const VectorDataset& base, const VectorDataset& queries,
                            std::size_t k, unsigned threads = 0);

double recall_at_k(const std::vector<std::vector<RecordId>>& result,
                   const GroundTruth& truth, std::size_t k);

/// Ground truth persists as an ivecs (ids) + fvecs (distances) pair.
void save_ground_truth(const GroundTruth& gt, const std::string& ids_path,
                       const std::string& dists_path);
GroundTruth load_ground_truth(const std::string& ids_path,
                              const std::string& dists_path);

}  // namespace octoann
