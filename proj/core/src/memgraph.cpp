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

#include "octoann/memgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace octoann {

namespace {
constexpr char kMemGraphMagic[4] = {'O', 'M', 'G', '1'};
}

std::uint64_t MemGraph::memory_bytes() const {
  std::uint64_t total = sample_ids.size() * sizeof(RecordId);
  total += vectors.data.size();
  for (const auto& a : graph.adj) total += a.size() * sizeof(RecordId) + sizeof(a);
  return total;
}

MemGraph build_memgraph(const VectorDataset& base, double ratio, std::uint32_t R,
                        std::uint32_t L, std::uint64_t seed) {
  require(ratio > 0.0 && ratio <= 1.0, "sampling ratio must be in (0, 1]");
  const std::size_t n_s = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(base.n)));
  require(n_s >= 1, "sample would be empty");

  MemGraph mg;
  mg.ratio = ratio;

  // Partial Fisher-Yates over [0, n): first n_s entries are the sample.
  std::vector<RecordId> perm(base.n);
  for (std::size_t i = 0; i < base.n; ++i) perm[i] = static_cast<RecordId>(i);
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0xda3e39cb94b95bdbull);
  for (std::size_t i = 0; i < n_s; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (base.n - i));
    std::swap(perm[i], perm[j]);
  }
  mg.sample_ids.assign(perm.begin(), perm.begin() + n_s);
  std::sort(mg.sample_ids.begin(), mg.sample_ids.end());

  mg.vectors = make_dataset(n_s, base.d, base.elem, base.metric);
  for (std::size_t i = 0; i < n_s; ++i)
    std::memcpy(mg.vectors.row_mut(i), base.row(mg.sample_ids[i]), base.row_bytes());

  if (n_s == 1) {
    mg.graph.n = 1;
    mg.graph.r_max = 0;
    mg.graph.medoid = 0;
    mg.graph.adj.assign(1, {});
  } else {
    VamanaParams params;
    params.R = R;
    params.L_build = L;
    params.seed = seed;
    mg.graph = build_vamana(mg.vectors, params);
  }
  return mg;
}

std::vector<RecordId> select_entries(const MemGraph& mg, const std::byte* query,
                                     std::uint32_t L_mem, std::uint32_t fanout) {
  require(fanout >= 1, "fanout must be >= 1");
  RecordId entry = mg.graph.medoid;
  SearchTrace trace = greedy_search(mg.graph, mg.vectors, query, std::span(&entry, 1),
                                    std::max(L_mem, fanout));
  std::vector<RecordId> out;
  out.reserve(std::min<std::size_t>(fanout, trace.candidates.size()));
  for (std::size_t i = 0; i < trace.candidates.size() && out.size() < fanout; ++i)
    out.push_back(mg.sample_ids[trace.candidates[i].second]);
  return out;
}

void save_memgraph(const MemGraph& mg, const std::string& path) {
  std::ostringstream graph_blob(std::ios::binary);
  save_graph(mg.graph, graph_blob);  // graph file body embedded verbatim
  std::string blob = graph_blob.str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create file: " + path);
  out.write(kMemGraphMagic, 4);
  std::uint32_t n_s = static_cast<std::uint32_t>(mg.sample_count());
  std::uint32_t d = static_cast<std::uint32_t>(mg.vectors.d);
  std::uint8_t ek = static_cast<std::uint8_t>(mg.vectors.elem);
  std::uint8_t mk = static_cast<std::uint8_t>(mg.vectors.metric);
  double ratio = mg.ratio;
  std::uint64_t blob_size = blob.size();
  out.write(reinterpret_cast<const char*>(&n_s), 4);
  out.write(reinterpret_cast<const char*>(&ratio), 8);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&ek), 1);
  out.write(reinterpret_cast<const char*>(&mk), 1);
  out.write(reinterpret_cast<const char*>(&blob_size), 8);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  out.write(reinterpret_cast<const char*>(mg.vectors.data.data()),
            static_cast<std::streamsize>(mg.vectors.data.size()));
  out.write(reinterpret_cast<const char*>(mg.sample_ids.data()),
            static_cast<std::streamsize>(mg.sample_ids.size() * 4));
  require(out.good(), "short write on " + path);
}

MemGraph load_memgraph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, kMemGraphMagic, 4) == 0,
          "bad memgraph magic in " + path);
  MemGraph mg;
  std::uint32_t n_s = 0, d = 0;
  std::uint8_t ek = 0, mk = 0;
  std::uint64_t blob_size = 0;
  in.read(reinterpret_cast<char*>(&n_s), 4);
  in.read(reinterpret_cast<char*>(&mg.ratio), 8);
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&ek), 1);
  in.read(reinterpret_cast<char*>(&mk), 1);
  in.read(reinterpret_cast<char*>(&blob_size), 8);
  require(in.good() && n_s >= 1 && d >= 1, "corrupt memgraph header in " + path);

  {
    std::string blob(blob_size, '\0');
    in.read(blob.data(), static_cast<std::streamsize>(blob_size));
    require(in.good(), "truncated memgraph file " + path);
    std::istringstream blob_in(blob, std::ios::binary);
    mg.graph = load_graph(blob_in);
  }
  require(mg.graph.n == n_s, "memgraph sample count disagrees with embedded graph");

  mg.vectors = make_dataset(n_s, d, static_cast<ElemKind>(ek), static_cast<Metric>(mk));
  in.read(reinterpret_cast<char*>(mg.vectors.data.data()),
          static_cast<std::streamsize>(mg.vectors.data.size()));
  mg.sample_ids.resize(n_s);
  in.read(reinterpret_cast<char*>(mg.sample_ids.data()),
          static_cast<std::streamsize>(4ull * n_s));
  require(in.good(), "truncated memgraph file " + path);
  return mg;
}

}  // namespace octoann
