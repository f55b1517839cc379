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

// Synthetic Gaussian-mixture dataset generator for demos and smoke runs.

#include <CLI11.hpp>

#include <cmath>
#include <cstring>
#include <iostream>
#include <random>

#include "octoann/dataset.hpp"

using namespace octoann;

namespace {

VectorDataset blobs(std::size_t n, std::size_t d, std::size_t clusters, std::uint64_t seed,
                    float spread, ElemKind elem) {
  VectorDataset ds = make_dataset(n, d, elem);
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
    for (std::size_t j = 0; j < d; ++j) {
      float v = c[j] + spread * static_cast<float>(gauss());
      if (elem == ElemKind::f32) {
        reinterpret_cast<float*>(ds.row_mut(i))[j] = v;
      } else {
        // map the ~[0,10] blob range onto the byte range
        int scaled = static_cast<int>(std::lround(v * 25.0));
        ds.row_mut(i)[j] = static_cast<std::byte>(
            static_cast<std::uint8_t>(std::clamp(scaled, 0, 255)));
      }
    }
  }
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"octoann-synth: synthetic Gaussian-mixture vectors"};
  std::size_t n = 10000, d = 32, clusters = 64, n_queries = 100;
  std::uint64_t seed = 1;
  float spread = 0.6f;
  std::string out = "base.fvecs", queries_out, format = "fvecs";
  app.add_option("--n", n, "base vector count");
  app.add_option("--d", d, "dimensionality");
  app.add_option("--clusters", clusters, "mixture components");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--spread", spread, "per-cluster stddev");
  app.add_option("--queries", n_queries, "query vector count");
  app.add_option("--format", format, "fvecs|bvecs");
  app.add_option("--out", out, "base output file")->required();
  app.add_option("--queries-out", queries_out, "query output file");
  CLI11_PARSE(app, argc, argv);

  try {
    VecFormat fmt = format_from_name(format);
    ElemKind elem = fmt == VecFormat::bvecs ? ElemKind::u8 : ElemKind::f32;
    require(fmt == VecFormat::fvecs || fmt == VecFormat::bvecs,
            "synth emits fvecs or bvecs");
    // queries are held-out rows of the same mixture, like public query sets
    std::size_t total = n + (queries_out.empty() ? 0 : n_queries);
    VectorDataset all = blobs(total, d, clusters, seed, spread, elem);
    VectorDataset base = make_dataset(n, d, elem);
    std::memcpy(base.data.data(), all.data.data(), base.data.size());
    save_vectors(base, out, fmt);
    std::cout << "wrote " << n << "x" << d << " " << format << " to " << out << "\n";
    if (!queries_out.empty()) {
      VectorDataset queries = make_dataset(n_queries, d, elem);
      std::memcpy(queries.data.data(), all.row(n), queries.data.size());
      save_vectors(queries, queries_out, fmt);
      std::cout << "wrote " << n_queries << " held-out queries to " << queries_out << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "octoann-synth: " << e.what() << "\n";
    return 1;
  }
}
