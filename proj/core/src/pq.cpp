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

#include "octoann/pq.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

namespace octoann {

namespace {

constexpr char kCodebookMagic[4] = {'O', 'P', 'Q', '1'};
constexpr char kCodesMagic[4] = {'O', 'P', 'C', '1'};

std::size_t centroid_block_offset(const PQCodebook& cb, std::size_t s) {
  std::size_t off = 0;
  for (std::size_t i = 0; i < s; ++i) off += cb.k_c * cb.sub_dim(i);
  return off;
}

float sub_l2_sq(const float* a, const float* b, std::size_t d) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < d; ++i) {
    float diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

// Portable uniform index draw; avoids std::uniform_int_distribution whose
// output is implementation-defined.
std::size_t draw_index(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng() % bound);
}

double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

const float* PQCodebook::centroid(std::size_t s, std::size_t c) const {
  return centroids.data() + centroid_block_offset(*this, s) + c * sub_dim(s);
}

float* PQCodebook::centroid_mut(std::size_t s, std::size_t c) {
  return centroids.data() + centroid_block_offset(*this, s) + c * sub_dim(s);
}

std::uint32_t pq_m_for_budget(std::uint64_t budget_bytes, std::uint64_t n, std::uint32_t d) {
  require(n > 0, "empty dataset");
  std::uint64_t m = budget_bytes / n;
  if (m < 1) m = 1;
  if (m > d) m = d;
  return static_cast<std::uint32_t>(m);
}

PQCodebook train_codebook(const VectorDataset& sample, std::uint32_t m, std::uint32_t k_c,
                          std::uint32_t iters, std::uint64_t seed) {
  require(m >= 1 && m <= sample.d, "m must satisfy 1 <= m <= d");
  require(k_c >= 1 && k_c <= 256, "k_c must satisfy 1 <= k_c <= 256");
  require(sample.n >= k_c, "sample smaller than k_c");

  PQCodebook cb;
  cb.m = m;
  cb.k_c = k_c;
  cb.d = static_cast<std::uint32_t>(sample.d);
  cb.elem = sample.elem;
  cb.metric = sample.metric;

  // Even split of d over m; the first d % m subspaces get one extra dim.
  cb.sub_offset.resize(m + 1);
  std::uint32_t base = cb.d / m, rem = cb.d % m, off = 0;
  for (std::uint32_t s = 0; s < m; ++s) {
    cb.sub_offset[s] = off;
    off += base + (s < rem ? 1 : 0);
  }
  cb.sub_offset[m] = cb.d;

  std::size_t total = 0;
  for (std::uint32_t s = 0; s < m; ++s) total += k_c * cb.sub_dim(s);
  cb.centroids.resize(total);

  const std::size_t n = sample.n;
  std::vector<float> rows(n * sample.d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = sample.row_as_float(i);
    std::copy(r.begin(), r.end(), rows.begin() + i * sample.d);
  }

  // Subspaces are independent (each owns its RNG stream), so training
  // parallelizes over s without affecting determinism.
  auto train_subspace = [&](std::uint32_t s) {
    const std::size_t sd = cb.sub_dim(s);
    const std::size_t s_off = cb.sub_offset[s];
    auto point = [&](std::size_t i) { return rows.data() + i * sample.d + s_off; };

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + s + 1);

    // k-means++ seeding.
    std::vector<const float*> seeds;
    seeds.reserve(k_c);
    std::vector<double> min_d(n, std::numeric_limits<double>::max());
    seeds.push_back(point(draw_index(rng, n)));
    for (std::uint32_t c = 1; c < k_c; ++c) {
      double total_w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double dist = sub_l2_sq(point(i), seeds.back(), sd);
        if (dist < min_d[i]) min_d[i] = dist;
        total_w += min_d[i];
      }
      std::size_t pick = 0;
      if (total_w > 0.0) {
        double target = draw_unit(rng) * total_w, acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += min_d[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = draw_index(rng, n);
      }
      seeds.push_back(point(pick));
    }
    for (std::uint32_t c = 0; c < k_c; ++c)
      std::copy(seeds[c], seeds[c] + sd, cb.centroid_mut(s, c));

    // Lloyd iterations.
    std::vector<std::uint32_t> assign(n, 0);
    std::vector<double> sums(k_c * sd);
    std::vector<std::size_t> counts(k_c);
    for (std::uint32_t it = 0; it < iters; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        float best = std::numeric_limits<float>::max();
        std::uint32_t best_c = 0;
        for (std::uint32_t c = 0; c < k_c; ++c) {
          float dist = sub_l2_sq(point(i), cb.centroid(s, c), sd);
          if (dist < best) {
            best = dist;
            best_c = c;
          }
        }
        assign[i] = best_c;
      }
      std::fill(sums.begin(), sums.end(), 0.0);
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        const float* p = point(i);
        double* dst = sums.data() + assign[i] * sd;
        for (std::size_t j = 0; j < sd; ++j) dst[j] += p[j];
        ++counts[assign[i]];
      }
      for (std::uint32_t c = 0; c < k_c; ++c) {
        if (counts[c] == 0) continue;
        float* dst = cb.centroid_mut(s, c);
        for (std::size_t j = 0; j < sd; ++j)
          dst[j] = static_cast<float>(sums[c * sd + j] / static_cast<double>(counts[c]));
      }
      // Reseed empty clusters to the point farthest from its assigned centroid.
      for (std::uint32_t c = 0; c < k_c; ++c) {
        if (counts[c] != 0) continue;
        double worst = -1.0;
        std::size_t worst_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double dist = sub_l2_sq(point(i), cb.centroid(s, assign[i]), sd);
          if (dist > worst) {
            worst = dist;
            worst_i = i;
          }
        }
        std::copy(point(worst_i), point(worst_i) + sd, cb.centroid_mut(s, c));
      }
    }
  };

  unsigned workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), m);
  if (workers <= 1 || m == 1) {
    for (std::uint32_t s = 0; s < m; ++s) train_subspace(s);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::uint32_t> next{0};
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::uint32_t s = next.fetch_add(1);
          if (s >= m) return;
          train_subspace(s);
        }
      });
    for (auto& t : pool) t.join();
  }
  for (float v : cb.centroids) require(std::isfinite(v), "non-finite centroid after training");
  return cb;
}

void encode(const PQCodebook& cb, const float* v, std::uint8_t* out) {
  for (std::uint32_t s = 0; s < cb.m; ++s) {
    const std::size_t sd = cb.sub_dim(s);
    const float* sub = v + cb.sub_offset[s];
    float best = std::numeric_limits<float>::max();
    std::uint32_t best_c = 0;
    for (std::uint32_t c = 0; c < cb.k_c; ++c) {
      float dist = sub_l2_sq(sub, cb.centroid(s, c), sd);
      if (dist < best) {  // strict: ties keep the lowest index
        best = dist;
        best_c = c;
      }
    }
    out[s] = static_cast<std::uint8_t>(best_c);
  }
}

PQCodes encode_dataset(const PQCodebook& cb, const VectorDataset& ds) {
  require(ds.d == cb.d, "dimension mismatch");
  PQCodes codes;
  codes.n = static_cast<std::uint32_t>(ds.n);
  codes.m = cb.m;
  codes.bytes.resize(static_cast<std::size_t>(ds.n) * cb.m);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto row = ds.row_as_float(i);
      encode(cb, row.data(), codes.bytes.data() + i * cb.m);
    }
  };
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers <= 1 || ds.n < 4096) {
    run(0, ds.n);
  } else {
    std::vector<std::thread> pool;
    std::size_t per = (ds.n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      std::size_t b = w * per, e = std::min(ds.n, b + per);
      if (b >= e) break;
      pool.emplace_back(run, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return codes;
}

DistanceTable build_distance_table(const PQCodebook& cb, const float* q) {
  DistanceTable t;
  t.m = cb.m;
  t.k_c = cb.k_c;
  t.v.resize(static_cast<std::size_t>(cb.m) * cb.k_c);
  for (std::uint32_t s = 0; s < cb.m; ++s) {
    const std::size_t sd = cb.sub_dim(s);
    const float* sub = q + cb.sub_offset[s];
    for (std::uint32_t c = 0; c < cb.k_c; ++c)
      t.v[static_cast<std::size_t>(s) * cb.k_c + c] = sub_l2_sq(sub, cb.centroid(s, c), sd);
  }
  return t;
}

float approx_distance(const DistanceTable& t, const std::uint8_t* code) {
  float acc = 0.0f;
  for (std::uint32_t s = 0; s < t.m; ++s) {
    require(code[s] < t.k_c, "code byte out of range");
    acc += t.v[static_cast<std::size_t>(s) * t.k_c + code[s]];
  }
  return acc;
}

std::vector<float> reconstruct(const PQCodebook& cb, const std::uint8_t* code) {
  std::vector<float> out(cb.d);
  for (std::uint32_t s = 0; s < cb.m; ++s) {
    const float* c = cb.centroid(s, code[s]);
    std::copy(c, c + cb.sub_dim(s), out.begin() + cb.sub_offset[s]);
  }
  return out;
}

double reconstruction_error(const PQCodebook& cb, const VectorDataset& sample) {
  require(sample.d == cb.d, "dimension mismatch");
  double total = 0.0;
  std::vector<std::uint8_t> code(cb.m);
  for (std::size_t i = 0; i < sample.n; ++i) {
    auto row = sample.row_as_float(i);
    encode(cb, row.data(), code.data());
    auto rec = reconstruct(cb, code.data());
    total += static_cast<double>(l2_sq(row.data(), rec.data(), cb.d));
  }
  return total / static_cast<double>(sample.n);
}

void save_codebook(const PQCodebook& cb, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create file: " + path);
  out.write(kCodebookMagic, 4);
  std::uint8_t ek = static_cast<std::uint8_t>(cb.elem), mk = static_cast<std::uint8_t>(cb.metric);
  out.write(reinterpret_cast<const char*>(&cb.m), 4);
  out.write(reinterpret_cast<const char*>(&cb.k_c), 4);
  out.write(reinterpret_cast<const char*>(&cb.d), 4);
  out.write(reinterpret_cast<const char*>(&ek), 1);
  out.write(reinterpret_cast<const char*>(&mk), 1);
  out.write(reinterpret_cast<const char*>(cb.centroids.data()),
            static_cast<std::streamsize>(cb.centroids.size() * 4));
  require(out.good(), "short write on " + path);
}

PQCodebook load_codebook(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, kCodebookMagic, 4) == 0,
          "bad codebook magic in " + path);
  PQCodebook cb;
  std::uint8_t ek = 0, mk = 0;
  in.read(reinterpret_cast<char*>(&cb.m), 4);
  in.read(reinterpret_cast<char*>(&cb.k_c), 4);
  in.read(reinterpret_cast<char*>(&cb.d), 4);
  in.read(reinterpret_cast<char*>(&ek), 1);
  in.read(reinterpret_cast<char*>(&mk), 1);
  require(in.good() && cb.m >= 1 && cb.m <= cb.d && cb.k_c >= 1 && cb.k_c <= 256,
          "corrupt codebook header in " + path);
  cb.elem = static_cast<ElemKind>(ek);
  cb.metric = static_cast<Metric>(mk);
  cb.sub_offset.resize(cb.m + 1);
  std::uint32_t base = cb.d / cb.m, rem = cb.d % cb.m, off = 0;
  for (std::uint32_t s = 0; s < cb.m; ++s) {
    cb.sub_offset[s] = off;
    off += base + (s < rem ? 1 : 0);
  }
  cb.sub_offset[cb.m] = cb.d;
  std::size_t total = 0;
  for (std::uint32_t s = 0; s < cb.m; ++s) total += cb.k_c * cb.sub_dim(s);
  cb.centroids.resize(total);
  in.read(reinterpret_cast<char*>(cb.centroids.data()),
          static_cast<std::streamsize>(total * 4));
  require(in.good(), "truncated codebook file " + path);
  return cb;
}

void save_codes(const PQCodes& codes, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create file: " + path);
  out.write(kCodesMagic, 4);
  out.write(reinterpret_cast<const char*>(&codes.n), 4);
  out.write(reinterpret_cast<const char*>(&codes.m), 4);
  out.write(reinterpret_cast<const char*>(codes.bytes.data()),
            static_cast<std::streamsize>(codes.bytes.size()));
  require(out.good(), "short write on " + path);
}

PQCodes load_codes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, kCodesMagic, 4) == 0, "bad codes magic in " + path);
  PQCodes codes;
  in.read(reinterpret_cast<char*>(&codes.n), 4);
  in.read(reinterpret_cast<char*>(&codes.m), 4);
  require(in.good(), "corrupt codes header in " + path);
  codes.bytes.resize(static_cast<std::size_t>(codes.n) * codes.m);
  in.read(reinterpret_cast<char*>(codes.bytes.data()),
          static_cast<std::streamsize>(codes.bytes.size()));
  require(in.good(), "truncated codes file " + path);
  return codes;
}

}  // namespace octoann
