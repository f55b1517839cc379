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

#include "octoann/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace octoann {

const char* elem_name(ElemKind k) {
  switch (k) {
    case ElemKind::f32: return "float32";
    case ElemKind::u8: return "uint8";
    case ElemKind::i8: return "int8";
  }
  return "?";
}

const char* metric_name(Metric m) {
  return m == Metric::l2 ? "euclidean-squared" : "cosine";
}

ElemKind elem_from_name(const std::string& s) {
  if (s == "float32" || s == "f32" || s == "float") return ElemKind::f32;
  if (s == "uint8" || s == "u8") return ElemKind::u8;
  if (s == "int8" || s == "i8") return ElemKind::i8;
  raise("unknown element kind: " + s);
}

Metric metric_from_name(const std::string& s) {
  if (s == "euclidean-squared" || s == "l2" || s == "euclidean") return Metric::l2;
  if (s == "cosine") return Metric::cosine;
  raise("unknown metric: " + s);
}

VecFormat format_from_name(const std::string& s) {
  if (s == "fvecs") return VecFormat::fvecs;
  if (s == "bvecs") return VecFormat::bvecs;
  if (s == "ivecs") return VecFormat::ivecs;
  if (s == "raw") return VecFormat::raw;
  raise("unknown format tag: " + s);
}

const char* format_name(VecFormat f) {
  switch (f) {
    case VecFormat::fvecs: return "fvecs";
    case VecFormat::bvecs: return "bvecs";
    case VecFormat::ivecs: return "ivecs";
    case VecFormat::raw: return "raw";
  }
  return "?";
}

float VectorDataset::value(std::size_t i, std::size_t j) const {
  const std::byte* p = row(i);
  switch (elem) {
    case ElemKind::f32: {
      float v;
      std::memcpy(&v, p + 4 * j, 4);
      return v;
    }
    case ElemKind::u8: return static_cast<float>(static_cast<std::uint8_t>(p[j]));
    case ElemKind::i8: return static_cast<float>(static_cast<std::int8_t>(p[j]));
  }
  return 0.0f;
}

std::vector<float> VectorDataset::row_as_float(std::size_t i) const {
  std::vector<float> out(d);
  if (elem == ElemKind::f32) {
    std::memcpy(out.data(), row(i), d * 4);
  } else {
    for (std::size_t j = 0; j < d; ++j) out[j] = value(i, j);
  }
  return out;
}

VectorDataset make_dataset(std::size_t n, std::size_t d, ElemKind elem, Metric metric) {
  VectorDataset ds;
  ds.n = n;
  ds.d = d;
  ds.elem = elem;
  ds.metric = metric;
  ds.data.resize(n * d * elem_size(elem));
  return ds;
}

// ---- distance kernels -------------------------------------------------

float l2_sq(const float* a, const float* b, std::size_t d) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < d; ++i) {
    float diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

namespace {

// int32 accumulation: worst case d * 255^2 stays within int32 for d <= 33000.
template <typename T>
std::int32_t l2_sq_int(const T* a, const T* b, std::size_t d) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < d; ++i) {
    std::int32_t diff = static_cast<std::int32_t>(a[i]) - static_cast<std::int32_t>(b[i]);
    acc += diff * diff;
  }
  return acc;
}

float cosine_f32(const float* a, const float* b, std::size_t d) {
  float dot = 0.0f, na = 0.0f, nb = 0.0f;
  for (std::size_t i = 0; i < d; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0f || nb == 0.0f) return 1.0f;
  return 1.0f - dot / std::sqrt(na * nb);
}

template <typename T>
float cosine_int(const T* a, const T* b, std::size_t d) {
  std::int64_t dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < d; ++i) {
    std::int64_t x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0 || nb == 0) return 1.0f;
  return 1.0f - static_cast<float>(static_cast<double>(dot) /
                                   std::sqrt(static_cast<double>(na) * static_cast<double>(nb)));
}

}  // namespace

float raw_distance(ElemKind elem, Metric metric, const std::byte* a,
                   const std::byte* b, std::size_t d) {
  if (metric == Metric::l2) {
    switch (elem) {
      case ElemKind::f32:
        return l2_sq(reinterpret_cast<const float*>(a), reinterpret_cast<const float*>(b), d);
      case ElemKind::u8:
        return static_cast<float>(l2_sq_int(reinterpret_cast<const std::uint8_t*>(a),
                                            reinterpret_cast<const std::uint8_t*>(b), d));
      case ElemKind::i8:
        return static_cast<float>(l2_sq_int(reinterpret_cast<const std::int8_t*>(a),
                                            reinterpret_cast<const std::int8_t*>(b), d));
    }
  } else {
    switch (elem) {
      case ElemKind::f32:
        return cosine_f32(reinterpret_cast<const float*>(a), reinterpret_cast<const float*>(b), d);
      case ElemKind::u8:
        return cosine_int(reinterpret_cast<const std::uint8_t*>(a),
                          reinterpret_cast<const std::uint8_t*>(b), d);
      case ElemKind::i8:
        return cosine_int(reinterpret_cast<const std::int8_t*>(a),
                          reinterpret_cast<const std::int8_t*>(b), d);
    }
  }
  return 0.0f;
}

// ---- file I/O ----------------------------------------------------------

namespace {

std::vector<std::byte> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> buf(size);
  if (size > 0) in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  require(in.good() || size == 0, "short read on " + path);
  return buf;
}

// fvecs/bvecs/ivecs grammar: records of [i32 d][d values], no global header.
VectorDataset load_vecs(const std::string& path, std::size_t value_bytes, ElemKind elem,
                        bool values_are_i32) {
  std::vector<std::byte> buf = read_file(path);
  require(!buf.empty(), "no records in " + path);

  std::int32_t d0 = 0;
  require(buf.size() >= 4, "truncated file: " + path);
  std::memcpy(&d0, buf.data(), 4);
  require(d0 >= 1, "invalid per-record dimension in " + path);

  const std::size_t rec_bytes = 4 + static_cast<std::size_t>(d0) * value_bytes;
  require(buf.size() % rec_bytes == 0, "truncated file: " + path);
  const std::size_t n = buf.size() / rec_bytes;

  VectorDataset ds = make_dataset(n, static_cast<std::size_t>(d0), elem);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* rec = buf.data() + i * rec_bytes;
    std::int32_t d = 0;
    std::memcpy(&d, rec, 4);
    require(d == d0, "inconsistent per-record dimension in " + path);
    if (values_are_i32) {
      // ivecs holds 32-bit signed ints; store promoted to float32 and insist on
      // exact representability so the round trip stays byte-identical.
      float* dst = reinterpret_cast<float*>(ds.row_mut(i));
      const std::int32_t* src = reinterpret_cast<const std::int32_t*>(rec + 4);
      for (std::int32_t j = 0; j < d; ++j) {
        require(src[j] <= (1 << 24) && src[j] >= -(1 << 24),
                "ivecs value not exactly representable as float32 in " + path);
        dst[j] = static_cast<float>(src[j]);
      }
    } else {
      std::memcpy(ds.row_mut(i), rec + 4, static_cast<std::size_t>(d) * value_bytes);
    }
  }
  return ds;
}

// raw format: [u32 n][u32 d][u8 elem] then row-major payload, little-endian.
VectorDataset load_raw(const std::string& path) {
  std::vector<std::byte> buf = read_file(path);
  require(buf.size() >= 9, buf.empty() ? "no records in " + path : "truncated file: " + path);
  std::uint32_t n = 0, d = 0;
  std::uint8_t ek = 0;
  std::memcpy(&n, buf.data(), 4);
  std::memcpy(&d, buf.data() + 4, 4);
  std::memcpy(&ek, buf.data() + 8, 1);
  require(n >= 1 && d >= 1, "no records in " + path);
  require(ek <= 2, "unknown element kind tag in " + path);
  VectorDataset ds = make_dataset(n, d, static_cast<ElemKind>(ek));
  require(buf.size() == 9 + ds.data.size(), "truncated file: " + path);
  std::memcpy(ds.data.data(), buf.data() + 9, ds.data.size());
  return ds;
}

}  // namespace

VectorDataset load_vectors(const std::string& path, VecFormat fmt) {
  switch (fmt) {
    case VecFormat::fvecs: return load_vecs(path, 4, ElemKind::f32, false);
    case VecFormat::bvecs: return load_vecs(path, 1, ElemKind::u8, false);
    case VecFormat::ivecs: return load_vecs(path, 4, ElemKind::f32, true);
    case VecFormat::raw: return load_raw(path);
  }
  raise("unknown format");
}

void save_vectors(const VectorDataset& ds, const std::string& path, VecFormat fmt) {
  require(ds.n >= 1 && ds.d >= 1, "empty dataset");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot create file: " + path);

  if (fmt == VecFormat::raw) {
    std::uint32_t n = static_cast<std::uint32_t>(ds.n), d = static_cast<std::uint32_t>(ds.d);
    std::uint8_t ek = static_cast<std::uint8_t>(ds.elem);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&ek), 1);
    out.write(reinterpret_cast<const char*>(ds.data.data()),
              static_cast<std::streamsize>(ds.data.size()));
    require(out.good(), "short write on " + path);
    return;
  }

  ElemKind want = fmt == VecFormat::bvecs ? ElemKind::u8 : ElemKind::f32;
  require(ds.elem == want, std::string("dataset element kind ") + elem_name(ds.elem) +
                               " does not match format " + format_name(fmt));

  const std::int32_t d = static_cast<std::int32_t>(ds.d);
  for (std::size_t i = 0; i < ds.n; ++i) {
    out.write(reinterpret_cast<const char*>(&d), 4);
    if (fmt == VecFormat::ivecs) {
      const float* src = reinterpret_cast<const float*>(ds.row(i));
      for (std::size_t j = 0; j < ds.d; ++j) {
        float v = src[j];
        std::int32_t iv = static_cast<std::int32_t>(v);
        require(static_cast<float>(iv) == v, "non-integral value cannot be saved as ivecs");
        out.write(reinterpret_cast<const char*>(&iv), 4);
      }
    } else {
      out.write(reinterpret_cast<const char*>(ds.row(i)),
                static_cast<std::streamsize>(ds.row_bytes()));
    }
  }
  require(out.good(), "short write on " + path);
}

// ---- brute-force ground truth -------------------------------------------

GroundTruth brute_force_knn(const VectorDataset& base, const VectorDataset& queries,
                            std::size_t k, unsigned threads) {
  require(base.d == queries.d, "dimension mismatch between base and queries");
  require(base.elem == queries.elem, "element kind mismatch between base and queries");
  require(k >= 1 && k <= base.n, "k must satisfy 1 <= k <= n");

  GroundTruth gt;
  gt.k = k;
  gt.ids.resize(queries.n);
  gt.dists.resize(queries.n);

  auto run = [&](std::size_t q_begin, std::size_t q_end) {
    std::vector<std::pair<float, RecordId>> heap;  // max-heap on (dist, id)
    for (std::size_t qi = q_begin; qi < q_end; ++qi) {
      const std::byte* q = queries.row(qi);
      heap.clear();
      for (std::size_t i = 0; i < base.n; ++i) {
        float dist = row_distance(base, i, q);
        std::pair<float, RecordId> cand{dist, static_cast<RecordId>(i)};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      std::sort_heap(heap.begin(), heap.end());  // ascending (dist, id)
      auto& ids = gt.ids[qi];
      auto& dists = gt.dists[qi];
      ids.resize(k);
      dists.resize(k);
      for (std::size_t j = 0; j < k; ++j) {
        dists[j] = heap[j].first;
        ids[j] = heap[j].second;
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(queries.n, 1)));
  if (threads <= 1) {
    run(0, queries.n);
  } else {
    std::vector<std::thread> pool;
    std::size_t per = (queries.n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      std::size_t b = t * per, e = std::min(queries.n, b + per);
      if (b >= e) break;
      pool.emplace_back(run, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return gt;
}

double recall_at_k(const std::vector<std::vector<RecordId>>& result,
                   const GroundTruth& truth, std::size_t k) {
  require(result.size() == truth.ids.size(), "result and truth cover different query counts");
  require(!result.empty(), "no queries");
  double total = 0.0;
  for (std::size_t qi = 0; qi < result.size(); ++qi) {
    require(result[qi].size() >= k, "result list shorter than k");
    require(truth.ids[qi].size() >= k, "truth list shorter than k");
    std::vector<RecordId> s(result[qi].begin(), result[qi].begin() + k);
    std::vector<RecordId> t(truth.ids[qi].begin(), truth.ids[qi].begin() + k);
    std::sort(s.begin(), s.end());
    std::sort(t.begin(), t.end());
    std::size_t hits = 0;
    std::size_t a = 0, b = 0;
    while (a < k && b < k) {
      if (s[a] == t[b]) {
        ++hits;
        ++a;
        ++b;
      } else if (s[a] < t[b]) {
        ++a;
      } else {
        ++b;
      }
    }
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return total / static_cast<double>(result.size());
}

void save_ground_truth(const GroundTruth& gt, const std::string& ids_path,
                       const std::string& dists_path) {
  require(!gt.ids.empty(), "empty ground truth");
  std::ofstream ids_out(ids_path, std::ios::binary | std::ios::trunc);
  std::ofstream dists_out(dists_path, std::ios::binary | std::ios::trunc);
  require(ids_out.good() && dists_out.good(), "cannot create ground-truth files");
  for (std::size_t qi = 0; qi < gt.ids.size(); ++qi) {
    const std::int32_t d = static_cast<std::int32_t>(gt.ids[qi].size());
    ids_out.write(reinterpret_cast<const char*>(&d), 4);
    ids_out.write(reinterpret_cast<const char*>(gt.ids[qi].data()), 4LL * d);
    dists_out.write(reinterpret_cast<const char*>(&d), 4);
    dists_out.write(reinterpret_cast<const char*>(gt.dists[qi].data()), 4LL * d);
  }
  require(ids_out.good() && dists_out.good(), "short write on ground-truth files");
}

GroundTruth load_ground_truth(const std::string& ids_path, const std::string& dists_path) {
  std::vector<std::byte> ids_buf = read_file(ids_path);
  std::vector<std::byte> dists_buf = read_file(dists_path);
  GroundTruth gt;
  std::size_t off = 0;
  while (off + 4 <= ids_buf.size()) {
    std::int32_t d = 0;
    std::memcpy(&d, ids_buf.data() + off, 4);
    require(d >= 1, "invalid ground-truth record");
    require(off + 4 + 4ull * d <= ids_buf.size(), "truncated ground-truth ids");
    std::vector<RecordId> ids(static_cast<std::size_t>(d));
    std::memcpy(ids.data(), ids_buf.data() + off + 4, 4ull * d);
    gt.ids.push_back(std::move(ids));
    off += 4 + 4ull * d;
  }
  require(off == ids_buf.size(), "truncated ground-truth ids");
  off = 0;
  while (off + 4 <= dists_buf.size()) {
    std::int32_t d = 0;
    std::memcpy(&d, dists_buf.data() + off, 4);
    require(off + 4 + 4ull * d <= dists_buf.size(), "truncated ground-truth distances");
    std::vector<float> dists(static_cast<std::size_t>(d));
    std::memcpy(dists.data(), dists_buf.data() + off + 4, 4ull * d);
    gt.dists.push_back(std::move(dists));
    off += 4 + 4ull * d;
  }
  require(gt.ids.size() == gt.dists.size(), "ground-truth id/distance pair mismatch");
  gt.k = gt.ids.empty() ? 0 : gt.ids.front().size();
  return gt;
}

}  // namespace octoann
