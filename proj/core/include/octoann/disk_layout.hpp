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

#include <memory>
#include <span>
#include <vector>

#include "octoann/graph.hpp"
#include "octoann/io_backend.hpp"
#include "octoann/types.hpp"

namespace octoann {

/// Record-id to (page, slot) assignment for a page-aligned store. The
/// identity layout places record i at page i / n_p, slot i % n_p; a mapped
/// layout carries an explicit bijection.
struct PageLayout {
  std::uint32_t page_size = 0;
  std::uint32_t record_size = 0;
  std::uint32_t n_p = 0;  // records per page, floor(P / s_rec)
  std::uint32_t n = 0;
  std::uint32_t page_count = 0;
  bool mapped = false;
  std::vector<std::uint32_t> page_of;  // size n when mapped
  std::vector<std::uint16_t> slot_of;

  static PageLayout identity(std::uint32_t n, std::uint32_t page_size, std::uint32_t record_size);

  std::uint32_t page_of_id(RecordId id) const { return mapped ? page_of[id] : id / n_p; }
  std::uint16_t slot_of_id(RecordId id) const {
    return mapped ? slot_of[id] : static_cast<std::uint16_t>(id % n_p);
  }

  /// Inverse table: entry page * n_p + slot holds the record id (kInvalidId
  /// for unoccupied slots).
  std::vector<RecordId> build_inverse() const;
};

std::uint32_t record_size_bytes(std::size_t d, ElemKind elem, std::uint32_t r_max);

/// Header-page contents of a packed index file.
struct DiskIndexMeta {
  std::uint32_t version = 1;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  ElemKind elem = ElemKind::f32;
  std::uint32_t r_max = 0;
  std::uint32_t page_size = 0;
  std::uint32_t n_p = 0;
  RecordId medoid = 0;
  bool mapped = false;

  std::uint32_t record_size() const { return record_size_bytes(d, elem, r_max); }
};

/// Pack records as [vector bytes | u32 neighbor count | neighbor ids],
/// zero-padded to the fixed record size, into page-aligned storage; page 0
/// is the header page, data pages start at offset page_size. A mapped
/// layout also writes a `path + ".map"` sidecar of per-record little-endian
/// (u32 page, u16 slot) pairs.
DiskIndexMeta pack_disk_index(const VectorDataset& base, const GraphIndex& g,
                              std::uint32_t page_size, const PageLayout* layout,
                              const std::string& path);

DiskIndexMeta read_disk_index_meta(const std::string& path);
PageLayout load_layout_sidecar(const std::string& index_path, const DiskIndexMeta& meta);

/// Zero-copy view of one record inside page bytes.
struct RecordView {
  const std::byte* vec = nullptr;
  std::span<const RecordId> neighbors;
};

RecordView decode_record(const DiskIndexMeta& meta, const std::byte* page_bytes,
                         std::uint32_t slot);

/// Fully decoded record, used by the cache and by offline checks.
struct DecodedRecord {
  std::vector<std::byte> vec;
  std::vector<RecordId> neighbors;
};

/// Reader over a packed index: header metadata, layout (identity or the
/// sidecar map), page reads and record decoding. Shareable across threads.
class DiskIndexReader {
 public:
  DiskIndexReader(const std::string& path, DirectIo mode, unsigned io_threads = 8);

  const DiskIndexMeta& meta() const { return meta_; }
  const PageLayout& layout() const { return layout_; }
  const PageReader& pages() const { return *reader_; }
  const std::vector<RecordId>& inverse() const { return inverse_; }

  void read_page(std::uint64_t page, std::byte* out) const { reader_->read_page(page, out); }
  DecodedRecord read_record(RecordId id) const;
  IoStats io_stats() const { return reader_->stats(); }

 private:
  DiskIndexMeta meta_;
  PageLayout layout_;
  std::vector<RecordId> inverse_;
  std::unique_ptr<PageReader> reader_;
};

// ---- layout metrics ------------------------------------------------------

/// OR(u) = |B(u) ∩ N(u)| / (n_p - 1); B(u) excludes u itself. Defined as 0
/// when n_p == 1 (the denominator would vanish and shuffling is moot).
double overlap_ratio_vertex(const PageLayout& layout, const GraphIndex& g, RecordId u);

/// Vertex-wise mean of OR(u).
double overlap_ratio_graph(const PageLayout& layout, const GraphIndex& g);

/// Co-located directed edge count: pairs (u, v) in E sharing a page.
std::uint64_t colocated_edges(const PageLayout& layout, const GraphIndex& g);

struct PageReadModel {
  double with_neighbor_reads;  // R_bar * H / (OR * n_p)
  double pq_optimized;         // H / (OR * n_p)
};

PageReadModel predicted_page_reads(double r_bar, double hops, double overlap,
                                   std::uint32_t n_p);

// ---- page shuffle --------------------------------------------------------

struct ShuffleResult {
  PageLayout layout;
  bool degenerate = false;  // n_p == 1: identity returned, shuffle ineffective
  std::string note;
  std::uint64_t colocated_identity = 0;
  std::uint64_t colocated_shuffled = 0;
  std::uint64_t peak_mem_bytes = 0;  // allocation estimate of shuffle structures
};

/// Locality-maximizing reassignment of records to pages: greedy seed-and-grow
/// packing (seed = unassigned vertex of maximal residual degree; grow by the
/// unassigned vertex with the most edges into the page, ties to the lowest
/// id), followed by `passes` rounds of pairwise-swap hill climbing that only
/// accepts strict gains in the co-located edge count. The result never has a
/// lower co-located edge count than the identity layout.
ShuffleResult shuffle_pages(const GraphIndex& g, std::uint32_t page_size,
                            std::uint32_t record_size, std::uint32_t passes,
                            std::uint64_t seed);

void save_layout_sidecar(const PageLayout& layout, const std::string& index_path);

}  // namespace octoann
