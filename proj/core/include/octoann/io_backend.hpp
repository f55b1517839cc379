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

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "octoann/types.hpp"

namespace octoann {

enum class DirectIo { on, off };

/// Snapshot of reader counters. Latency buckets are powers of two
/// microseconds, 1 us .. 16 ms, plus one overflow bucket.
struct IoStats {
  std::uint64_t pages = 0;
  std::uint64_t bytes = 0;
  std::uint64_t read_ns = 0;
  std::array<std::uint64_t, 16> latency_hist{};
};

class IoBatch;

/// Page-granular reader over a page-aligned file: page i lives at byte
/// offset data_offset + i * page_size. All reads are exactly one page and
/// bypass the OS page cache when direct I/O is on. Safe to share across
/// query threads; counters update atomically.
class PageReader {
 public:
  PageReader(const std::string& path, std::uint32_t page_size, std::uint64_t data_offset,
             DirectIo mode, unsigned io_threads = 8);
  ~PageReader();
  PageReader(const PageReader&) = delete;
  PageReader& operator=(const PageReader&) = delete;

  std::uint32_t page_size() const { return page_size_; }
  std::uint64_t page_count() const { return page_count_; }
  bool direct_io() const { return direct_; }

  /// Synchronous read of one page into `out` (page_size bytes, any alignment).
  void read_page(std::uint64_t page, std::byte* out) const;

  IoStats stats() const;

 private:
  friend class IoBatch;
  struct AsyncPool;

  void pread_page(std::uint64_t page, std::byte* aligned_out) const;
  void record_latency(std::uint64_t ns) const;
  AsyncPool& pool() const;

  int fd_ = -1;
  bool direct_ = false;
  std::uint32_t page_size_ = 0;
  std::uint64_t data_offset_ = 0;
  std::uint64_t page_count_ = 0;
  unsigned io_threads_ = 8;

  mutable std::atomic<std::uint64_t> pages_{0};
  mutable std::atomic<std::uint64_t> bytes_{0};
  mutable std::atomic<std::uint64_t> read_ns_{0};
  mutable std::array<std::atomic<std::uint64_t>, 16> hist_{};

  mutable std::once_flag pool_once_;
  mutable std::unique_ptr<AsyncPool> pool_;
};

/// Bounded-depth asynchronous read batch. Submit never blocks (it throws at
/// capacity); poll returns zero or more completions, each delivered exactly
/// once, with no ordering guarantee across pages. One batch per query.
class IoBatch {
 public:
  struct Completion {
    std::uint64_t page = 0;
    std::uint32_t slot = 0;
    const std::byte* data = nullptr;
    int error = 0;  // errno of the owning request, 0 on success
  };

  IoBatch(const PageReader& reader, std::uint32_t max_depth);
  ~IoBatch();
  IoBatch(const IoBatch&) = delete;
  IoBatch& operator=(const IoBatch&) = delete;

  std::uint32_t max_depth() const { return depth_; }
  std::size_t in_flight() const { return in_flight_.load(std::memory_order_acquire); }

  void submit(std::uint64_t page);
  std::vector<Completion> poll(bool block);

  /// Recycle a completion's buffer slot for reuse by a later submit.
  void release(std::uint32_t slot);

  /// Wait until every submitted request has completed and been polled.
  void drain();

 private:
  friend struct PageReader::AsyncPool;
  void complete(Completion c);

  const PageReader& reader_;
  std::uint32_t depth_;
  std::byte* slab_ = nullptr;  // depth * page_size, page-aligned
  std::vector<std::uint32_t> free_slots_;
  std::atomic<std::size_t> in_flight_{0};

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Completion> done_;
};

}  // namespace octoann
