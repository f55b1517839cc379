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

#include "octoann/io_backend.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <iostream>

namespace octoann {

namespace {

std::byte* aligned_alloc_pages(std::size_t alignment, std::size_t size) {
  void* p = nullptr;
  if (posix_memalign(&p, alignment, size) != 0) raise("aligned allocation failed");
  return static_cast<std::byte*>(p);
}

// Thread-local bounce buffer so callers may pass unaligned destinations even
// under O_DIRECT.
std::byte* bounce_buffer(std::size_t page_size) {
  thread_local std::byte* buf = nullptr;
  thread_local std::size_t cap = 0;
  if (cap < page_size) {
    std::free(buf);
    buf = aligned_alloc_pages(page_size, page_size);
    cap = page_size;
  }
  return buf;
}

}  // namespace

struct PageReader::AsyncPool {
  struct Request {
    IoBatch* batch;
    std::uint64_t page;
    std::uint32_t slot;
    std::byte* buf;
  };

  explicit AsyncPool(const PageReader& reader, unsigned threads) : reader_(reader) {
    for (unsigned i = 0; i < threads; ++i)
      workers_.emplace_back([this] { run(); });
  }

  ~AsyncPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  void push(Request req) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(req);
    }
    cv_.notify_one();
  }

  void run() {
    for (;;) {
      Request req;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        req = queue_.front();
        queue_.pop_front();
      }
      IoBatch::Completion c;
      c.page = req.page;
      c.slot = req.slot;
      c.data = req.buf;
      try {
        reader_.pread_page(req.page, req.buf);
      } catch (const Error&) {
        c.error = errno != 0 ? errno : EIO;
      }
      req.batch->complete(c);
    }
  }

  const PageReader& reader_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Request> queue_;
  bool stop_ = false;
  std::vector<std::thread> workers_;
};

PageReader::PageReader(const std::string& path, std::uint32_t page_size,
                       std::uint64_t data_offset, DirectIo mode, unsigned io_threads)
    : page_size_(page_size), data_offset_(data_offset), io_threads_(io_threads ? io_threads : 1) {
  require(page_size >= 4096 && (page_size & (page_size - 1)) == 0,
          "page size must be a power of two >= 4096");
  int flags = O_RDONLY;
#ifdef O_DIRECT
  if (mode == DirectIo::on) flags |= O_DIRECT;
#endif
  fd_ = ::open(path.c_str(), flags);
  if (fd_ < 0 && mode == DirectIo::on) {
    raise("cannot open " + path + " with direct I/O (" + std::strerror(errno) +
          "); pass --direct-io=off to fall back to buffered reads");
  }
  require(fd_ >= 0, "cannot open " + path + ": " + std::strerror(errno));
  direct_ = mode == DirectIo::on;
  if (!direct_) {
    std::cerr << "[octoann] warning: direct I/O disabled for " << path
              << "; reads go through the OS page cache and I/O-bound measurements"
                 " are not meaningful\n";
  }

  off_t end = ::lseek(fd_, 0, SEEK_END);
  require(end >= 0, "lseek failed on " + path);
  require(static_cast<std::uint64_t>(end) >= data_offset_, "file shorter than data offset");
  std::uint64_t payload = static_cast<std::uint64_t>(end) - data_offset_;
  require(payload % page_size_ == 0, "file length is not page-aligned: " + path);
  page_count_ = payload / page_size_;
}

PageReader::~PageReader() {
  pool_.reset();  // join workers before the fd goes away
  if (fd_ >= 0) ::close(fd_);
}

void PageReader::record_latency(std::uint64_t ns) const {
  read_ns_.fetch_add(ns, std::memory_order_relaxed);
  std::uint64_t us = ns / 1000;
  std::size_t bucket = 0;
  while (bucket < 15 && us > (1ull << bucket)) ++bucket;
  hist_[bucket].fetch_add(1, std::memory_order_relaxed);
}

void PageReader::pread_page(std::uint64_t page, std::byte* aligned_out) const {
  require(page < page_count_, "page id out of range");
  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t offset = data_offset_ + page * page_size_;
  std::size_t got = 0;
  while (got < page_size_) {
    ssize_t r = ::pread(fd_, aligned_out + got, page_size_ - got,
                        static_cast<off_t>(offset + got));
    require(r > 0, r == 0 ? "short read: unexpected end of file"
                          : std::string("pread failed: ") + std::strerror(errno));
    got += static_cast<std::size_t>(r);
  }
  auto t1 = std::chrono::steady_clock::now();
  pages_.fetch_add(1, std::memory_order_relaxed);
  bytes_.fetch_add(page_size_, std::memory_order_relaxed);
  record_latency(static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
}

void PageReader::read_page(std::uint64_t page, std::byte* out) const {
  if (direct_ && (reinterpret_cast<std::uintptr_t>(out) % page_size_) != 0) {
    std::byte* buf = bounce_buffer(page_size_);
    pread_page(page, buf);
    std::memcpy(out, buf, page_size_);
  } else {
    pread_page(page, out);
  }
}

IoStats PageReader::stats() const {
  IoStats s;
  s.pages = pages_.load(std::memory_order_relaxed);
  s.bytes = bytes_.load(std::memory_order_relaxed);
  s.read_ns = read_ns_.load(std::memory_order_relaxed);
  for (std::size_t i = 0; i < s.latency_hist.size(); ++i)
    s.latency_hist[i] = hist_[i].load(std::memory_order_relaxed);
  return s;
}

PageReader::AsyncPool& PageReader::pool() const {
  std::call_once(pool_once_, [this] { pool_ = std::make_unique<AsyncPool>(*this, io_threads_); });
  return *pool_;
}

IoBatch::IoBatch(const PageReader& reader, std::uint32_t max_depth)
    : reader_(reader), depth_(max_depth) {
  require(depth_ >= 1, "batch depth must be >= 1");
  slab_ = aligned_alloc_pages(reader.page_size(), static_cast<std::size_t>(depth_) * reader.page_size());
  free_slots_.reserve(depth_);
  for (std::uint32_t i = 0; i < depth_; ++i) free_slots_.push_back(depth_ - 1 - i);
}

IoBatch::~IoBatch() {
  drain();
  std::free(slab_);
}

void IoBatch::submit(std::uint64_t page) {
  std::uint32_t slot;
  {
    std::lock_guard lock(mu_);
    require(!free_slots_.empty(), "batch depth exceeded");
    slot = free_slots_.back();
    free_slots_.pop_back();
  }
  in_flight_.fetch_add(1, std::memory_order_acq_rel);
  reader_.pool().push({this, page, slot, slab_ + static_cast<std::size_t>(slot) * reader_.page_size()});
}

void IoBatch::complete(Completion c) {
  {
    std::lock_guard lock(mu_);
    done_.push_back(c);
  }
  cv_.notify_all();
}

std::vector<IoBatch::Completion> IoBatch::poll(bool block) {
  std::unique_lock lock(mu_);
  if (block && done_.empty()) {
    require(in_flight_.load(std::memory_order_acquire) > 0,
            "blocking poll with no requests in flight");
    cv_.wait(lock, [this] { return !done_.empty(); });
  }
  std::vector<Completion> out;
  out.swap(done_);
  in_flight_.fetch_sub(out.size(), std::memory_order_acq_rel);
  return out;
}

void IoBatch::release(std::uint32_t slot) {
  std::lock_guard lock(mu_);
  free_slots_.push_back(slot);
}

void IoBatch::drain() {
  while (in_flight_.load(std::memory_order_acquire) > 0) {
    auto done = poll(true);
    for (const auto& c : done) release(c.slot);
  }
}

}  // namespace octoann
