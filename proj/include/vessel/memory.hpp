#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace vessel {

class MemoryTracker;

// Node of the tracker's global LRU list. Anything the tracker may reclaim
// under pressure (resident volume blocks) derives from this.
class CacheSlot {
 public:
  virtual ~CacheSlot() = default;

  // Release the slot's memory. Returns false when the slot is pinned.
  virtual bool evict() = 0;

 private:
  friend class MemoryTracker;
  CacheSlot* prev_ = nullptr;
  CacheSlot* next_ = nullptr;
  bool linked_ = false;
};

// Accounts every buffer the pipeline allocates in proportion to the data
// size. The budget is soft for non-evictable buffers: reserve() first
// evicts cached blocks, then charges the request regardless.
class MemoryTracker {
 public:
  explicit MemoryTracker(std::size_t budget) : budget_(budget) {
    head_.prev_ = head_.next_ = &head_;
  }
  MemoryTracker(const MemoryTracker&) = delete;
  MemoryTracker& operator=(const MemoryTracker&) = delete;

  std::size_t budget() const { return budget_; }
  std::size_t current() const { return current_; }
  std::size_t peak() const { return peak_; }
  std::size_t largest_allocation() const { return largest_; }
  void reset_peak() { peak_ = current_; largest_ = 0; }

  void reserve(std::size_t bytes) {
    while (current_ + bytes > budget_ && evict_one()) {
    }
    current_ += bytes;
    peak_ = std::max(peak_, current_);
    largest_ = std::max(largest_, bytes);
  }

  void release(std::size_t bytes) {
    if (bytes > current_) throw std::logic_error("memory tracker underflow");
    current_ -= bytes;
  }

  // Mark a slot as most recently used, linking it if necessary.
  void touch(CacheSlot& slot) {
    if (head_.next_ == &slot) return;
    if (slot.linked_) unlink_raw(slot);
    slot.next_ = head_.next_;
    slot.prev_ = &head_;
    head_.next_->prev_ = &slot;
    head_.next_ = &slot;
    slot.linked_ = true;
  }

  void unlink(CacheSlot& slot) {
    if (slot.linked_) unlink_raw(slot);
  }

  // Evict the least recently used unpinned slot.
  bool evict_one() {
    for (CacheSlot* s = head_.prev_; s != &head_; s = s->prev_) {
      if (s->evict()) return true;
    }
    return false;
  }

 private:
  void unlink_raw(CacheSlot& slot) {
    slot.prev_->next_ = slot.next_;
    slot.next_->prev_ = slot.prev_;
    slot.prev_ = slot.next_ = nullptr;
    slot.linked_ = false;
  }

  std::size_t budget_;
  std::size_t current_ = 0;
  std::size_t peak_ = 0;
  std::size_t largest_ = 0;
  struct Sentinel final : CacheSlot {
    bool evict() override { return false; }
  } head_;
};

// std::vector whose capacity is charged against a MemoryTracker.
template <class T>
class TrackedVector {
 public:
  explicit TrackedVector(MemoryTracker& tracker) : tracker_(&tracker) {}
  TrackedVector(MemoryTracker& tracker, std::size_t n, const T& value = T{})
      : tracker_(&tracker) {
    tracker_->reserve(n * sizeof(T));
    data_.assign(n, value);
    charged_ = n * sizeof(T);
    sync();
  }
  TrackedVector(const TrackedVector&) = delete;
  TrackedVector& operator=(const TrackedVector&) = delete;
  TrackedVector(TrackedVector&& o) noexcept
      : tracker_(o.tracker_), data_(std::move(o.data_)), charged_(o.charged_) {
    o.charged_ = 0;
  }
  TrackedVector& operator=(TrackedVector&& o) noexcept {
    if (this != &o) {
      free();
      tracker_ = o.tracker_;
      data_ = std::move(o.data_);
      charged_ = o.charged_;
      o.charged_ = 0;
    }
    return *this;
  }
  ~TrackedVector() { free(); }

  void push_back(const T& v) {
    if (data_.size() == data_.capacity()) grow(std::max<std::size_t>(16, data_.capacity() * 2));
    data_.push_back(v);
  }
  void resize(std::size_t n, const T& v = T{}) {
    if (n > data_.capacity()) grow(n);
    data_.resize(n, v);
  }
  void assign(std::size_t n, const T& v) {
    if (n > data_.capacity()) grow(n);
    data_.assign(n, v);
  }
  void reserve(std::size_t n) {
    if (n > data_.capacity()) grow(n);
  }
  void clear() { data_.clear(); }
  void release_memory() { free(); }

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& back() { return data_.back(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }
  std::vector<T>& raw() { return data_; }

 private:
  void grow(std::size_t cap) {
    const std::size_t want = cap * sizeof(T);
    tracker_->reserve(want);
    data_.reserve(cap);
    tracker_->release(charged_);
    charged_ = want;
    sync();
  }
  void sync() {
    const std::size_t actual = data_.capacity() * sizeof(T);
    if (actual > charged_) {
      tracker_->reserve(actual - charged_);
      charged_ = actual;
    }
  }
  void free() {
    if (tracker_ && charged_) tracker_->release(charged_);
    charged_ = 0;
    std::vector<T>().swap(data_);
  }

  MemoryTracker* tracker_;
  std::vector<T> data_;
  std::size_t charged_ = 0;
};

// Scratch directory plus the shared memory budget. Every disk-backed
// structure is created through a Workspace.
class Workspace {
 public:
  Workspace(std::filesystem::path scratch_dir, std::size_t memory_budget,
            std::uint64_t disk_quota = 0)
      : dir_(std::move(scratch_dir)), memory_(memory_budget), disk_quota_(disk_quota) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto probe = dir_ / ".write_probe";
    {
      std::ofstream f(probe);
      if (!f) throw std::runtime_error("scratch directory is not writable: " + dir_.string());
    }
    std::filesystem::remove(probe, ec);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  MemoryTracker& memory() { return memory_; }
  const std::filesystem::path& dir() const { return dir_; }
  std::uint64_t disk_quota() const { return disk_quota_; }

  std::filesystem::path temp_path(std::string_view stem) {
    return dir_ / (std::string(stem) + "." + std::to_string(counter_++) + ".tmp");
  }

  // Throws if a file of `bytes` would exceed the configured quota.
  void check_quota(std::uint64_t bytes) const {
    if (disk_quota_ != 0 && bytes > disk_quota_) {
      throw std::runtime_error("output of " + std::to_string(bytes) +
                               " bytes exceeds disk quota of " + std::to_string(disk_quota_));
    }
  }

 private:
  std::filesystem::path dir_;
  MemoryTracker memory_;
  std::uint64_t disk_quota_;
  std::uint64_t counter_ = 0;
};

}  // namespace vessel
