#pragma once

// Active surfaces: strictly increasing sequences of linear voxel positions
// kept in a scratch file and streamed front to back.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "vessel/memory.hpp"
#include "vessel/volume.hpp"

namespace vessel {

class ActiveSurface {
 public:
  ActiveSurface() = default;
  ActiveSurface(std::filesystem::path path, std::uint64_t count)
      : file_(std::make_shared<Owned>(std::move(path))), count_(count) {}

  std::uint64_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const std::filesystem::path& path() const { return file_->path; }
  bool valid() const { return static_cast<bool>(file_); }

 private:
  struct Owned {
    std::filesystem::path path;
    explicit Owned(std::filesystem::path p) : path(std::move(p)) {}
    Owned(const Owned&) = delete;
    Owned& operator=(const Owned&) = delete;
    ~Owned() {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
  };
  std::shared_ptr<Owned> file_;
  std::uint64_t count_ = 0;
};

inline constexpr std::size_t kSurfaceIoChunk = 4096;

class SurfaceWriter {
 public:
  explicit SurfaceWriter(Workspace& ws)
      : path_(ws.temp_path("surf")),
        file_(path_, O_RDWR | O_CREAT | O_TRUNC),
        buf_(ws.memory()) {
    buf_.reserve(kSurfaceIoChunk);
  }

  // Positions must arrive strictly increasing.
  void push(std::uint64_t pos) {
    if (count_ > 0 && pos <= last_) throw std::logic_error("active surface positions must increase");
    last_ = pos;
    ++count_;
    buf_.push_back(pos);
    if (buf_.size() == kSurfaceIoChunk) spill();
  }

  ActiveSurface finish() {
    spill();
    buf_.release_memory();
    return ActiveSurface(path_, count_);
  }

 private:
  void spill() {
    if (buf_.empty()) return;
    file_.write_at(buf_.data(), buf_.size() * sizeof(std::uint64_t), written_ * sizeof(std::uint64_t));
    written_ += buf_.size();
    buf_.clear();
  }

  std::filesystem::path path_;
  detail::FileHandle file_;
  TrackedVector<std::uint64_t> buf_;
  std::uint64_t count_ = 0;
  std::uint64_t written_ = 0;
  std::uint64_t last_ = 0;
};

class SurfaceReader {
 public:
  SurfaceReader(Workspace& ws, const ActiveSurface& s)
      : total_(s.size()), buf_(ws.memory()) {
    if (total_ > 0) file_ = std::make_unique<detail::FileHandle>(s.path(), O_RDONLY);
    buf_.reserve(kSurfaceIoChunk);
  }

  bool next(std::uint64_t& pos) {
    if (cursor_ == buf_.size()) {
      if (consumed_ == total_) return false;
      const std::uint64_t n = std::min<std::uint64_t>(kSurfaceIoChunk, total_ - consumed_);
      buf_.resize(static_cast<std::size_t>(n));
      file_->read_at(buf_.data(), n * sizeof(std::uint64_t), consumed_ * sizeof(std::uint64_t));
      consumed_ += n;
      cursor_ = 0;
    }
    pos = buf_[cursor_++];
    return true;
  }

 private:
  std::uint64_t total_;
  std::unique_ptr<detail::FileHandle> file_;
  TrackedVector<std::uint64_t> buf_;
  std::size_t cursor_ = 0;
  std::uint64_t consumed_ = 0;
};

inline ActiveSurface surface_from(Workspace& ws, std::span<const std::uint64_t> sorted_unique) {
  SurfaceWriter w(ws);
  for (auto p : sorted_unique) w.push(p);
  return w.finish();
}

inline std::vector<std::uint64_t> read_all(Workspace& ws, const ActiveSurface& s) {
  std::vector<std::uint64_t> out;
  SurfaceReader r(ws, s);
  std::uint64_t p;
  while (r.next(p)) out.push_back(p);
  return out;
}

// Sorted, deduplicated union of `prev` and `additions`, minus every
// position in `retired` (callers pass positions they have consumed).
inline ActiveSurface surface_merge(Workspace& ws, const ActiveSurface& prev,
                                   std::vector<std::uint64_t> additions,
                                   std::vector<std::uint64_t> retired = {}) {
  std::sort(additions.begin(), additions.end());
  additions.erase(std::unique(additions.begin(), additions.end()), additions.end());
  std::sort(retired.begin(), retired.end());
  SurfaceReader r(ws, prev);
  SurfaceWriter w(ws);
  std::size_t ai = 0, ri = 0;
  bool have = false;
  std::uint64_t cur = 0;
  auto emit = [&](std::uint64_t p) {
    while (ri < retired.size() && retired[ri] < p) ++ri;
    if (ri < retired.size() && retired[ri] == p) return;
    w.push(p);
  };
  std::uint64_t last = 0;
  bool any = false;
  auto take = [&](std::uint64_t p) {
    if (any && p == last) return;
    any = true;
    last = p;
    emit(p);
  };
  have = r.next(cur);
  while (have || ai < additions.size()) {
    if (have && (ai == additions.size() || cur <= additions[ai])) {
      take(cur);
      have = r.next(cur);
    } else {
      take(additions[ai++]);
    }
  }
  return w.finish();
}

// Collects positions slice-wise during a sweep and writes them in order.
// Everything below the flush threshold must be final when flushed.
class SurfaceBuilder {
 public:
  explicit SurfaceBuilder(Workspace& ws) : writer_(ws), pending_(ws.memory()) {}

  void add(std::uint64_t pos) {
    if (pos < floor_) throw std::logic_error("surface addition below flushed region");
    pending_.push_back(pos);
  }

  // Sort, dedup and write pending positions < threshold that pass `keep`.
  template <class Keep>
  void flush_below(std::uint64_t threshold, Keep&& keep) {
    if (threshold <= floor_) return;
    auto& v = pending_.raw();
    auto mid = std::partition(v.begin(), v.end(), [&](std::uint64_t p) { return p < threshold; });
    std::sort(v.begin(), mid);
    auto uend = std::unique(v.begin(), mid);
    for (auto it = v.begin(); it != uend; ++it) {
      if (keep(*it)) writer_.push(*it);
    }
    v.erase(v.begin(), mid);
    floor_ = threshold;
  }

  template <class Keep>
  ActiveSurface finish(Keep&& keep) {
    flush_below(std::numeric_limits<std::uint64_t>::max(), keep);
    return writer_.finish();
  }

 private:
  SurfaceWriter writer_;
  TrackedVector<std::uint64_t> pending_;
  std::uint64_t floor_ = 0;
};

}  // namespace vessel
