#pragma once

// Disk-backed, 32^3-blocked voxel volumes.
//
// A volume file is the native VGV1 format: one ASCII header line
//
//   VGV1 <dx> <dy> <dz> <sx> <sy> <sz> <kind>\n
//
// followed by the packed blocks in lexicographic block order (x fastest).
// Binary volumes pack 2 bits per voxel (2048 bytes per block, voxel i of a
// block in bits [2i, 2i+2) of byte i/4); label volumes store one
// little-endian uint32 per voxel. Partial blocks at the volume border are
// stored full size.
//
// Blocks are paged in on demand and held in a cache whose memory is charged
// to the workspace's MemoryTracker; the tracker evicts least recently used
// blocks (writing dirty ones back) when the budget would be exceeded.

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "vessel/geometry.hpp"
#include "vessel/memory.hpp"

namespace vessel {

static_assert(std::endian::native == std::endian::little, "volume files are little-endian");

inline constexpr std::int64_t kBlockEdge = 32;
inline constexpr std::int64_t kBlockVoxels = kBlockEdge * kBlockEdge * kBlockEdge;
inline constexpr std::uint32_t kUnassigned = 0xFFFFFFFFu;

enum class VoxelState : std::uint8_t {
  background = 0,
  foreground = 1,
  fixed_foreground = 2,
  erased = 3,  // marked for deletion inside a thinning subiteration
};

inline bool is_set(VoxelState s) { return s != VoxelState::background; }

enum class VoxelKind { binary2bit, label };

inline const char* to_string(VoxelKind k) { return k == VoxelKind::binary2bit ? "binary2bit" : "label"; }

class VolumeFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VolumeHeader {
  Dims dims;
  Spacing spacing;
  std::int64_t block_edge = kBlockEdge;
  VoxelKind kind = VoxelKind::binary2bit;

  std::int64_t blocks_along(int axis) const { return (dims[axis] + kBlockEdge - 1) / kBlockEdge; }
  Dims block_grid() const { return {blocks_along(0), blocks_along(1), blocks_along(2)}; }
  std::int64_t block_count() const { return block_grid().voxel_count(); }
  std::size_t block_bytes() const {
    return kind == VoxelKind::binary2bit ? kBlockVoxels / 4 : kBlockVoxels * 4;
  }

  std::string to_line() const {
    std::string s = "VGV1 " + std::to_string(dims.x) + " " + std::to_string(dims.y) + " " +
                    std::to_string(dims.z);
    for (double v : {spacing.x, spacing.y, spacing.z}) {
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof buf, v);
      s += " ";
      s.append(buf, r.ptr);
    }
    s += " ";
    s += to_string(kind);
    s += "\n";
    return s;
  }

  static VolumeHeader parse(const std::string& line) {
    std::istringstream in(line);
    std::string magic, kind;
    VolumeHeader h;
    in >> magic >> h.dims.x >> h.dims.y >> h.dims.z >> h.spacing.x >> h.spacing.y >> h.spacing.z >>
        kind;
    if (!in || magic != "VGV1") throw VolumeFormatError("malformed VGV1 header: " + line);
    if (kind == "binary2bit") {
      h.kind = VoxelKind::binary2bit;
    } else if (kind == "label") {
      h.kind = VoxelKind::label;
    } else {
      throw VolumeFormatError("unknown voxel kind '" + kind + "'");
    }
    h.validate();
    return h;
  }

  void validate() const {
    if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0) throw std::invalid_argument("dims must be positive");
    if (!spacing.valid()) throw std::invalid_argument("spacing must be positive");
    // Keep linear voxel positions and file offsets well inside int64.
    constexpr std::int64_t kMaxAxis = std::int64_t{1} << 20;
    if (dims.x > kMaxAxis || dims.y > kMaxAxis || dims.z > kMaxAxis) {
      throw std::invalid_argument("dims overflow addressable space");
    }
    const auto g = block_grid();
    const __int128 bytes = static_cast<__int128>(g.x) * g.y * g.z * static_cast<__int128>(block_bytes());
    if (bytes > (static_cast<__int128>(1) << 60)) throw std::invalid_argument("dims overflow addressable space");
  }
};

struct BinaryTraits {
  using value_type = VoxelState;
  static constexpr VoxelKind kind = VoxelKind::binary2bit;
  static constexpr value_type fill() { return VoxelState::background; }
  static value_type get(const std::byte* blk, std::size_t i) {
    return static_cast<VoxelState>((std::to_integer<unsigned>(blk[i >> 2]) >> ((i & 3) * 2)) & 3u);
  }
  static void set(std::byte* blk, std::size_t i, value_type v) {
    const unsigned shift = (i & 3) * 2;
    const unsigned b = std::to_integer<unsigned>(blk[i >> 2]);
    blk[i >> 2] = std::byte(static_cast<unsigned char>((b & ~(3u << shift)) |
                                                       (static_cast<unsigned>(v) << shift)));
  }
  static void fill_block(std::byte* blk) { std::memset(blk, 0, kBlockVoxels / 4); }
};

struct LabelTraits {
  using value_type = std::uint32_t;
  static constexpr VoxelKind kind = VoxelKind::label;
  static constexpr value_type fill() { return kUnassigned; }
  static value_type get(const std::byte* blk, std::size_t i) {
    value_type v;
    std::memcpy(&v, blk + 4 * i, 4);
    return v;
  }
  static void set(std::byte* blk, std::size_t i, value_type v) { std::memcpy(blk + 4 * i, &v, 4); }
  static void fill_block(std::byte* blk) { std::memset(blk, 0xFF, kBlockVoxels * 4); }
};

namespace detail {

class FileHandle {
 public:
  FileHandle() = default;
  FileHandle(const std::filesystem::path& p, int flags, mode_t mode = 0644)
      : fd_(::open(p.c_str(), flags | O_CLOEXEC, mode)) {
    if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "open " + p.string());
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  ~FileHandle() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const { return fd_; }

  void read_at(void* dst, std::size_t n, std::uint64_t off) const {
    auto* p = static_cast<char*>(dst);
    while (n > 0) {
      const ssize_t r = ::pread(fd_, p, n, static_cast<off_t>(off));
      if (r < 0) throw std::system_error(errno, std::generic_category(), "pread");
      if (r == 0) {
        std::memset(p, 0, n);  // sparse tail
        return;
      }
      p += r;
      off += static_cast<std::uint64_t>(r);
      n -= static_cast<std::size_t>(r);
    }
  }
  void write_at(const void* src, std::size_t n, std::uint64_t off) const {
    const auto* p = static_cast<const char*>(src);
    while (n > 0) {
      const ssize_t r = ::pwrite(fd_, p, n, static_cast<off_t>(off));
      if (r < 0) throw std::system_error(errno, std::generic_category(), "pwrite");
      p += r;
      off += static_cast<std::uint64_t>(r);
      n -= static_cast<std::size_t>(r);
    }
  }
  void truncate(std::uint64_t size) const {
    if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) {
      throw std::system_error(errno, std::generic_category(), "ftruncate");
    }
  }
  std::uint64_t size() const {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) throw std::system_error(errno, std::generic_category(), "fstat");
    return static_cast<std::uint64_t>(st.st_size);
  }

 private:
  int fd_ = -1;
};

template <class Traits>
struct BlockStore;

template <class Traits>
struct Block final : CacheSlot {
  BlockStore<Traits>* owner = nullptr;
  std::int64_t index = 0;
  std::unique_ptr<std::uint64_t[]> words;
  bool dirty = false;

  std::byte* bytes() { return reinterpret_cast<std::byte*>(words.get()); }
  bool evict() override { return owner->evict(index); }
};

template <class Traits>
struct BlockStore {
  VolumeHeader header;
  Dims grid;
  std::filesystem::path path;
  FileHandle file;
  std::uint64_t data_offset = 0;
  bool temporary = false;
  MemoryTracker* tracker = nullptr;
  std::vector<std::shared_ptr<Block<Traits>>> resident;
  std::vector<bool> materialized;  // false: block was never written, reads as fill
  std::uint64_t loads = 0;

  BlockStore(const VolumeHeader& h, std::filesystem::path p, int flags, MemoryTracker& t)
      : header(h), grid(h.block_grid()), path(std::move(p)), file(path, flags), tracker(&t) {
    resident.resize(static_cast<std::size_t>(header.block_count()));
  }
  BlockStore(const BlockStore&) = delete;
  BlockStore& operator=(const BlockStore&) = delete;

  ~BlockStore() {
    try {
      if (!temporary) flush();
    } catch (...) {
    }
    for (auto& b : resident) {
      if (b) {
        tracker->unlink(*b);
        tracker->release(header.block_bytes());
        b.reset();
      }
    }
    if (temporary) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
  }

  std::uint64_t offset_of(std::int64_t bi) const {
    return data_offset + static_cast<std::uint64_t>(bi) * header.block_bytes();
  }

  const std::shared_ptr<Block<Traits>>& fetch(std::int64_t bi) {
    auto& slot = resident[static_cast<std::size_t>(bi)];
    if (slot) {
      tracker->touch(*slot);
      return slot;
    }
    const std::size_t nbytes = header.block_bytes();
    tracker->reserve(nbytes);
    auto b = std::make_shared<Block<Traits>>();
    b->owner = this;
    b->index = bi;
    b->words = std::make_unique<std::uint64_t[]>(nbytes / 8);
    if (materialized[static_cast<std::size_t>(bi)]) {
      file.read_at(b->bytes(), nbytes, offset_of(bi));
    } else {
      Traits::fill_block(b->bytes());
    }
    ++loads;
    slot = std::move(b);
    tracker->touch(*slot);
    return slot;
  }

  bool evict(std::int64_t bi) {
    auto& slot = resident[static_cast<std::size_t>(bi)];
    if (!slot || slot.use_count() > 1) return false;
    write_back(*slot);
    tracker->unlink(*slot);
    slot.reset();
    tracker->release(header.block_bytes());
    return true;
  }

  void write_back(Block<Traits>& b) {
    if (!b.dirty) return;
    file.write_at(b.bytes(), header.block_bytes(), offset_of(b.index));
    materialized[static_cast<std::size_t>(b.index)] = true;
    b.dirty = false;
  }

  void flush() {
    for (auto& b : resident) {
      if (b) write_back(*b);
    }
    std::unique_ptr<std::uint64_t[]> fillbuf;
    for (std::size_t i = 0; i < materialized.size(); ++i) {
      if (materialized[i]) continue;
      if (!fillbuf) {
        fillbuf = std::make_unique<std::uint64_t[]>(header.block_bytes() / 8);
        Traits::fill_block(reinterpret_cast<std::byte*>(fillbuf.get()));
      }
      file.write_at(fillbuf.get(), header.block_bytes(), offset_of(static_cast<std::int64_t>(i)));
      materialized[i] = true;
    }
  }
};

}  // namespace detail

template <class Traits>
class BlockedVolume {
 public:
  using value_type = typename Traits::value_type;
  using Store = detail::BlockStore<Traits>;

  // Random access with a one-block memo. Holding an accessor pins its
  // current block against eviction.
  class Accessor {
   public:
    explicit Accessor(Store* s) : store_(s) {}

    value_type get(std::int64_t x, std::int64_t y, std::int64_t z) {
      const Dims& d = store_->header.dims;
      if (x < 0 || y < 0 || z < 0 || x >= d.x || y >= d.y || z >= d.z) return Traits::fill();
      select(x, y, z);
      return Traits::get(cur_->bytes(), local(x, y, z));
    }
    value_type get(const Index3& p) { return get(p.x, p.y, p.z); }

    void set(std::int64_t x, std::int64_t y, std::int64_t z, value_type v) {
      const Dims& d = store_->header.dims;
      if (x < 0 || y < 0 || z < 0 || x >= d.x || y >= d.y || z >= d.z) {
        throw std::out_of_range("voxel write outside volume");
      }
      select(x, y, z);
      cur_->dirty = true;
      Traits::set(cur_->bytes(), local(x, y, z), v);
    }
    void set(const Index3& p, value_type v) { set(p.x, p.y, p.z, v); }

    void release() {
      cur_.reset();
      cur_index_ = -1;
    }

   private:
    static std::size_t local(std::int64_t x, std::int64_t y, std::int64_t z) {
      return static_cast<std::size_t>((x & 31) + 32 * ((y & 31) + 32 * (z & 31)));
    }
    void select(std::int64_t x, std::int64_t y, std::int64_t z) {
      const Dims& g = store_->grid;
      const std::int64_t bi = (x >> 5) + g.x * ((y >> 5) + g.y * (z >> 5));
      if (bi != cur_index_) {
        cur_.reset();
        cur_ = store_->fetch(bi);
        cur_index_ = bi;
      } else {
        store_->tracker->touch(*cur_);
      }
    }

    Store* store_;
    std::shared_ptr<detail::Block<Traits>> cur_;
    std::int64_t cur_index_ = -1;
  };

  // Temporary volume in the workspace scratch directory, removed on destruction.
  static BlockedVolume create(Workspace& ws, Dims dims, Spacing spacing) {
    auto v = create_file(ws, ws.temp_path(Traits::kind == VoxelKind::binary2bit ? "bin" : "lbl"),
                         dims, spacing);
    v.store_->temporary = true;
    return v;
  }

  static BlockedVolume create_file(Workspace& ws, const std::filesystem::path& path, Dims dims,
                                   Spacing spacing) {
    VolumeHeader h{dims, spacing, kBlockEdge, Traits::kind};
    h.validate();
    const std::string line = h.to_line();
    const std::uint64_t total =
        line.size() + static_cast<std::uint64_t>(h.block_count()) * h.block_bytes();
    ws.check_quota(total);
    auto store = std::make_unique<Store>(h, path, O_RDWR | O_CREAT | O_TRUNC, ws.memory());
    store->data_offset = line.size();
    store->file.write_at(line.data(), line.size(), 0);
    store->file.truncate(total);
    // Zero bytes decode as BACKGROUND, so sparse binary files are valid as is.
    store->materialized.assign(store->resident.size(), Traits::kind == VoxelKind::binary2bit);
    return BlockedVolume(std::move(store));
  }

  static BlockedVolume open(Workspace& ws, const std::filesystem::path& path) {
    detail::FileHandle probe(path, O_RDONLY);
    char buf[256] = {};
    probe.read_at(buf, sizeof buf - 1, 0);
    const char* nl = static_cast<const char*>(std::memchr(buf, '\n', sizeof buf - 1));
    if (!nl) throw VolumeFormatError("missing VGV1 header line in " + path.string());
    const std::string line(static_cast<const char*>(buf), nl + 1);
    VolumeHeader h = VolumeHeader::parse(line);
    if (h.kind != Traits::kind) {
      throw VolumeFormatError(path.string() + ": expected " + to_string(Traits::kind) + " volume, got " +
                              to_string(h.kind));
    }
    const std::uint64_t total =
        line.size() + static_cast<std::uint64_t>(h.block_count()) * h.block_bytes();
    if (probe.size() < total) throw VolumeFormatError(path.string() + ": truncated block data");
    auto store = std::make_unique<Store>(h, path, O_RDWR, ws.memory());
    store->data_offset = line.size();
    store->materialized.assign(store->resident.size(), true);
    return BlockedVolume(std::move(store));
  }

  BlockedVolume(BlockedVolume&&) noexcept = default;
  BlockedVolume& operator=(BlockedVolume&&) noexcept = default;

  const VolumeHeader& header() const { return store_->header; }
  const Dims& dims() const { return store_->header.dims; }
  const Spacing& spacing() const { return store_->header.spacing; }
  const std::filesystem::path& path() const { return store_->path; }
  std::int64_t block_count() const { return store_->header.block_count(); }
  std::uint64_t block_loads() const { return store_->loads; }
  void reset_block_loads() { store_->loads = 0; }
  MemoryTracker& tracker() const { return *store_->tracker; }

  Accessor accessor() const { return Accessor(store_.get()); }

  value_type get(const Index3& p) const {
    Accessor a(store_.get());
    return a.get(p);
  }
  void set(const Index3& p, value_type v) {
    Accessor a(store_.get());
    a.set(p, v);
  }

  // Decode one z-slice (x fastest) into `out`, which must hold dims.x*dims.y values.
  void read_slice(std::int64_t z, std::span<value_type> out) const {
    const Dims& d = dims();
    if (out.size() != static_cast<std::size_t>(d.plane())) throw std::invalid_argument("slice size");
    if (z < 0 || z >= d.z) {
      std::fill(out.begin(), out.end(), Traits::fill());
      return;
    }
    const Dims& g = store_->grid;
    const std::int64_t bz = z >> 5, lz = z & 31;
    for (std::int64_t by = 0; by < g.y; ++by) {
      for (std::int64_t bx = 0; bx < g.x; ++bx) {
        const std::int64_t bi = bx + g.x * (by + g.y * bz);
        std::shared_ptr<detail::Block<Traits>> b = store_->fetch(bi);
        const std::byte* bytes = b->bytes();
        const std::int64_t y1 = std::min<std::int64_t>(32, d.y - by * 32);
        const std::int64_t x1 = std::min<std::int64_t>(32, d.x - bx * 32);
        for (std::int64_t ly = 0; ly < y1; ++ly) {
          value_type* row = out.data() + (by * 32 + ly) * d.x + bx * 32;
          const std::size_t base = static_cast<std::size_t>(32 * (ly + 32 * lz));
          for (std::int64_t lx = 0; lx < x1; ++lx) row[lx] = Traits::get(bytes, base + lx);
        }
      }
    }
  }

  void write_slice(std::int64_t z, std::span<const value_type> in) {
    const Dims& d = dims();
    if (in.size() != static_cast<std::size_t>(d.plane()) || z < 0 || z >= d.z) {
      throw std::invalid_argument("write_slice out of range");
    }
    const Dims& g = store_->grid;
    const std::int64_t bz = z >> 5, lz = z & 31;
    for (std::int64_t by = 0; by < g.y; ++by) {
      for (std::int64_t bx = 0; bx < g.x; ++bx) {
        const std::int64_t bi = bx + g.x * (by + g.y * bz);
        const std::int64_t y1 = std::min<std::int64_t>(32, d.y - by * 32);
        const std::int64_t x1 = std::min<std::int64_t>(32, d.x - bx * 32);
        // Leave never-written blocks untouched when this slice carries only fill.
        if (!store_->resident[static_cast<std::size_t>(bi)] &&
            !store_->materialized[static_cast<std::size_t>(bi)]) {
          bool all_fill = true;
          for (std::int64_t ly = 0; ly < y1 && all_fill; ++ly) {
            const value_type* row = in.data() + (by * 32 + ly) * d.x + bx * 32;
            for (std::int64_t lx = 0; lx < x1; ++lx) {
              if (row[lx] != Traits::fill()) {
                all_fill = false;
                break;
              }
            }
          }
          if (all_fill) continue;
        }
        std::shared_ptr<detail::Block<Traits>> b = store_->fetch(bi);
        std::byte* bytes = b->bytes();
        b->dirty = true;
        for (std::int64_t ly = 0; ly < y1; ++ly) {
          const value_type* row = in.data() + (by * 32 + ly) * d.x + bx * 32;
          const std::size_t base = static_cast<std::size_t>(32 * (ly + 32 * lz));
          for (std::int64_t lx = 0; lx < x1; ++lx) Traits::set(bytes, base + lx, row[lx]);
        }
      }
    }
  }

  // Write dirty blocks back and materialize never-written blocks on disk.
  void flush() { store_->flush(); }

  // Keep the backing file after destruction.
  void persist() { store_->temporary = false; }

 private:
  explicit BlockedVolume(std::unique_ptr<Store> s) : store_(std::move(s)) {}
  std::unique_ptr<Store> store_;
};

using BinaryVolume = BlockedVolume<BinaryTraits>;
using EdgeIdVolume = BlockedVolume<LabelTraits>;

// A volume file at `path`, or a temporary volume when `path` is empty.
template <class Traits>
BlockedVolume<Traits> make_volume(Workspace& ws, const std::filesystem::path& path, Dims dims, Spacing spacing) {
  return path.empty() ? BlockedVolume<Traits>::create(ws, dims, spacing)
                      : BlockedVolume<Traits>::create_file(ws, path, dims, spacing);
}

inline BinaryVolume make_binary(Workspace& ws, const std::filesystem::path& path, Dims dims, Spacing spacing) {
  return make_volume<BinaryTraits>(ws, path, dims, spacing);
}

// Decoded z-slices z-radius..z+radius around a moving center, for
// neighborhood scans in a single sweep. Out-of-range slices read as fill.
template <class Traits>
class SliceWindow {
 public:
  using value_type = typename Traits::value_type;

  SliceWindow(const BlockedVolume<Traits>& vol, int radius)
      : vol_(&vol), dims_(vol.dims()), radius_(radius) {
    for (int i = 0; i < 2 * radius + 1; ++i) {
      slices_.emplace_back(vol.tracker(), static_cast<std::size_t>(dims_.plane()), Traits::fill());
      loaded_.push_back(std::numeric_limits<std::int64_t>::min());
    }
  }

  // Make slices center-radius..center+radius available.
  void center_on(std::int64_t center) {
    for (std::int64_t z = center - radius_; z <= center + radius_; ++z) {
      const std::size_t slot = slot_of(z);
      if (loaded_[slot] == z) continue;
      vol_->read_slice(z, std::span<value_type>(slices_[slot].data(), slices_[slot].size()));
      loaded_[slot] = z;
    }
  }

  value_type at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    if (x < 0 || y < 0 || x >= dims_.x || y >= dims_.y || z < 0 || z >= dims_.z) return Traits::fill();
    return slices_[slot_of(z)][static_cast<std::size_t>(x + dims_.x * y)];
  }

  std::span<const value_type> slice(std::int64_t z) const {
    const auto& s = slices_[slot_of(z)];
    return {s.data(), s.size()};
  }

 private:
  std::size_t slot_of(std::int64_t z) const {
    const std::int64_t n = 2 * radius_ + 1;
    return static_cast<std::size_t>(((z % n) + n) % n);
  }

  const BlockedVolume<Traits>* vol_;
  Dims dims_;
  int radius_;
  std::vector<TrackedVector<value_type>> slices_;
  std::vector<std::int64_t> loaded_;
};

enum class Axis { x = 0, y = 1, z = 2 };

// Visit every voxel slab perpendicular to `axis` in ascending order.
// `fn(index, slab, width, height)` receives a row-major slab whose fast
// axis is the lower-numbered remaining axis.
template <class Traits, class Fn>
void stream_slabs(const BlockedVolume<Traits>& vol, Axis axis, Fn&& fn) {
  using value_type = typename Traits::value_type;
  const Dims d = vol.dims();
  const int a = static_cast<int>(axis);
  const int u = a == 0 ? 1 : 0;
  const int v = a == 2 ? 1 : 2;
  const std::int64_t w = d[u], h = d[v];
  TrackedVector<value_type> slab(vol.tracker(), static_cast<std::size_t>(w * h), Traits::fill());
  if (axis == Axis::z) {
    for (std::int64_t z = 0; z < d.z; ++z) {
      vol.read_slice(z, std::span<value_type>(slab.data(), slab.size()));
      fn(z, std::span<const value_type>(slab.data(), slab.size()), w, h);
    }
    return;
  }
  auto acc = vol.accessor();
  for (std::int64_t i = 0; i < d[a]; ++i) {
    for (std::int64_t j = 0; j < h; ++j) {
      for (std::int64_t k = 0; k < w; ++k) {
        Index3 p;
        (a == 0 ? p.x : a == 1 ? p.y : p.z) = i;
        (u == 0 ? p.x : p.y) = k;
        (v == 1 ? p.y : p.z) = j;
        slab[static_cast<std::size_t>(k + w * j)] = acc.get(p);
      }
    }
    fn(i, std::span<const value_type>(slab.data(), slab.size()), w, h);
  }
}

// Block-by-block copy into a new temporary volume.
template <class Traits>
BlockedVolume<Traits> copy_volume(Workspace& ws, const BlockedVolume<Traits>& src) {
  auto dst = BlockedVolume<Traits>::create(ws, src.dims(), src.spacing());
  TrackedVector<typename Traits::value_type> slice(ws.memory(), static_cast<std::size_t>(src.dims().plane()));
  for (std::int64_t z = 0; z < src.dims().z; ++z) {
    src.read_slice(z, {slice.data(), slice.size()});
    dst.write_slice(z, {slice.data(), slice.size()});
  }
  return dst;
}

inline std::int64_t count_foreground(const BinaryVolume& v) {
  std::int64_t n = 0;
  stream_slabs(v, Axis::z, [&](std::int64_t, std::span<const VoxelState> s, std::int64_t, std::int64_t) {
    for (VoxelState st : s) n += is_set(st);
  });
  return n;
}

// Import a raw volume of one byte per voxel (nonzero = foreground, row-major).
inline BinaryVolume import_raw(Workspace& ws, const std::filesystem::path& raw,
                               const std::filesystem::path& out, Dims dims, Spacing spacing) {
  detail::FileHandle in(raw, O_RDONLY);
  const std::uint64_t expect = static_cast<std::uint64_t>(dims.voxel_count());
  if (in.size() != expect) {
    throw VolumeFormatError("raw file has " + std::to_string(in.size()) + " bytes, expected " +
                            std::to_string(expect));
  }
  auto vol = BinaryVolume::create_file(ws, out, dims, spacing);
  TrackedVector<std::uint8_t> bytes(ws.memory(), static_cast<std::size_t>(dims.plane()));
  TrackedVector<VoxelState> slice(ws.memory(), static_cast<std::size_t>(dims.plane()));
  for (std::int64_t z = 0; z < dims.z; ++z) {
    in.read_at(bytes.data(), bytes.size(), static_cast<std::uint64_t>(z * dims.plane()));
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      slice[i] = bytes[i] ? VoxelState::foreground : VoxelState::background;
    }
    vol.write_slice(z, {slice.data(), slice.size()});
  }
  vol.flush();
  return vol;
}

}  // namespace vessel
