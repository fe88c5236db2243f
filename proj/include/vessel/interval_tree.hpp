#pragma once

// Static centered interval tree over closed integer intervals with stabbing
// queries. Built once from a list; ids are caller-defined.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

namespace vessel {

struct Interval {
  std::int64_t lo, hi;  // inclusive
  std::uint32_t id;
};

class IntervalTree {
 public:
  IntervalTree() = default;
  explicit IntervalTree(std::vector<Interval> items) { root_ = build(std::move(items)); }

  // Ids of every interval containing c, ascending.
  std::vector<std::uint32_t> stab(std::int64_t c) const {
    std::vector<std::uint32_t> out;
    stab_into(c, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  void stab_into(std::int64_t c, std::vector<std::uint32_t>& out) const {
    for (const NodeT* n = root_.get(); n;) {
      if (c < n->center) {
        for (const Interval& iv : n->by_lo) {
          if (iv.lo > c) break;
          out.push_back(iv.id);
        }
        n = n->left.get();
      } else {
        for (const Interval& iv : n->by_hi) {
          if (iv.hi < c) break;
          out.push_back(iv.id);
        }
        n = n->right.get();
      }
    }
  }

  bool empty() const { return !root_; }

 private:
  struct NodeT {
    std::int64_t center = 0;
    std::vector<Interval> by_lo;  // overlapping intervals, ascending lo
    std::vector<Interval> by_hi;  // same intervals, descending hi
    std::unique_ptr<NodeT> left, right;
  };

  static std::unique_ptr<NodeT> build(std::vector<Interval> items) {
    if (items.empty()) return nullptr;
    std::vector<std::int64_t> ends;
    ends.reserve(items.size() * 2);
    for (const auto& iv : items) {
      ends.push_back(iv.lo);
      ends.push_back(iv.hi);
    }
    std::nth_element(ends.begin(), ends.begin() + static_cast<std::ptrdiff_t>(ends.size() / 2), ends.end());
    auto n = std::make_unique<NodeT>();
    n->center = ends[ends.size() / 2];
    std::vector<Interval> left, right;
    for (const auto& iv : items) {
      if (iv.hi < n->center) left.push_back(iv);
      else if (iv.lo > n->center) right.push_back(iv);
      else n->by_lo.push_back(iv);
    }
    n->by_hi = n->by_lo;
    std::sort(n->by_lo.begin(), n->by_lo.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::sort(n->by_hi.begin(), n->by_hi.end(), [](const Interval& a, const Interval& b) { return a.hi > b.hi; });
    n->left = build(std::move(left));
    n->right = build(std::move(right));
    return n;
  }

  std::unique_ptr<NodeT> root_;
};

}  // namespace vessel
