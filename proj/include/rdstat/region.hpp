#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "rdstat/error.hpp"

// Hyper-rectangular index regions, the symbolic currency for array
// footprints: one half-open interval [lo, hi) per array dimension.

namespace rdstat {

struct IndexRegion {
  struct Extent {
    std::int64_t lo = 0;
    std::int64_t hi = 0; // exclusive
    bool operator==(const Extent&) const = default;
  };
  std::vector<Extent> extents;

  bool empty() const {
    for (const Extent& e : extents)
      if (e.hi <= e.lo) return true;
    return extents.empty();
  }

  std::int64_t size() const {
    if (extents.empty()) return 0;
    std::int64_t n = 1;
    for (const Extent& e : extents) {
      if (e.hi <= e.lo) return 0;
      n *= e.hi - e.lo;
    }
    return n;
  }

  bool operator==(const IndexRegion&) const = default;

  static IndexRegion from_bounds(const std::vector<std::int64_t>& upper) {
    IndexRegion r;
    for (std::int64_t hi : upper) r.extents.push_back({0, hi});
    return r;
  }
};

inline IndexRegion region_intersect(const IndexRegion& a, const IndexRegion& b) {
  if (a.extents.size() != b.extents.size())
    fail(Fault::ArityMismatch, "cannot intersect regions of rank " +
                                   std::to_string(a.extents.size()) + " and " +
                                   std::to_string(b.extents.size()));
  IndexRegion out;
  for (std::size_t d = 0; d < a.extents.size(); ++d)
    out.extents.push_back({std::max(a.extents[d].lo, b.extents[d].lo),
                           std::min(a.extents[d].hi, b.extents[d].hi)});
  return out;
}

// Number of cells two regions share. Intersecting a region with itself
// returns its own size; disjoint regions return 0.
inline std::int64_t region_intersect_size(const IndexRegion& a, const IndexRegion& b) {
  return region_intersect(a, b).size();
}

// |target ∩ (covered[0] ∪ covered[1] ∪ ...)| by inclusion-exclusion. The
// rectangle count is capped because the term count is 2^n.
inline std::int64_t region_overlap_with_union(const IndexRegion& target,
                                              const std::vector<IndexRegion>& covered,
                                              std::size_t max_rects = 8) {
  if (covered.size() > max_rects)
    fail(Fault::UnionTooComplex, "union of " + std::to_string(covered.size()) +
                                     " rectangles exceeds the configured cap of " +
                                     std::to_string(max_rects));
  std::int64_t total = 0;
  const std::size_t n = covered.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    IndexRegion cur = target;
    for (std::size_t i = 0; i < n && !cur.empty(); ++i)
      if (mask & (std::size_t{1} << i)) cur = region_intersect(cur, covered[i]);
    std::int64_t sz = cur.size();
    if (sz == 0) continue;
    total += (__builtin_popcountll(mask) % 2 == 1) ? sz : -sz;
  }
  return total;
}

inline std::string region_to_string(const IndexRegion& r) {
  std::string s;
  for (std::size_t d = 0; d < r.extents.size(); ++d) {
    if (d) s += "x";
    s += "[" + std::to_string(r.extents[d].lo) + "," + std::to_string(r.extents[d].hi) + ")";
  }
  return s.empty() ? "[]" : s;
}

} // namespace rdstat
