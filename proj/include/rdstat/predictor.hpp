#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"
#include "rdstat/loopnest.hpp"
#include "rdstat/oracle.hpp"
#include "rdstat/region.hpp"
#include "rdstat/trace.hpp"

// Static reuse prediction for one Loop block.
//
// The idea: run the block exactly at every bound vector in {2,3}^depth (tiny
// streams), split the observed reuses into classes that stay comparable
// across configurations, and fit each class's frequency and distance as a
// multilinear function of the per-loop bound increments over 2. Evaluating
// the fits at the real bounds dilates the base histogram to full size
// without ever unrolling it.
//
// A class is (consumer site, producer site, carry level, rank):
//   - sites are the static access ordinals in the block body,
//   - carry level is the outermost loop whose iteration differs between
//     producer and consumer (-1 when they share the whole iteration vector),
//   - rank orders a group's distinct distances ascending, so a group whose
//     events land at several distances splits into separately-fitted
//     subclasses.
// A class missing at some corner samples frequency zero there. Its distance
// sample saturates to the highest rank the group does show at that corner
// (tail aligns with tail; a group's largest distance is its interior,
// position-independent one, so this keeps the dominant mass's distance fit
// honest). Only when the whole group is silent at a corner is the distance
// borrowed from the nearest corner that saw it.

namespace rdstat {

inline constexpr int kMaxFitDepth = 4;

// All bound vectors of {2,3}^depth; the all-2 base first, then by number of
// raised loops, lexicographic within.
inline std::vector<std::vector<std::int64_t>> sample_configs(int depth) {
  if (depth < 1 || depth > kMaxFitDepth)
    fail(Fault::DepthUnsupported,
         "sampling supports loop depth 1.." + std::to_string(kMaxFitDepth) + ", got " +
             std::to_string(depth));
  std::vector<unsigned> order;
  for (unsigned mask = 0; mask < (1u << depth); ++mask) order.push_back(mask);
  std::sort(order.begin(), order.end(), [depth](unsigned a, unsigned b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    // lexicographic on the bound vector = compare from the outermost loop
    for (int level = 0; level < depth; ++level) {
      unsigned bit = 1u << level;
      if ((a & bit) != (b & bit)) return (a & bit) == 0;
    }
    return false;
  });
  std::vector<std::vector<std::int64_t>> configs;
  for (unsigned mask : order) {
    std::vector<std::int64_t> bounds(static_cast<std::size_t>(depth), 2);
    for (int level = 0; level < depth; ++level)
      if (mask & (1u << level)) bounds[static_cast<std::size_t>(level)] = 3;
    configs.push_back(std::move(bounds));
  }
  return configs;
}

// ---------------------------------------------------------------------------
// Multilinear models over per-loop increments. coeff[mask] multiplies
// prod_{level in mask} incr[level]; all arithmetic is exact int64.

struct MultilinearModel {
  int depth = 0;
  std::array<std::int64_t, 1 << kMaxFitDepth> coeff{};

  std::int64_t eval(std::span<const std::int64_t> incr) const {
    std::int64_t sum = 0;
    for (unsigned mask = 0; mask < (1u << depth); ++mask) {
      if (coeff[mask] == 0) continue;
      std::int64_t term = coeff[mask];
      for (int level = 0; level < depth; ++level)
        if (mask & (1u << level)) term *= incr[static_cast<std::size_t>(level)];
      sum += term;
    }
    return sum;
  }

  bool operator==(const MultilinearModel&) const = default;
};

// Name a coefficient's term from the loop iterators, e.g. "1", "i", "i*k".
inline std::string term_name(unsigned mask, const std::vector<std::string>& iterators) {
  if (mask == 0) return "1";
  std::string s;
  for (std::size_t level = 0; level < iterators.size(); ++level) {
    if (!(mask & (1u << level))) continue;
    if (!s.empty()) s += "*";
    s += iterators[level];
  }
  return s;
}

// Exact fit from one sample per corner of {2,3}^depth (keys are bound
// vectors). The Moebius transform over the raised-loop subsets recovers the
// coefficients; interpolation at every corner is exact by construction.
inline MultilinearModel fit_multilinear(const std::map<std::vector<std::int64_t>, std::int64_t>& samples) {
  if (samples.empty()) fail(Fault::IncompleteSamples, "no samples to fit");
  int depth = static_cast<int>(samples.begin()->first.size());
  if (depth < 1 || depth > kMaxFitDepth)
    fail(Fault::DepthUnsupported, "fit supports depth 1.." + std::to_string(kMaxFitDepth));
  if (samples.size() != (std::size_t{1} << depth))
    fail(Fault::IncompleteSamples, "expected " + std::to_string(1 << depth) +
                                       " samples for depth " + std::to_string(depth) + ", got " +
                                       std::to_string(samples.size()));
  MultilinearModel model;
  model.depth = depth;
  for (const auto& [bounds, value] : samples) {
    if (static_cast<int>(bounds.size()) != depth)
      fail(Fault::IncompleteSamples, "sample bound vectors disagree on depth");
    unsigned mask = 0;
    for (int level = 0; level < depth; ++level) {
      std::int64_t b = bounds[static_cast<std::size_t>(level)];
      if (b == 3)
        mask |= 1u << level;
      else if (b != 2)
        fail(Fault::IncompleteSamples, "sample bounds must come from {2,3}");
    }
    model.coeff[mask] = value;
  }
  // in-place subset Moebius transform
  for (int level = 0; level < depth; ++level)
    for (unsigned mask = 0; mask < (1u << depth); ++mask)
      if (mask & (1u << level)) model.coeff[mask] -= model.coeff[mask ^ (1u << level)];
  return model;
}

// ---------------------------------------------------------------------------

struct ReuseClassKey {
  std::int32_t consumer_site = 0;
  std::int32_t producer_site = 0;
  std::int32_t carry = -1; // loop level carrying the reuse; -1 = same iteration
  std::int32_t rank = 0;   // ordinal among the group's distinct distances

  auto operator<=>(const ReuseClassKey&) const = default;
};

struct ClassFit {
  ReuseClassKey key;
  MultilinearModel freq;
  MultilinearModel dist;
  std::int64_t freq_at_target = 0;
  std::int64_t dist_at_target = 0;
};

struct PredictDetail {
  std::vector<std::string> iterators;
  std::vector<ClassFit> fits;
};

struct BlockProfile {
  int ordinal = 0;
  BlockKind kind = BlockKind::Plain;
  int depth = 0;
  ReuseHistogram hist; // reuse bins only; cold is carried separately
  std::map<std::string, IndexRegion> cold_regions;
  std::set<std::string> cold_scalars;
  std::int64_t total_accesses = 0;
  std::vector<std::string> warnings;

  std::int64_t cold_total() const {
    std::int64_t n = static_cast<std::int64_t>(cold_scalars.size());
    for (const auto& [name, region] : cold_regions) n += region.size();
    return n;
  }

  // Everything this block touches, the unit cross-block distances count in.
  std::int64_t footprint_total() const { return cold_total(); }
};

namespace detail {

struct GroupKey {
  std::int32_t consumer_site = 0;
  std::int32_t producer_site = 0;
  std::int32_t carry = -1;
  auto operator<=>(const GroupKey&) const = default;
};

// Exact classed reuse statistics of one nest at the given bounds.
inline std::map<GroupKey, std::vector<DistCount>> classed_stats(const Nest& nest,
                                                                const std::vector<std::int64_t>& bounds) {
  Nest scaled = nest;
  for (std::size_t level = 0; level < scaled.loops.size(); ++level)
    scaled.loops[level].bound = bounds[level];
  LoopNestSpec spec{"sample", {}, {scaled}};
  LocationTable table(spec);
  TrackedStream stream = unroll_tracked(spec, table);
  auto carry_of = [&stream](std::size_t consumer, std::size_t producer) {
    int shared = std::min(stream.depths[consumer], stream.depths[producer]);
    for (int level = 0; level < shared; ++level)
      if (stream.iters[consumer][static_cast<std::size_t>(level)] !=
          stream.iters[producer][static_cast<std::size_t>(level)])
        return level;
    return -1;
  };
  return rd_by_class(std::span<const AccessEvent>(stream.events),
                     [&](std::size_t c, std::size_t p) {
                       return GroupKey{stream.events[c].site, stream.events[p].site,
                                       static_cast<std::int32_t>(carry_of(c, p))};
                     });
}

} // namespace detail

// ---------------------------------------------------------------------------
// predict_block: reconstruct the nest, sample, fit, dilate.

inline BlockProfile predict_block(const Block& block,
                                  const std::vector<std::int64_t>& bounds_override = {},
                                  PredictDetail* detail_out = nullptr) {
  Nest nest = nest_from_block(block);
  const int depth = static_cast<int>(nest.loops.size());
  if (depth < 1) fail(Fault::BadSpec, "loop block reconstructed to no loops");
  if (depth > kMaxFitDepth)
    fail(Fault::DepthUnsupported, "block nests " + std::to_string(depth) +
                                      " loops; prediction supports up to " +
                                      std::to_string(kMaxFitDepth));
  if (!bounds_override.empty()) {
    if (static_cast<int>(bounds_override.size()) != depth)
      fail(Fault::BadSpec, "bounds override must name all " + std::to_string(depth) + " loops");
    for (int level = 0; level < depth; ++level) {
      if (bounds_override[static_cast<std::size_t>(level)] < 1)
        fail(Fault::BadSpec, "bounds must be positive");
      nest.loops[static_cast<std::size_t>(level)].bound =
          bounds_override[static_cast<std::size_t>(level)];
    }
  }

  BlockProfile profile;
  profile.ordinal = block.ordinal;
  profile.kind = BlockKind::Loop;
  profile.depth = depth;
  profile.total_accesses = total_accesses(nest);

  // --- exact sampling at every corner of {2,3}^depth
  const auto configs = sample_configs(depth);
  std::vector<unsigned> config_mask(configs.size(), 0);
  std::vector<std::map<detail::GroupKey, std::vector<DistCount>>> per_corner(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (int level = 0; level < depth; ++level)
      if (configs[c][static_cast<std::size_t>(level)] == 3) config_mask[c] |= 1u << level;
    per_corner[c] = detail::classed_stats(nest, configs[c]);
  }

  // --- gather (group, rank) classes across corners
  std::array<std::size_t, 1 << kMaxFitDepth> corner_of_mask{};
  for (std::size_t c = 0; c < configs.size(); ++c) corner_of_mask[config_mask[c]] = c;
  std::map<ReuseClassKey, std::array<std::int64_t, 1 << kMaxFitDepth>> freq_samples;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (const auto& [group, list] : per_corner[c]) {
      for (std::size_t rank = 0; rank < list.size(); ++rank) {
        ReuseClassKey key{group.consumer_site, group.producer_site, group.carry,
                          static_cast<std::int32_t>(rank)};
        freq_samples[key][config_mask[c]] = list[rank].count; // value-initialized to zeros
      }
    }
  }

  // distance of a (group, rank) at one corner, rank saturated to the tail
  auto dist_at = [&](unsigned mask, const detail::GroupKey& group,
                     std::int32_t rank) -> std::optional<std::int64_t> {
    const auto& corner = per_corner[corner_of_mask[mask]];
    auto it = corner.find(group);
    if (it == corner.end() || it->second.empty()) return std::nullopt;
    const std::vector<DistCount>& list = it->second;
    std::size_t idx = std::min(static_cast<std::size_t>(rank), list.size() - 1);
    return list[idx].distance;
  };

  std::vector<std::int64_t> incr(static_cast<std::size_t>(depth));
  for (int level = 0; level < depth; ++level)
    incr[static_cast<std::size_t>(level)] =
        nest.loops[static_cast<std::size_t>(level)].bound - 2;

  if (detail_out) {
    detail_out->iterators.clear();
    for (const Loop& loop : nest.loops) detail_out->iterators.push_back(loop.iterator);
    detail_out->fits.clear();
  }

  const unsigned corner_count = 1u << depth;
  for (auto& [key, freqs] : freq_samples) {
    const detail::GroupKey group{key.consumer_site, key.producer_site, key.carry};
    std::map<std::vector<std::int64_t>, std::int64_t> freq_map, dist_map;
    for (unsigned mask = 0; mask < corner_count; ++mask) {
      std::optional<std::int64_t> dist_value = dist_at(mask, group, key.rank);
      if (!dist_value) {
        // whole group silent here: borrow from the nearest corner that saw
        // it (fewest raised-loop flips, base-most wins)
        int best_flips = kMaxFitDepth + 1;
        std::optional<std::int64_t> best;
        for (unsigned other = 0; other < corner_count; ++other) {
          std::optional<std::int64_t> candidate = dist_at(other, group, key.rank);
          if (!candidate) continue;
          int flips = std::popcount(mask ^ other);
          if (flips < best_flips) {
            best_flips = flips;
            best = candidate;
          }
        }
        if (!best) fail(Fault::Internal, "reuse class with no distance sample anywhere");
        dist_value = best;
      }
      std::vector<std::int64_t> bounds(static_cast<std::size_t>(depth));
      for (int level = 0; level < depth; ++level)
        bounds[static_cast<std::size_t>(level)] = (mask & (1u << level)) ? 3 : 2;
      freq_map[bounds] = freqs[mask];
      dist_map[bounds] = *dist_value;
    }
    MultilinearModel freq_model = fit_multilinear(freq_map);
    MultilinearModel dist_model = fit_multilinear(dist_map);

    std::int64_t f = freq_model.eval(incr);
    std::int64_t d = dist_model.eval(incr);
    if (f < 0) {
      profile.warnings.push_back("block " + std::to_string(block.ordinal) + ": class (" +
                                 std::to_string(key.consumer_site) + "," +
                                 std::to_string(key.producer_site) + "," +
                                 std::to_string(key.carry) + ",#" + std::to_string(key.rank) +
                                 ") extrapolated to negative frequency " + std::to_string(f) +
                                 "; clamped to 0");
      f = 0;
    }
    if (f > 0 && d < 0) {
      profile.warnings.push_back("block " + std::to_string(block.ordinal) + ": class (" +
                                 std::to_string(key.consumer_site) + "," +
                                 std::to_string(key.producer_site) + "," +
                                 std::to_string(key.carry) + ",#" + std::to_string(key.rank) +
                                 ") extrapolated to negative distance " + std::to_string(d) +
                                 "; clamped to 0");
      d = 0;
    }
    if (f > 0) profile.hist.add(d, f);
    if (detail_out)
      detail_out->fits.push_back({key, freq_model, dist_model, f, d});
  }

  // --- symbolic cold accounting
  std::set<std::string> arrays;
  for (const Stmt& stmt : nest.body)
    for (const Access& acc : stmt.accesses) {
      if (acc.is_array)
        arrays.insert(acc.name);
      else
        profile.cold_scalars.insert(acc.name);
    }
  for (const std::string& array : arrays) profile.cold_regions[array] = footprint(nest, array);

  // --- conservation: reuse mass must be exactly total - cold. The fits land
  // there on their own for multilinear workloads; anything else is folded
  // into the longest-distance bin so downstream totals stay exact.
  std::int64_t expected_reuse = profile.total_accesses - profile.cold_total();
  std::int64_t residual = expected_reuse - profile.hist.total();
  if (residual != 0) {
    if (expected_reuse < 0) {
      profile.warnings.push_back("block " + std::to_string(block.ordinal) +
                                 ": covering footprint exceeds the access total; conservation "
                                 "unattainable for this block");
      profile.hist.bins.clear();
    } else {
      profile.warnings.push_back("block " + std::to_string(block.ordinal) +
                                 ": fitted reuse mass off by " + std::to_string(residual) +
                                 "; reconciled at the distance tail");
      std::int64_t left = residual;
      if (left > 0) {
        std::int64_t at = profile.hist.bins.empty() ? 0 : profile.hist.bins.rbegin()->first;
        profile.hist.add(at, left);
      } else {
        while (left < 0 && !profile.hist.bins.empty()) {
          auto last = std::prev(profile.hist.bins.end());
          std::int64_t take = std::min(last->second, -left);
          profile.hist.add(last->first, -take);
          left += take;
        }
      }
    }
  }
  return profile;
}

// Plain blocks are handled exactly: their few scalar tokens run through the
// reference engine. A trailing scalar that binds the next block's outer loop
// is loop machinery and is skipped (block separation recorded the binding).
inline BlockProfile profile_plain_block(const Block& block,
                                        const std::string& next_block_binding = {}) {
  if (block.kind != BlockKind::Plain) fail(Fault::Internal, "not a plain block");
  std::vector<std::string> names;
  for (const Token& tok : block.tokens) {
    if (tok.kind != TokenKind::Scalar)
      fail(Fault::Internal, "plain block holds a non-scalar token");
    names.push_back(tok.name);
  }
  if (!next_block_binding.empty() && !names.empty() && names.back() == next_block_binding)
    names.pop_back();

  BlockProfile profile;
  profile.ordinal = block.ordinal;
  profile.kind = BlockKind::Plain;
  profile.depth = 0;
  profile.total_accesses = static_cast<std::int64_t>(names.size());
  LocationInterner interner;
  RdResult rd = rd_naive(events_from_names(names, interner));
  for (const auto& [d, n] : rd.hist.bins)
    if (d != kColdKey) profile.hist.add(d, n);
  for (const std::string& name : names) profile.cold_scalars.insert(name);
  return profile;
}

} // namespace rdstat
