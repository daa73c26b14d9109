#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"
#include "rdstat/predictor.hpp"
#include "rdstat/region.hpp"

// Whole-program assembly of per-block profiles.
//
// Each block accounted its first touches as cold. Across blocks that double
// counts: a location introduced by an earlier block is not cold when a later
// block touches it again, it is a long reuse. Deduplication subtracts the
// overlap with the union of all earlier footprints (inclusion-exclusion over
// covering rectangles); every deducted location re-enters the histogram as
// one cross-block reuse event whose distance is computed against the most
// recent producer block:
//
//   D_cross = (producer footprint - overlap with producer)
//           + sum of the footprints of the blocks strictly in between.

namespace rdstat {

struct MergeOptions {
  std::size_t max_union_rects = 8;
};

struct DedupResult {
  // per block ordinal-index: deducted cold count per array
  std::vector<std::map<std::string, std::int64_t>> array_deductions;
  // per block ordinal-index: scalar names already introduced earlier
  std::vector<std::set<std::string>> scalar_dups;
  std::int64_t global_cold = 0;
};

inline DedupResult dedup_cold(const std::vector<BlockProfile>& blocks,
                              const MergeOptions& opts = {}) {
  DedupResult result;
  result.array_deductions.resize(blocks.size());
  result.scalar_dups.resize(blocks.size());
  std::map<std::string, std::vector<IndexRegion>> earlier_regions;
  std::set<std::string> earlier_scalars;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::int64_t block_cold = blocks[b].cold_total();
    for (const auto& [array, region] : blocks[b].cold_regions) {
      auto it = earlier_regions.find(array);
      if (it != earlier_regions.end()) {
        std::int64_t overlap =
            region_overlap_with_union(region, it->second, opts.max_union_rects);
        if (overlap > 0) {
          result.array_deductions[b][array] = overlap;
          block_cold -= overlap;
        }
      }
      earlier_regions[array].push_back(region);
    }
    for (const std::string& name : blocks[b].cold_scalars) {
      if (earlier_scalars.count(name)) {
        result.scalar_dups[b].insert(name);
        block_cold -= 1;
      } else {
        earlier_scalars.insert(name);
      }
    }
    result.global_cold += block_cold;
  }
  return result;
}

// Cross-block reuse entries as distance -> count, one event per deduplicated
// location.
inline std::map<std::int64_t, std::int64_t> cross_block_reuse(
    const std::vector<BlockProfile>& blocks, const DedupResult& dedup) {
  std::map<std::int64_t, std::int64_t> entries;
  auto between_footprint = [&blocks](std::size_t producer, std::size_t consumer) {
    std::int64_t sum = 0;
    for (std::size_t q = producer + 1; q < consumer; ++q) sum += blocks[q].footprint_total();
    return sum;
  };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (const auto& [array, count] : dedup.array_deductions[b]) {
      const IndexRegion& mine = blocks[b].cold_regions.at(array);
      // most recent earlier block sharing cells of this array
      std::int64_t producer_overlap = 0;
      std::size_t producer = b;
      for (std::size_t p = b; p-- > 0;) {
        auto it = blocks[p].cold_regions.find(array);
        if (it == blocks[p].cold_regions.end()) continue;
        std::int64_t ov = region_intersect_size(mine, it->second);
        if (ov > 0) {
          producer = p;
          producer_overlap = ov;
          break;
        }
      }
      if (producer == b)
        fail(Fault::Internal, "deduplicated array " + array + " has no producer block");
      std::int64_t d = (blocks[producer].footprint_total() - producer_overlap) +
                       between_footprint(producer, b);
      entries[d] += count;
    }
    for (const std::string& name : dedup.scalar_dups[b]) {
      std::size_t producer = b;
      for (std::size_t p = b; p-- > 0;) {
        if (blocks[p].cold_scalars.count(name)) {
          producer = p;
          break;
        }
      }
      if (producer == b)
        fail(Fault::Internal, "deduplicated scalar " + name + " has no producer block");
      std::int64_t d =
          (blocks[producer].footprint_total() - 1) + between_footprint(producer, b);
      entries[d] += 1;
    }
  }
  return entries;
}

struct ProgramProfile {
  ReuseHistogram hist; // cross-block entries included, global cold at -1
  std::vector<BlockProfile> per_block;
  std::vector<std::string> warnings;
};

inline ProgramProfile merge_profiles(std::vector<BlockProfile> blocks,
                                     const MergeOptions& opts = {}) {
  ProgramProfile program;
  DedupResult dedup = dedup_cold(blocks, opts);
  for (const BlockProfile& block : blocks) {
    program.hist.merge_in(block.hist);
    for (const std::string& w : block.warnings) program.warnings.push_back(w);
  }
  for (const auto& [d, n] : cross_block_reuse(blocks, dedup)) program.hist.add(d, n);
  program.hist.add(kColdKey, dedup.global_cold);

  std::int64_t expected = 0;
  for (const BlockProfile& block : blocks) expected += block.total_accesses;
  if (program.hist.total() != expected)
    program.warnings.push_back("merged histogram total " + std::to_string(program.hist.total()) +
                               " does not match the per-block access total " +
                               std::to_string(expected));
  program.per_block = std::move(blocks);
  return program;
}

// ---------------------------------------------------------------------------
// JSON forms

inline nlohmann::json region_to_json(const IndexRegion& region) {
  nlohmann::json extents = nlohmann::json::array();
  for (const auto& e : region.extents) extents.push_back({e.lo, e.hi});
  return extents;
}

inline IndexRegion region_from_json(const nlohmann::json& j) {
  IndexRegion region;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) fail(Fault::Io, "region extent must be [lo, hi)");
    region.extents.push_back({e[0].get<std::int64_t>(), e[1].get<std::int64_t>()});
  }
  return region;
}

inline nlohmann::json block_profile_to_json(const BlockProfile& block) {
  nlohmann::json j;
  j["block"] = block.ordinal;
  j["kind"] = block.kind == BlockKind::Loop ? "loop" : "plain";
  j["depth"] = block.depth;
  j["total_accesses"] = block.total_accesses;
  j["histogram"] = hist_to_json(block.hist);
  nlohmann::json regions = nlohmann::json::object();
  for (const auto& [array, region] : block.cold_regions) regions[array] = region_to_json(region);
  j["cold_regions"] = regions;
  j["cold_scalars"] = block.cold_scalars;
  j["warnings"] = block.warnings;
  return j;
}

inline BlockProfile block_profile_from_json(const nlohmann::json& j) {
  BlockProfile block;
  block.ordinal = j.value("block", 0);
  block.kind = j.value("kind", std::string("plain")) == "loop" ? BlockKind::Loop : BlockKind::Plain;
  block.depth = j.value("depth", 0);
  block.total_accesses = j.value("total_accesses", std::int64_t{0});
  if (j.contains("histogram")) block.hist = hist_from_json(j.at("histogram"));
  if (j.contains("cold_regions"))
    for (const auto& [array, region] : j.at("cold_regions").items())
      block.cold_regions[array] = region_from_json(region);
  if (j.contains("cold_scalars"))
    for (const auto& name : j.at("cold_scalars")) block.cold_scalars.insert(name.get<std::string>());
  if (j.contains("warnings"))
    for (const auto& w : j.at("warnings")) block.warnings.push_back(w.get<std::string>());
  return block;
}

inline nlohmann::json profile_to_json(const ProgramProfile& program, const std::string& pipeline) {
  nlohmann::json j;
  j["pipeline"] = pipeline;
  j["histogram"] = hist_to_json(program.hist);
  nlohmann::json blocks = nlohmann::json::array();
  for (const BlockProfile& block : program.per_block) blocks.push_back(block_profile_to_json(block));
  j["per_block"] = blocks;
  j["warnings"] = program.warnings;
  return j;
}

inline ProgramProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("histogram"))
    fail(Fault::Io, "profile JSON must be an object with a \"histogram\"");
  ProgramProfile program;
  program.hist = hist_from_json(j.at("histogram"));
  if (j.contains("per_block"))
    for (const auto& jb : j.at("per_block")) program.per_block.push_back(block_profile_from_json(jb));
  if (j.contains("warnings"))
    for (const auto& w : j.at("warnings")) program.warnings.push_back(w.get<std::string>());
  return program;
}

} // namespace rdstat
