#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"
#include "rdstat/loopnest.hpp"
#include "rdstat/merge.hpp"
#include "rdstat/oracle.hpp"
#include "rdstat/predictor.hpp"
#include "rdstat/trace.hpp"

// End-to-end plumbing shared by the command line tool and the test suites:
//
//   spec ---synth---> annotated trace ---separate---> blocks
//   blocks --predict/profile--> per-block profiles --merge--> program profile
//   spec or trace --unroll--> event stream --exact engine--> oracle histogram
//
// The prediction path never unrolls at full bounds; the oracle path always
// does, so it is the ground truth the predictor is judged against.

namespace rdstat {

inline std::string next_loop_binding(const std::vector<Block>& blocks, std::size_t i) {
  if (i + 1 < blocks.size() && blocks[i + 1].kind == BlockKind::Loop)
    return blocks[i + 1].outer_iterator;
  return {};
}

inline ProgramProfile predict_from_blocks(
    const std::vector<Block>& blocks,
    const std::map<std::string, std::int64_t>& bounds_override = {},
    const MergeOptions& opts = {}) {
  std::vector<BlockProfile> profiles;
  profiles.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].kind == BlockKind::Loop) {
      // predict_block wants positional bounds; map iterator-name overrides
      // onto the reconstructed chain, keeping traced bounds where unnamed.
      std::vector<std::int64_t> bounds;
      if (!bounds_override.empty()) {
        Nest nest = nest_from_block(blocks[i]);
        for (const Loop& loop : nest.loops) {
          auto it = bounds_override.find(loop.iterator);
          bounds.push_back(it == bounds_override.end() ? loop.bound : it->second);
        }
      }
      profiles.push_back(predict_block(blocks[i], bounds));
    } else {
      profiles.push_back(profile_plain_block(blocks[i], next_loop_binding(blocks, i)));
    }
  }
  return merge_profiles(std::move(profiles), opts);
}

inline ProgramProfile predict_from_trace(
    const AnnotatedTrace& trace,
    const std::map<std::string, std::int64_t>& bounds_override = {},
    const MergeOptions& opts = {}) {
  return predict_from_blocks(separate_blocks(trace), bounds_override, opts);
}

inline ProgramProfile predict_from_spec(const LoopNestSpec& resolved,
                                        const MergeOptions& opts = {}) {
  return predict_from_trace(synth_annotated(resolved), {}, opts);
}

struct OracleResult {
  ReuseHistogram hist; // cold at -1
  std::int64_t distinct = 0;
};

// Exact reuse distances for the fully unrolled program. O(n log m) in the
// number of accesses n and live locations m.
inline OracleResult oracle_from_spec(const LoopNestSpec& spec,
                                     std::int64_t cap = kDefaultUnrollCap) {
  LocationTable table(spec);
  OlkenEngine engine;
  OracleResult out;
  visit_unroll(
      spec, table,
      [&](const AccessEvent& ev, const auto&) { out.hist.add(engine.access(ev.loc).distance); },
      cap);
  out.distinct = engine.distinct();
  return out;
}

// Oracle for a raw annotated trace: loop blocks are reconstructed and
// unrolled, plain scalars replay as-is, and one shared engine sees the whole
// program so cross-block reuses get their true distances. Array cells are
// interned by decoded name, which keeps differently-bounded blocks that touch
// the same array consistent.
inline OracleResult oracle_from_trace(const AnnotatedTrace& trace,
                                      std::int64_t cap = kDefaultUnrollCap) {
  std::vector<Block> blocks = separate_blocks(trace);

  struct Prepared {
    std::vector<std::string> plain_names;
    std::optional<LoopNestSpec> spec;
  };
  std::vector<Prepared> prepared(blocks.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].kind == BlockKind::Plain) {
      for (const Token& tok : blocks[i].tokens) prepared[i].plain_names.push_back(tok.name);
      const std::string binding = next_loop_binding(blocks, i);
      auto& names = prepared[i].plain_names;
      if (!binding.empty() && !names.empty() && names.back() == binding) names.pop_back();
      total += static_cast<std::int64_t>(names.size());
    } else {
      LoopNestSpec single;
      single.name = "block" + std::to_string(blocks[i].ordinal);
      single.nests.push_back(nest_from_block(blocks[i]));
      total += total_accesses(single);
      prepared[i].spec = std::move(single);
    }
  }
  if (total > cap)
    fail(Fault::CapExceeded, "trace unrolls to " + std::to_string(total) +
                                 " accesses, above the cap of " + std::to_string(cap));

  LocationInterner interner;
  OlkenEngine engine;
  OracleResult out;
  auto touch = [&](const std::string& name) {
    out.hist.add(engine.access(interner.id_of(name)).distance);
  };
  for (const Prepared& p : prepared) {
    if (!p.spec) {
      for (const std::string& name : p.plain_names) touch(name);
      continue;
    }
    LocationTable table(*p.spec);
    visit_unroll(
        *p.spec, table,
        [&](const AccessEvent& ev, const auto&) { touch(table.decode(ev.loc)); },
        cap);
  }
  out.distinct = engine.distinct();
  return out;
}

} // namespace rdstat
