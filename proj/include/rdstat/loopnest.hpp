#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdstat/error.hpp"
#include "rdstat/region.hpp"
#include "rdstat/trace.hpp"

// Loop-nest description language. A spec is an ordered list of nests; each
// nest is a single loop chain (iterator, bound)... with statements pinned at
// explicit nesting depths, so imperfect nests like
//
//   for i < NI { q[i] = 0; for j < NJ { q[i] += A[i][j] * p[j] } }
//
// are expressible while sibling loops inside one chain are not. Array
// subscripts are bare iterators of enclosing loops; anything else is a
// scalar. Bounds are integer literals or names resolved through the params
// map. The same spec feeds both pipelines: synthesis of the loop-annotated
// trace (static side) and full unrolling (oracle side).

namespace rdstat {

inline constexpr std::int64_t kDefaultUnrollCap = 100'000'000;
inline constexpr const char* kUnrollCapEnvVar = "RS_UNROLL_CAP";

struct Access {
  bool is_array = false;
  std::string name;
  std::vector<std::string> indices; // empty for scalars

  static Access scalar(std::string n) { return {false, std::move(n), {}}; }
  static Access array(std::string n, std::vector<std::string> idx) {
    return {true, std::move(n), std::move(idx)};
  }
  bool operator==(const Access&) const = default;
};

struct Stmt {
  int depth = 0; // number of enclosing loops
  std::vector<Access> accesses;
  bool operator==(const Stmt&) const = default;
};

struct Loop {
  std::string iterator;
  std::int64_t bound = -1;  // resolved trip count; -1 while symbolic
  std::string bound_param;  // param name when symbolic

  bool resolved() const { return bound >= 1; }
  bool operator==(const Loop&) const = default;
};

struct Nest {
  std::vector<Loop> loops;
  std::vector<Stmt> body;
  bool operator==(const Nest&) const = default;
};

struct LoopNestSpec {
  std::string name;
  std::map<std::string, std::int64_t> params;
  std::vector<Nest> nests;
  bool operator==(const LoopNestSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing and validation

namespace detail {

// "A[i][j]" or "alpha"
inline Access parse_access_text(std::string_view text) {
  auto bracket = text.find('[');
  if (bracket == std::string_view::npos) {
    if (!is_identifier(text))
      fail(Fault::BadSpec, "access \"" + std::string(text) + "\" is not an identifier");
    return Access::scalar(std::string(text));
  }
  std::string_view name = text.substr(0, bracket);
  if (!is_identifier(name))
    fail(Fault::BadSpec, "array name in access \"" + std::string(text) + "\" is not an identifier");
  std::vector<std::string> indices;
  std::string_view rest = text.substr(bracket);
  while (!rest.empty()) {
    if (rest.front() != '[')
      fail(Fault::BadSpec, "malformed subscripts in access \"" + std::string(text) + "\"");
    auto close = rest.find(']');
    if (close == std::string_view::npos)
      fail(Fault::BadSpec, "unterminated subscript in access \"" + std::string(text) + "\"");
    std::string_view idx = rest.substr(1, close - 1);
    if (!is_identifier(idx))
      fail(Fault::BadSpec, "subscript \"" + std::string(idx) + "\" in access \"" +
                               std::string(text) + "\" must be a bare iterator");
    indices.emplace_back(idx);
    rest = rest.substr(close + 1);
  }
  return Access::array(std::string(name), std::move(indices));
}

// A chain cannot interleave: within any level, the deeper statements must
// form one contiguous run (prefix at this depth, one dive, suffix at this
// depth). Anything else would need two loops at the same level.
inline void validate_chain_shape(const Nest& nest, std::size_t level, std::size_t lo,
                                 std::size_t hi, const std::string& where) {
  std::size_t i = lo;
  while (i < hi && static_cast<std::size_t>(nest.body[i].depth) <= level) ++i;
  std::size_t run_lo = i;
  while (i < hi && static_cast<std::size_t>(nest.body[i].depth) > level) ++i;
  std::size_t run_hi = i;
  for (; i < hi; ++i)
    if (static_cast<std::size_t>(nest.body[i].depth) > level)
      fail(Fault::BadSpec, where + ": statement order implies sibling loops, "
                                   "which a single chain cannot express");
  if (run_lo != run_hi) validate_chain_shape(nest, level + 1, run_lo, run_hi, where);
}

} // namespace detail

inline std::string access_to_string(const Access& a) {
  std::string s = a.name;
  for (const std::string& idx : a.indices) s += "[" + idx + "]";
  return s;
}

// Structural checks that do not need resolved bounds. Catches duplicate or
// missing iterators, out-of-range statement depths, subscripts that name no
// enclosing loop, statement orders that would imply sibling loops, and
// inconsistent array arity across the whole spec.
inline void validate_spec(const LoopNestSpec& spec) {
  std::map<std::string, std::size_t> arity;
  for (std::size_t n = 0; n < spec.nests.size(); ++n) {
    const Nest& nest = spec.nests[n];
    const std::string where = "nest " + std::to_string(n) + " of " + spec.name;
    std::set<std::string> iters;
    for (const Loop& loop : nest.loops) {
      if (!detail::is_identifier(loop.iterator))
        fail(Fault::BadSpec, where + ": iterator \"" + loop.iterator + "\" is not an identifier");
      if (!iters.insert(loop.iterator).second)
        fail(Fault::BadSpec, where + ": duplicate iterator \"" + loop.iterator + "\"");
    }
    for (const Stmt& stmt : nest.body) {
      if (stmt.depth < 0 || stmt.depth > static_cast<int>(nest.loops.size()))
        fail(Fault::BadSpec, where + ": statement depth " + std::to_string(stmt.depth) +
                                 " exceeds the loop chain length");
      for (const Access& acc : stmt.accesses) {
        if (!detail::is_identifier(acc.name))
          fail(Fault::BadSpec, where + ": access name \"" + acc.name + "\" is not an identifier");
        if (!acc.is_array) continue;
        if (acc.indices.empty())
          fail(Fault::BadSpec, where + ": array access " + acc.name + " has no subscripts");
        for (const std::string& idx : acc.indices) {
          bool bound = false;
          for (int level = 0; level < stmt.depth; ++level)
            if (nest.loops[level].iterator == idx) bound = true;
          if (!bound)
            fail(Fault::BadSpec, where + ": subscript \"" + idx + "\" of " + acc.name +
                                     " names no loop enclosing the statement");
        }
        auto [it, fresh] = arity.emplace(acc.name, acc.indices.size());
        if (!fresh && it->second != acc.indices.size())
          fail(Fault::ArityMismatch, spec.name + ": array " + acc.name +
                                         " is used with " + std::to_string(it->second) + " and " +
                                         std::to_string(acc.indices.size()) + " subscripts");
      }
    }
    detail::validate_chain_shape(nest, 0, 0, nest.body.size(), where);
  }
}

inline LoopNestSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(Fault::BadSpec, "spec JSON root must be an object");
  LoopNestSpec spec;
  spec.name = j.value("name", std::string("unnamed"));
  if (j.contains("params")) {
    for (const auto& [key, val] : j.at("params").items()) {
      if (!val.is_number_integer())
        fail(Fault::BadSpec, "param \"" + key + "\" must be an integer");
      spec.params[key] = val.get<std::int64_t>();
    }
  }
  if (!j.contains("nests") || !j.at("nests").is_array())
    fail(Fault::BadSpec, "spec JSON needs a \"nests\" array");
  for (const auto& jn : j.at("nests")) {
    Nest nest;
    for (const auto& jl : jn.value("loops", nlohmann::json::array())) {
      Loop loop;
      loop.iterator = jl.value("iter", std::string());
      if (!jl.contains("bound")) fail(Fault::BadSpec, "loop over " + loop.iterator + " lacks a bound");
      const auto& b = jl.at("bound");
      if (b.is_number_integer()) {
        loop.bound = b.get<std::int64_t>();
        if (loop.bound < 1)
          fail(Fault::BadSpec, "loop over " + loop.iterator + " has non-positive bound");
      } else if (b.is_string()) {
        loop.bound_param = b.get<std::string>();
      } else {
        fail(Fault::BadSpec, "loop bound must be an integer or a param name");
      }
      nest.loops.push_back(std::move(loop));
    }
    if (!jn.contains("body") || !jn.at("body").is_array())
      fail(Fault::BadSpec, "nest needs a \"body\" array");
    for (const auto& js : jn.at("body")) {
      Stmt stmt;
      stmt.depth = js.value("depth", 0);
      for (const auto& ja : js.value("accesses", nlohmann::json::array())) {
        if (!ja.is_string()) fail(Fault::BadSpec, "accesses must be strings like \"A[i][j]\"");
        stmt.accesses.push_back(detail::parse_access_text(ja.get<std::string>()));
      }
      nest.body.push_back(std::move(stmt));
    }
    spec.nests.push_back(std::move(nest));
  }
  validate_spec(spec);
  return spec;
}

// Substitute params into symbolic bounds. `overrides` wins over the spec's
// own params map.
inline LoopNestSpec resolve_spec(const LoopNestSpec& spec,
                                 const std::map<std::string, std::int64_t>& overrides = {}) {
  LoopNestSpec out = spec;
  for (const auto& [k, v] : overrides) out.params[k] = v;
  for (Nest& nest : out.nests) {
    for (Loop& loop : nest.loops) {
      if (loop.resolved()) continue;
      auto it = out.params.find(loop.bound_param);
      if (it == out.params.end())
        fail(Fault::UnresolvedParam,
             out.name + ": no value for bound param \"" + loop.bound_param + "\"");
      if (it->second < 1)
        fail(Fault::BadSpec, out.name + ": param \"" + loop.bound_param + "\" must be >= 1");
      loop.bound = it->second;
    }
  }
  return out;
}

inline void require_resolved(const LoopNestSpec& spec) {
  for (const Nest& nest : spec.nests)
    for (const Loop& loop : nest.loops)
      if (!loop.resolved())
        fail(Fault::UnresolvedParam,
             spec.name + ": bound \"" + loop.bound_param + "\" is unresolved");
}

// ---------------------------------------------------------------------------
// Body walking. A nest body is executed as one chain: statements at depth d
// run once per iteration of loops 0..d-1, in listed order, with the deeper
// run sandwiched where it appears.

namespace detail {

// Recursively visit the chain. `stmt_fn(stmt)` is called in execution order
// for one full traversal shape; `loop_fn` brackets each loop level.
// Used by synthesis (structure matters, iterations do not).
template <typename StmtFn, typename EnterFn, typename ExitFn>
void walk_structure(const Nest& nest, std::size_t level, std::size_t lo, std::size_t hi,
                    StmtFn&& stmt_fn, EnterFn&& enter_fn, ExitFn&& exit_fn) {
  // Emit depth==level statements before the inner run, then the loop, then
  // the rest.
  std::size_t i = lo;
  while (i < hi && static_cast<std::size_t>(nest.body[i].depth) <= level) {
    stmt_fn(nest.body[i]);
    ++i;
  }
  std::size_t run_lo = i;
  while (i < hi && static_cast<std::size_t>(nest.body[i].depth) > level) ++i;
  std::size_t run_hi = i;
  if (level < nest.loops.size()) {
    enter_fn(nest.loops[level]);
    walk_structure(nest, level + 1, run_lo, run_hi, stmt_fn, enter_fn, exit_fn);
    exit_fn(nest.loops[level]);
  }
  while (i < hi) {
    stmt_fn(nest.body[i]);
    ++i;
  }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Annotated-trace synthesis. Per loop level the front end emits the binding
// pair (iterator scalar, then '[N'); per array access it emits the subscript
// loads followed by the array token, except that an access identical to the
// immediately preceding one in the same statement reuses the computed
// address and emits the array token alone (the read-modify-write pattern).

inline void synth_nest_tokens(const Nest& nest, std::vector<Token>& out) {
  auto emit_stmt = [&out](const Stmt& stmt) {
    const Access* prev = nullptr;
    for (const Access& acc : stmt.accesses) {
      if (!acc.is_array) {
        out.push_back(Token::scalar(acc.name));
      } else {
        bool same_address = prev && *prev == acc;
        if (!same_address)
          for (const std::string& idx : acc.indices) out.push_back(Token::scalar(idx));
        out.push_back(Token::array(acc.name, acc.indices));
      }
      prev = &acc;
    }
  };
  detail::walk_structure(
      nest, 0, 0, nest.body.size(), emit_stmt,
      [&out](const Loop& loop) {
        out.push_back(Token::scalar(loop.iterator));
        out.push_back(Token::loop_begin(loop.bound));
      },
      [&out](const Loop&) { out.push_back(Token::loop_end()); });
}

inline AnnotatedTrace synth_annotated(const LoopNestSpec& spec) {
  require_resolved(spec);
  validate_spec(spec);
  AnnotatedTrace trace;
  for (const Nest& nest : spec.nests) synth_nest_tokens(nest, trace.tokens);
  return trace;
}

// ---------------------------------------------------------------------------
// Locations. Every scalar name and every array cell gets a distinct integer
// so the oracle engines can run on plain word keys. Array shapes are the
// per-dimension maxima over all references in the spec, which keeps the
// encoding consistent across nests that touch the same array with different
// bounds.

struct AccessEvent {
  std::uint64_t loc = 0;
  std::int32_t site = 0; // static ordinal of the access within the spec body
};

class LocationTable {
 public:
  LocationTable() = default;

  explicit LocationTable(const LoopNestSpec& spec) {
    require_resolved(spec);
    for (const Nest& nest : spec.nests) {
      for (const Stmt& stmt : nest.body) {
        for (const Access& acc : stmt.accesses) {
          if (!acc.is_array) {
            if (scalar_ids_.emplace(acc.name, scalar_order_.size()).second)
              scalar_order_.push_back(acc.name);
            continue;
          }
          auto [it, fresh] = array_dims_.emplace(acc.name,
                                                 std::vector<std::int64_t>(acc.indices.size(), 0));
          if (!fresh && it->second.size() != acc.indices.size())
            fail(Fault::ArityMismatch, "array " + acc.name + " changes arity across the spec");
          if (fresh) array_order_.push_back(acc.name);
          for (std::size_t d = 0; d < acc.indices.size(); ++d) {
            std::int64_t bound = bound_of(nest, acc.indices[d]);
            it->second[d] = std::max(it->second[d], bound);
          }
        }
      }
    }
    std::uint64_t next = scalar_order_.size();
    for (const std::string& name : array_order_) {
      const auto& dims = array_dims_.at(name);
      ArrayInfo info;
      info.base = next;
      info.dims = dims;
      info.strides.assign(dims.size(), 1);
      for (std::size_t d = dims.size(); d-- > 1;)
        info.strides[d - 1] = info.strides[d] * static_cast<std::uint64_t>(dims[d]);
      std::uint64_t cells = 1;
      for (std::int64_t ext : dims) cells *= static_cast<std::uint64_t>(ext);
      next += cells;
      arrays_.emplace(name, std::move(info));
    }
    total_ = next;
  }

  std::uint64_t scalar_loc(const std::string& name) const {
    auto it = scalar_ids_.find(name);
    if (it == scalar_ids_.end()) fail(Fault::Internal, "unknown scalar " + name);
    return it->second;
  }

  std::uint64_t array_loc(const std::string& name, const std::int64_t* iv, std::size_t n) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end() || it->second.dims.size() != n)
      fail(Fault::Internal, "unknown array reference " + name);
    std::uint64_t off = 0;
    for (std::size_t d = 0; d < n; ++d) off += static_cast<std::uint64_t>(iv[d]) * it->second.strides[d];
    return it->second.base + off;
  }

  // Human-readable form, e.g. "tmp[3][0]" or "alpha".
  std::string decode(std::uint64_t loc) const {
    if (loc < scalar_order_.size()) return scalar_order_[loc];
    for (const std::string& name : array_order_) {
      const ArrayInfo& info = arrays_.at(name);
      std::uint64_t cells = 1;
      for (std::int64_t ext : info.dims) cells *= static_cast<std::uint64_t>(ext);
      if (loc >= info.base && loc < info.base + cells) {
        std::uint64_t off = loc - info.base;
        std::string s = name;
        for (std::size_t d = 0; d < info.dims.size(); ++d) {
          s += "[" + std::to_string(off / info.strides[d]) + "]";
          off %= info.strides[d];
        }
        return s;
      }
    }
    return "<loc:" + std::to_string(loc) + ">";
  }

  std::uint64_t location_count() const { return total_; }
  std::size_t scalar_count() const { return scalar_order_.size(); }

 private:
  static std::int64_t bound_of(const Nest& nest, const std::string& iterator) {
    for (const Loop& loop : nest.loops)
      if (loop.iterator == iterator) return loop.bound;
    fail(Fault::UnknownIterator, "iterator \"" + iterator + "\" names no loop in this nest");
  }

  struct ArrayInfo {
    std::uint64_t base = 0;
    std::vector<std::int64_t> dims;
    std::vector<std::uint64_t> strides;
  };

  std::map<std::string, std::uint64_t> scalar_ids_;
  std::vector<std::string> scalar_order_;
  std::map<std::string, std::vector<std::int64_t>> array_dims_;
  std::vector<std::string> array_order_;
  std::map<std::string, ArrayInfo> arrays_;
  std::uint64_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Unrolling: the concrete access stream, one event per executed access, in
// program order. Scalar reads of loop variables and subscript loads are loop
// machinery, not program accesses, so they do not appear here; this is the
// universe both the oracle and the predictor account for.

inline std::int64_t total_accesses(const Nest& nest) {
  std::int64_t total = 0;
  for (const Stmt& stmt : nest.body) {
    std::int64_t times = 1;
    for (int level = 0; level < stmt.depth; ++level) times *= nest.loops[level].bound;
    total += times * static_cast<std::int64_t>(stmt.accesses.size());
  }
  return total;
}

inline std::int64_t total_accesses(const LoopNestSpec& spec) {
  std::int64_t total = 0;
  for (const Nest& nest : spec.nests) total += total_accesses(nest);
  return total;
}

inline std::int64_t unroll_cap_from_env(std::int64_t fallback = kDefaultUnrollCap) {
  if (const char* raw = std::getenv(kUnrollCapEnvVar)) {
    char* end = nullptr;
    long long v = std::strtoll(raw, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
    fail(Fault::BadSpec, std::string(kUnrollCapEnvVar) + " must be a positive integer, got \"" +
                             raw + "\"");
  }
  return fallback;
}

namespace detail {

// Precomputed per-nest execution plan so the hot unroll loop does no string
// work. Access subscripts become levels into the live iteration vector.
struct NestPlan {
  struct PlannedAccess {
    bool is_array = false;
    std::uint64_t scalar_loc = 0;
    const std::string* array_name = nullptr;
    std::vector<int> index_levels;
    std::int32_t site = 0;
  };
  struct PlannedStmt {
    int depth = 0;
    std::vector<PlannedAccess> accesses;
  };
  std::vector<PlannedStmt> stmts; // in body order
  const Nest* nest = nullptr;

  NestPlan(const Nest& n, const LocationTable& table, std::int32_t site_base) : nest(&n) {
    std::int32_t site = site_base;
    for (const Stmt& stmt : n.body) {
      PlannedStmt ps;
      ps.depth = stmt.depth;
      for (const Access& acc : stmt.accesses) {
        PlannedAccess pa;
        pa.site = site++;
        pa.is_array = acc.is_array;
        if (!acc.is_array) {
          pa.scalar_loc = table.scalar_loc(acc.name);
        } else {
          pa.array_name = &acc.name;
          for (const std::string& idx : acc.indices) {
            int level = -1;
            for (std::size_t l = 0; l < n.loops.size(); ++l)
              if (n.loops[l].iterator == idx) level = static_cast<int>(l);
            if (level < 0) fail(Fault::UnknownIterator, "unbound subscript " + idx);
            pa.index_levels.push_back(level);
          }
        }
        ps.accesses.push_back(std::move(pa));
      }
      stmts.push_back(std::move(ps));
    }
  }
};

template <typename EmitFn>
void run_nest_plan(const NestPlan& plan, const LocationTable& table, std::size_t level,
                   std::size_t lo, std::size_t hi, std::vector<std::int64_t>& iters,
                   EmitFn&& emit) {
  std::size_t i = lo;
  auto emit_stmt = [&](const NestPlan::PlannedStmt& ps) {
    std::int64_t iv[16];
    for (const auto& pa : ps.accesses) {
      if (!pa.is_array) {
        emit(AccessEvent{pa.scalar_loc, pa.site}, iters);
        continue;
      }
      for (std::size_t d = 0; d < pa.index_levels.size(); ++d)
        iv[d] = iters[pa.index_levels[d]];
      emit(AccessEvent{table.array_loc(*pa.array_name, iv, pa.index_levels.size()), pa.site},
           iters);
    }
  };
  while (i < hi && static_cast<std::size_t>(plan.stmts[i].depth) <= level) emit_stmt(plan.stmts[i++]);
  std::size_t run_lo = i;
  while (i < hi && static_cast<std::size_t>(plan.stmts[i].depth) > level) ++i;
  std::size_t run_hi = i;
  if (run_lo != run_hi) { // skip spinning empty loops
    for (std::int64_t v = 0; v < plan.nest->loops[level].bound; ++v) {
      iters[level] = v;
      run_nest_plan(plan, table, level + 1, run_lo, run_hi, iters, emit);
    }
  }
  while (i < hi) emit_stmt(plan.stmts[i++]);
}

} // namespace detail

// Streaming unroll; `emit(event, iters)` sees the live iteration vector
// (values beyond the event's depth are stale). Respects `cap` computed from
// the closed-form access count before any work happens.
template <typename EmitFn>
void visit_unroll(const LoopNestSpec& spec, const LocationTable& table, EmitFn&& emit,
                  std::int64_t cap = kDefaultUnrollCap) {
  require_resolved(spec);
  std::int64_t total = total_accesses(spec);
  if (total > cap)
    fail(Fault::CapExceeded, spec.name + ": unrolling would produce " + std::to_string(total) +
                                 " accesses, above the cap of " + std::to_string(cap));
  std::int32_t site_base = 0;
  for (const Nest& nest : spec.nests) {
    detail::NestPlan plan(nest, table, site_base);
    std::vector<std::int64_t> iters(nest.loops.size() + 1, 0);
    detail::run_nest_plan(plan, table, 0, 0, plan.stmts.size(), iters, emit);
    for (const Stmt& stmt : nest.body) site_base += static_cast<std::int32_t>(stmt.accesses.size());
  }
}

inline std::vector<AccessEvent> unroll(const LoopNestSpec& spec, const LocationTable& table,
                                       std::int64_t cap = kDefaultUnrollCap) {
  std::vector<AccessEvent> events;
  events.reserve(static_cast<std::size_t>(std::min<std::int64_t>(total_accesses(spec), cap)));
  visit_unroll(spec, table, [&events](const AccessEvent& ev, const auto&) { events.push_back(ev); },
               cap);
  return events;
}

// Unroll capturing per-event iteration vectors, for the predictor's small
// sample streams.
struct TrackedStream {
  std::vector<AccessEvent> events;
  std::vector<std::array<std::int32_t, 8>> iters; // index 0 = outermost loop
  std::vector<std::int8_t> depths;                // enclosing loop count per event
};

inline TrackedStream unroll_tracked(const LoopNestSpec& spec, const LocationTable& table,
                                    std::int64_t cap = kDefaultUnrollCap) {
  for (const Nest& nest : spec.nests)
    if (nest.loops.size() > 8)
      fail(Fault::DepthUnsupported, "tracked unroll supports loop depth <= 8");
  TrackedStream out;
  // Event depth is recoverable from the site's statement, so build that map.
  std::vector<std::int8_t> site_depth;
  for (const Nest& nest : spec.nests)
    for (const Stmt& stmt : nest.body)
      for (std::size_t a = 0; a < stmt.accesses.size(); ++a)
        site_depth.push_back(static_cast<std::int8_t>(stmt.depth));
  visit_unroll(
      spec, table,
      [&](const AccessEvent& ev, const std::vector<std::int64_t>& iters) {
        out.events.push_back(ev);
        std::array<std::int32_t, 8> snap{};
        std::int8_t depth = site_depth[static_cast<std::size_t>(ev.site)];
        for (int d = 0; d < depth; ++d) snap[d] = static_cast<std::int32_t>(iters[d]);
        out.iters.push_back(snap);
        out.depths.push_back(depth);
      },
      cap);
  return out;
}

// ---------------------------------------------------------------------------
// Footprint: covering rectangle of every cell a nest touches in one array.
// Per dimension the extent is [0, max bound of the subscript iterator over
// all references). With per-array consistent subscript patterns this is
// exactly the touched set.

inline IndexRegion footprint(const Nest& nest, const std::string& array) {
  IndexRegion region;
  bool found = false;
  for (const Stmt& stmt : nest.body) {
    for (const Access& acc : stmt.accesses) {
      if (!acc.is_array || acc.name != array) continue;
      std::vector<std::int64_t> upper;
      for (const std::string& idx : acc.indices) {
        std::int64_t bound = -1;
        for (const Loop& loop : nest.loops)
          if (loop.iterator == idx) bound = loop.bound;
        if (bound < 1) fail(Fault::UnknownIterator, "subscript \"" + idx + "\" of " + array +
                                                        " names no resolved loop");
        upper.push_back(bound);
      }
      if (!found) {
        region = IndexRegion::from_bounds(upper);
        found = true;
        continue;
      }
      if (region.extents.size() != upper.size())
        fail(Fault::ArityMismatch, "array " + array + " changes arity within a nest");
      for (std::size_t d = 0; d < upper.size(); ++d)
        region.extents[d].hi = std::max(region.extents[d].hi, upper[d]);
    }
  }
  if (!found) fail(Fault::BadSpec, "array " + array + " is not referenced in this nest");
  return region;
}

// ---------------------------------------------------------------------------
// Reconstruction: turn a Loop block of an annotated trace back into a nest.
// This undoes synthesis: the scalar right before '[N' is the loop binding
// (the outermost one was recorded by block separation), and scalar tokens
// that spell out the subscripts of an immediately following array token are
// address arithmetic, not accesses. Every other scalar token is a real
// access, which keeps externally produced traces with extra bookkeeping
// tokens usable: the strays simply become scalar statements.

inline Nest nest_from_block(const Block& block) {
  if (block.kind != BlockKind::Loop)
    fail(Fault::BadSpec, "only Loop blocks reconstruct to a nest");
  Nest nest;
  std::vector<std::string> pending; // unattributed scalar names
  int level = 0;                    // current loop depth
  bool chain_done_at = false;       // a loop at the current level already closed

  auto flush_pending = [&](std::size_t count_from_back_excluded) {
    std::size_t keep = pending.size() - count_from_back_excluded;
    for (std::size_t k = 0; k < keep; ++k)
      nest.body.push_back({level, {Access::scalar(pending[k])}});
    pending.erase(pending.begin(), pending.begin() + keep);
  };

  for (std::size_t t = 0; t < block.tokens.size(); ++t) {
    const Token& tok = block.tokens[t];
    switch (tok.kind) {
      case TokenKind::Scalar:
        pending.push_back(tok.name);
        break;
      case TokenKind::LoopBegin: {
        std::string iterator;
        if (level == 0 && t == 0) {
          iterator = block.outer_iterator;
          if (iterator.empty())
            fail(Fault::UnknownIterator,
                 "block has no binding scalar before its outermost loop");
        } else {
          if (pending.empty())
            fail(Fault::UnknownIterator, "loop begin with no preceding iterator scalar");
          iterator = pending.back();
          pending.pop_back();
        }
        flush_pending(0);
        if (chain_done_at)
          fail(Fault::BadSpec, "block contains sibling loops; a nest is a single chain");
        if (level != static_cast<int>(nest.loops.size()))
          fail(Fault::BadSpec, "block contains sibling loops; a nest is a single chain");
        for (const Loop& loop : nest.loops)
          if (loop.iterator == iterator)
            fail(Fault::BadSpec, "iterator \"" + iterator + "\" rebound inside one chain");
        nest.loops.push_back({iterator, tok.trip, {}});
        ++level;
        break;
      }
      case TokenKind::LoopEnd:
        flush_pending(0);
        --level;
        if (level < 0) fail(Fault::Internal, "unbalanced block tokens");
        chain_done_at = true; // any further LoopBegin would be a sibling
        break;
      case TokenKind::Array: {
        // Subscript loads directly before the token are address arithmetic.
        std::size_t n = tok.indices.size();
        bool spelled = pending.size() >= n;
        for (std::size_t d = 0; spelled && d < n; ++d)
          if (pending[pending.size() - n + d] != tok.indices[d]) spelled = false;
        if (spelled) {
          flush_pending(n);
          pending.clear();
        } else {
          flush_pending(0);
        }
        nest.body.push_back({level, {Access::array(tok.name, tok.indices)}});
        break;
      }
    }
  }
  if (level != 0) fail(Fault::Internal, "block tokens do not close their loops");
  return nest;
}

} // namespace rdstat
