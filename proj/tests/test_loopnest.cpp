// Nest descriptions: JSON loading, validation, trace synthesis, unrolling,
// footprints, and reconstruction of a nest from a loop block.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rdstat/loopnest.hpp"
#include "rdstat/trace.hpp"

using namespace rdstat;

TEST_CASE("spec loads from JSON with params and literal bounds", "[loopnest]") {
  LoopNestSpec spec = fixtures::spec_from_text(R"({
    "name": "t", "params": {"N": 7},
    "nests": [{ "loops": [{"iter": "i", "bound": "N"}, {"iter": "j", "bound": 3}],
                "body": [{"depth": 2, "accesses": ["A[i][j]", "x"]}] }]
  })");
  REQUIRE(spec.nests.size() == 1);
  CHECK_FALSE(spec.nests[0].loops[0].resolved());
  LoopNestSpec resolved = resolve_spec(spec);
  CHECK(resolved.nests[0].loops[0].bound == 7);
  LoopNestSpec overridden = resolve_spec(spec, {{"N", 11}});
  CHECK(overridden.nests[0].loops[0].bound == 11);
}

TEST_CASE("unresolved params are reported by name", "[loopnest]") {
  LoopNestSpec spec = fixtures::spec_from_text(R"({
    "nests": [{ "loops": [{"iter": "i", "bound": "MISSING"}],
                "body": [{"depth": 1, "accesses": ["a"]}] }]
  })");
  try {
    resolve_spec(spec);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.fault() == Fault::UnresolvedParam);
    CHECK(std::string(e.what()).find("MISSING") != std::string::npos);
  }
}

TEST_CASE("validation rejects malformed specs", "[loopnest]") {
  auto load = [](const char* text) { return fixtures::spec_from_text(text); };
  // statement depth beyond the chain
  CHECK_THROWS_AS(load(R"({"nests": [{"loops": [{"iter":"i","bound":2}],
    "body": [{"depth": 2, "accesses": ["a"]}]}]})"),
                  Error);
  // subscript names no enclosing loop (j is at level 1, statement at depth 1)
  CHECK_THROWS_AS(load(R"({"nests": [{"loops": [{"iter":"i","bound":2},{"iter":"j","bound":2}],
    "body": [{"depth": 1, "accesses": ["A[j]"]}]}]})"),
                  Error);
  // duplicate iterator in one chain
  CHECK_THROWS_AS(load(R"({"nests": [{"loops": [{"iter":"i","bound":2},{"iter":"i","bound":2}],
    "body": [{"depth": 2, "accesses": ["a"]}]}]})"),
                  Error);
  // statement order needs two loops at the same level
  try {
    load(R"({"nests": [{"loops": [{"iter":"i","bound":2}],
      "body": [{"depth": 1, "accesses": ["a"]},
               {"depth": 0, "accesses": ["b"]},
               {"depth": 1, "accesses": ["c"]}]}]})");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.fault() == Fault::BadSpec);
  }
  // same array with two different arities anywhere in the program
  try {
    load(R"({"nests": [{"loops": [{"iter":"i","bound":2},{"iter":"j","bound":2}],
      "body": [{"depth": 1, "accesses": ["A[i]"]},
               {"depth": 2, "accesses": ["A[i][j]"]}]}]})");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.fault() == Fault::ArityMismatch);
  }
}

TEST_CASE("synthesis emits subscript loads before each array token", "[loopnest][synth]") {
  LoopNestSpec spec = fixtures::spec_from_text(R"({
    "nests": [{ "loops": [{"iter": "i", "bound": 2}],
                "body": [{"depth": 1, "accesses": ["A[i]"]}] }]
  })");
  CHECK(serialize_trace(synth_annotated(resolve_spec(spec))) ==
        "['i', '[2', 'i', 'A_array-i', ']']");
}

TEST_CASE("consecutive identical accesses share one address computation", "[loopnest][synth]") {
  LoopNestSpec spec = fixtures::spec_from_text(R"({
    "nests": [{ "loops": [{"iter": "i", "bound": 2}, {"iter": "j", "bound": 3}],
                "body": [{"depth": 2, "accesses": ["tmp[i][j]", "tmp[i][j]"]}] }]
  })");
  // read-modify-write touches the same cell twice but loads i and j once
  CHECK(serialize_trace(synth_annotated(resolve_spec(spec))) ==
        "['i', '[2', 'j', '[3', 'i', 'j', 'tmp_array-i-j', 'tmp_array-i-j', ']', ']']");
}

TEST_CASE("demo first nest unrolls to 44 events at 2-2-2", "[loopnest][unroll]") {
  LoopNestSpec demo = fixtures::demo_spec();
  LoopNestSpec small{"nest1", {}, {demo.nests[1]}};
  for (Loop& loop : small.nests[0].loops) loop.bound = 2;
  LocationTable table(small);
  auto events = unroll(small, table);
  // per (i, j): one tmp store plus 2 iterations of 5 accesses
  CHECK(events.size() == 44);
  CHECK(total_accesses(small) == 44);

  // spot-check the decoded head: tmp[0][0], then alpha, A[0][0], B[0][0]...
  CHECK(table.decode(events[0].loc) == "tmp[0][0]");
  CHECK(table.decode(events[1].loc) == "alpha");
  CHECK(table.decode(events[2].loc) == "A[0][0]");
  CHECK(table.decode(events[3].loc) == "B[0][0]");
  CHECK(table.decode(events[4].loc) == "tmp[0][0]");
  CHECK(table.decode(events[5].loc) == "tmp[0][0]");
}

TEST_CASE("closed-form access count matches enumeration", "[loopnest][property]") {
  std::mt19937 rng(7);
  for (int round = 0; round < 50; ++round) {
    // random single nest, depth 1..3, bounds 1..4, a few statements
    Nest nest;
    int depth = std::uniform_int_distribution<int>(1, 3)(rng);
    const char* iters[] = {"i", "j", "k"};
    for (int d = 0; d < depth; ++d) {
      Loop loop;
      loop.iterator = iters[d];
      loop.bound = std::uniform_int_distribution<std::int64_t>(1, 4)(rng);
      nest.loops.push_back(loop);
    }
    int stmts = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int s = 0; s < stmts; ++s) {
      Stmt stmt;
      stmt.depth = std::uniform_int_distribution<int>(s == 0 ? 0 : depth, depth)(rng);
      stmt.accesses.push_back(Access::scalar("s" + std::to_string(s)));
      if (stmt.depth > 0) {
        // one array name per arity, so reuse across statements stays legal
        std::vector<std::string> idx;
        for (int d = 0; d < stmt.depth; ++d) idx.push_back(iters[d]);
        stmt.accesses.push_back(Access::array("arr" + std::to_string(stmt.depth), idx));
      }
      nest.body.push_back(stmt);
    }
    LoopNestSpec spec{"gen", {}, {nest}};
    validate_spec(spec);
    LocationTable table(spec);
    CHECK(static_cast<std::int64_t>(unroll(spec, table).size()) == total_accesses(spec));
  }
}

TEST_CASE("footprint is the covering rectangle of touched cells", "[loopnest][footprint]") {
  LoopNestSpec spec = fixtures::overlap_spec();
  IndexRegion r1 = footprint(spec.nests[0], "tmp");
  REQUIRE(r1.extents.size() == 2);
  CHECK(r1.extents[0].lo == 0);
  CHECK(r1.extents[0].hi == 100);
  CHECK(r1.extents[1].hi == 300);
  CHECK(r1.size() == 30000);
  CHECK(footprint(spec.nests[1], "tmp").size() == 52500);
  CHECK_THROWS_AS(footprint(spec.nests[0], "nosucharray"), Error);
}

TEST_CASE("unroll refuses to exceed the access cap", "[loopnest][cap]") {
  LoopNestSpec demo = resolve_spec(fixtures::demo_spec());
  LocationTable table(demo);
  try {
    unroll(demo, table, 1000);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.fault() == Fault::CapExceeded);
    CHECK(exit_code_for(e.fault()) == 3);
  }
}

TEST_CASE("cap can come from the environment", "[loopnest][cap]") {
  ::setenv("RS_UNROLL_CAP", "12345", 1);
  CHECK(unroll_cap_from_env() == 12345);
  ::setenv("RS_UNROLL_CAP", "garbage", 1);
  CHECK_THROWS_AS(unroll_cap_from_env(), Error);
  ::unsetenv("RS_UNROLL_CAP");
  CHECK(unroll_cap_from_env() == kDefaultUnrollCap);
}

TEST_CASE("location table keeps scalars and array cells apart", "[loopnest]") {
  LoopNestSpec demo = resolve_spec(fixtures::demo_spec());
  LocationTable table(demo);
  CHECK(table.scalar_count() == 3); // retval, alpha, beta; reuses do not add
  std::set<std::uint64_t> seen;
  seen.insert(table.scalar_loc("retval"));
  seen.insert(table.scalar_loc("alpha"));
  seen.insert(table.scalar_loc("beta"));
  CHECK(seen.size() == 3);
  std::int64_t iv[2] = {3, 0};
  std::uint64_t loc = table.array_loc("tmp", iv, 2);
  CHECK(table.decode(loc) == "tmp[3][0]");
  CHECK(seen.count(loc) == 0);
}

TEST_CASE("reconstructed nest replays the same access stream", "[loopnest][blocks]") {
  // synth -> parse -> separate -> reconstruct must preserve execution order
  LoopNestSpec demo = fixtures::demo_spec();
  LoopNestSpec nest1{"n1", {}, {demo.nests[1]}};
  for (Loop& loop : nest1.nests[0].loops) loop.bound = 3; // keep streams small

  auto blocks = separate_blocks(parse_trace(serialize_trace(synth_annotated(nest1))));
  REQUIRE(blocks.size() == 2);
  REQUIRE(blocks[1].kind == BlockKind::Loop);
  Nest rebuilt = nest_from_block(blocks[1]);
  REQUIRE(rebuilt.loops.size() == 3);
  CHECK(rebuilt.loops[0].iterator == "i");
  CHECK(rebuilt.loops[0].bound == 3);

  LoopNestSpec rspec{"rebuilt", {}, {rebuilt}};
  LocationTable torig(nest1), trebuilt(rspec);
  auto orig = unroll(nest1, torig);
  auto redo = unroll(rspec, trebuilt);
  REQUIRE(orig.size() == redo.size());
  for (std::size_t i = 0; i < orig.size(); ++i)
    CHECK(torig.decode(orig[i].loc) == trebuilt.decode(redo[i].loc));
}

TEST_CASE("reconstruction from the reference trace keeps stray scalars", "[loopnest][blocks]") {
  auto blocks = separate_blocks(parse_trace(fixtures::kMmTrace));
  Nest nest = nest_from_block(blocks[1]);
  REQUIRE(nest.loops.size() == 3);
  CHECK(nest.loops[0].iterator == "i");
  CHECK(nest.loops[0].bound == 100);
  CHECK(nest.loops[1].bound == 200);
  CHECK(nest.loops[2].bound == 300);

  // the loop controller echoes ('i' after '[100' and friends) stay in the
  // body as scalar accesses; the subscript loads fold into the array refs
  std::int64_t controller_reads = 0;
  bool saw_alpha = false, saw_tmp = false;
  for (const Stmt& stmt : nest.body)
    for (const Access& acc : stmt.accesses) {
      if (!acc.is_array && (acc.name == "i" || acc.name == "j" || acc.name == "k"))
        ++controller_reads;
      saw_alpha |= (!acc.is_array && acc.name == "alpha");
      saw_tmp |= (acc.is_array && acc.name == "tmp");
    }
  CHECK(controller_reads > 0);
  CHECK(saw_alpha);
  CHECK(saw_tmp);
}

TEST_CASE("sibling loops inside one block are rejected", "[loopnest][blocks]") {
  auto blocks = separate_blocks(
      parse_trace("['i', '[2', 'j', '[2', ']', 'k', '[2', ']', ']']"));
  REQUIRE(blocks.size() == 2);
  try {
    nest_from_block(blocks[1]);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.fault() == Fault::BadSpec);
  }
}
