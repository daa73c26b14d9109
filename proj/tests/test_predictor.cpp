// Static per-block prediction: sample configurations, multilinear fitting,
// dilation to target bounds, symbolic cold accounting, and conservation.

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rdstat/pipeline.hpp"
#include "rdstat/predictor.hpp"

using namespace rdstat;

namespace {

// Build the loop block for a single-nest spec at given bounds.
Block loop_block_for(const Nest& nest_template, const std::vector<std::int64_t>& bounds) {
  Nest nest = nest_template;
  REQUIRE(nest.loops.size() == bounds.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) nest.loops[i].bound = bounds[i];
  LoopNestSpec spec{"fixture", {}, {nest}};
  auto blocks = separate_blocks(parse_trace(serialize_trace(synth_annotated(spec))));
  REQUIRE(blocks.size() == 2);
  REQUIRE(blocks[1].kind == BlockKind::Loop);
  return blocks[1];
}

OracleResult oracle_at(const Nest& nest_template, const std::vector<std::int64_t>& bounds) {
  Nest nest = nest_template;
  for (std::size_t i = 0; i < bounds.size(); ++i) nest.loops[i].bound = bounds[i];
  return oracle_from_spec(LoopNestSpec{"fixture", {}, {nest}});
}

} // namespace

TEST_CASE("sample configurations follow the canonical order", "[predictor]") {
  auto configs = sample_configs(3);
  std::vector<std::vector<std::int64_t>> expect = {
      {2, 2, 2}, {2, 2, 3}, {2, 3, 2}, {3, 2, 2},
      {2, 3, 3}, {3, 2, 3}, {3, 3, 2}, {3, 3, 3}};
  REQUIRE(configs == expect);

  auto one = sample_configs(1);
  REQUIRE(one == std::vector<std::vector<std::int64_t>>{{2}, {3}});

  CHECK_THROWS_AS(sample_configs(0), Error);
  CHECK_THROWS_AS(sample_configs(kMaxFitDepth + 1), Error);
}

TEST_CASE("two-variable fit recovers the increment coefficients", "[predictor][fit]") {
  std::map<std::vector<std::int64_t>, std::int64_t> samples = {
      {{2, 2}, 4}, {{2, 3}, 6}, {{3, 2}, 8}, {{3, 3}, 12}};
  MultilinearModel model = fit_multilinear(samples);
  REQUIRE(model.depth == 2);
  CHECK(model.coeff[0b00] == 4); // base
  CHECK(model.coeff[0b01] == 4); // raising the outer loop adds 4
  CHECK(model.coeff[0b10] == 2); // raising the inner loop adds 2
  CHECK(model.coeff[0b11] == 2); // joint term

  // base identity at all four corners
  CHECK(model.eval(std::vector<std::int64_t>{0, 0}) == 4);
  CHECK(model.eval(std::vector<std::int64_t>{0, 1}) == 6);
  CHECK(model.eval(std::vector<std::int64_t>{1, 0}) == 8);
  CHECK(model.eval(std::vector<std::int64_t>{1, 1}) == 12);

  // dilation to bounds 100 and 200: increments 98 and 198
  CHECK(model.eval(std::vector<std::int64_t>{98, 198}) ==
        4 + 4 * 98 + 2 * 198 + 2 * 98 * 198);
}

TEST_CASE("fit is exact at corners for random integer surfaces", "[predictor][fit][property]") {
  std::mt19937 rng(404);
  for (int round = 0; round < 200; ++round) {
    int depth = std::uniform_int_distribution<int>(1, 4)(rng);
    std::map<std::vector<std::int64_t>, std::int64_t> samples;
    for (unsigned mask = 0; mask < (1u << depth); ++mask) {
      std::vector<std::int64_t> corner(depth, 2);
      for (int level = 0; level < depth; ++level)
        if (mask & (1u << level)) corner[level] = 3;
      samples[corner] = std::uniform_int_distribution<std::int64_t>(-1000, 1000)(rng);
    }
    MultilinearModel model = fit_multilinear(samples);
    for (const auto& [corner, value] : samples) {
      std::vector<std::int64_t> incr;
      for (std::int64_t b : corner) incr.push_back(b - 2);
      REQUIRE(model.eval(incr) == value);
    }
  }
}

TEST_CASE("fit refuses incomplete sample sets", "[predictor][fit]") {
  std::map<std::vector<std::int64_t>, std::int64_t> samples = {
      {{2, 2}, 4}, {{2, 3}, 6}, {{3, 2}, 8}}; // missing {3,3}
  try {
    fit_multilinear(samples);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.fault() == Fault::IncompleteSamples);
  }
}

TEST_CASE("single loop over one scalar", "[predictor]") {
  auto blocks = separate_blocks(parse_trace("['i', '[100', 'x', ']']"));
  BlockProfile profile = predict_block(blocks[1]);
  CHECK(profile.total_accesses == 100);
  REQUIRE(profile.hist.bins.size() == 1);
  CHECK(profile.hist.bins.at(0) == 99); // every iteration after the first
  CHECK(profile.cold_regions.empty());
  REQUIRE(profile.cold_scalars.size() == 1);
  CHECK(profile.cold_scalars.count("x") == 1);
  CHECK(profile.warnings.empty());
}

TEST_CASE("single loop over a streaming array has no reuse", "[predictor]") {
  auto blocks = separate_blocks(parse_trace("['i', '[64', 'i', 'A_array-i', ']']"));
  BlockProfile profile = predict_block(blocks[1]);
  CHECK(profile.total_accesses == 64);
  CHECK(profile.hist.bins.empty());
  REQUIRE(profile.cold_regions.count("A") == 1);
  CHECK(profile.cold_regions.at("A").size() == 64);
  CHECK(profile.cold_total() == 64);
}

TEST_CASE("prediction detail exposes the fitted classes", "[predictor]") {
  auto blocks = separate_blocks(parse_trace("['i', '[100', 'x', ']']"));
  PredictDetail detail;
  predict_block(blocks[1], {}, &detail);
  REQUIRE(detail.iterators == std::vector<std::string>{"i"});
  REQUIRE(detail.fits.size() == 1);
  const ClassFit& fit = detail.fits[0];
  CHECK(fit.key.carry == 0);     // reuse carried by the only loop
  CHECK(fit.key.rank == 0);
  CHECK(fit.freq_at_target == 99);
  CHECK(fit.dist_at_target == 0);
}

TEST_CASE("conservation holds at full bounds for the demo nest", "[predictor]") {
  LoopNestSpec demo = fixtures::demo_spec();
  Block block = loop_block_for(demo.nests[1], {100, 200, 300});
  BlockProfile profile = predict_block(block);
  CHECK(profile.total_accesses == 30020000);
  CHECK(profile.hist.reuse_total() + profile.cold_total() == 30020000);
  // B[k][j] omits the outer iterator, so its i-carried reuses have
  // position-dependent distances; the fit clamps and reconciles, and says so
  CHECK_FALSE(profile.warnings.empty());

  // cold pieces: A is 100x300, B is 300x200, tmp is 100x200, alpha is scalar
  CHECK(profile.cold_regions.at("A").size() == 30000);
  CHECK(profile.cold_regions.at("B").size() == 60000);
  CHECK(profile.cold_regions.at("tmp").size() == 20000);
  CHECK(profile.cold_scalars.count("alpha") == 1);
  CHECK(profile.cold_total() == 30000 + 60000 + 20000 + 1);
}

TEST_CASE("prediction at a sampled corner is the exact histogram", "[predictor][exact]") {
  LoopNestSpec demo = fixtures::demo_spec();
  for (const auto& bounds : std::vector<std::vector<std::int64_t>>{
           {2, 2, 2}, {2, 3, 2}, {3, 3, 3}}) {
    Block block = loop_block_for(demo.nests[1], bounds);
    BlockProfile profile = predict_block(block);
    OracleResult oracle = oracle_at(demo.nests[1], bounds);
    CHECK(profile.cold_total() == oracle.hist.cold());
    ReuseHistogram oracle_reuse = oracle.hist;
    oracle_reuse.bins.erase(-1);
    CHECK(profile.hist.bins == oracle_reuse.bins);
  }
}

TEST_CASE("dilated prediction splits the matrix product into exact and modeled mass",
          "[predictor][exact]") {
  // Every class of this nest dilates exactly except B's i-carried reuses:
  // B[k][j] omits the outer iterator, so those distances depend on where in
  // the sweep the reuse happens and the corner samples cannot see that. The
  // exact bins are 0 (read-modify-write), 3 (innermost-carried), 4 (tmp store
  // to next-cell read) and 2*Nk+2 (A carried by j). B's mass, (Ni-1)*Nj*Nk,
  // stays conserved but lands at fitted distances instead of the oracle's
  // spread.
  LoopNestSpec demo = fixtures::demo_spec();
  for (const auto& bounds : std::vector<std::vector<std::int64_t>>{
           {4, 4, 4}, {5, 6, 7}, {8, 5, 9}}) {
    const std::int64_t ni = bounds[0], nj = bounds[1], nk = bounds[2];
    Block block = loop_block_for(demo.nests[1], bounds);
    BlockProfile profile = predict_block(block);
    OracleResult oracle = oracle_at(demo.nests[1], bounds);
    INFO("bounds " << ni << "-" << nj << "-" << nk);

    CHECK(profile.cold_total() == oracle.hist.cold());
    CHECK(profile.hist.reuse_total() == oracle.hist.reuse_total());

    const std::vector<std::int64_t> exact_bins = {0, 3, 4, 2 * nk + 2};
    std::int64_t stable_mass = 0;
    for (std::int64_t d : exact_bins) {
      INFO("bin " << d);
      REQUIRE(profile.hist.bins.count(d) == 1);
      REQUIRE(oracle.hist.bins.count(d) == 1);
      CHECK(profile.hist.bins.at(d) == oracle.hist.bins.at(d));
      stable_mass += profile.hist.bins.at(d);
    }
    CHECK(profile.hist.reuse_total() - stable_mass == (ni - 1) * nj * nk);
    CHECK_FALSE(profile.warnings.empty()); // the approximation announces itself
  }
}

TEST_CASE("bounds override redirects the dilation target", "[predictor]") {
  LoopNestSpec demo = fixtures::demo_spec();
  Block block = loop_block_for(demo.nests[1], {4, 4, 4});
  BlockProfile at_traced = predict_block(block);
  BlockProfile at_other = predict_block(block, {6, 6, 6});
  CHECK(at_traced.total_accesses == 4 * 4 * (1 + 4 * 5));
  CHECK(at_other.total_accesses == 6 * 6 * (1 + 6 * 5));
  CHECK_THROWS_AS(predict_block(block, {6, 6}), Error);    // must name all loops
  CHECK_THROWS_AS(predict_block(block, {6, 0, 6}), Error); // positive bounds only
}

TEST_CASE("plain blocks replay their scalars exactly", "[predictor][plain]") {
  auto blocks = separate_blocks(parse_trace("['a', 'b', 'a', 'i', '[2', 'x', ']']"));
  REQUIRE(blocks.size() == 2);
  BlockProfile profile = profile_plain_block(blocks[0], next_loop_binding(blocks, 0));
  CHECK(profile.total_accesses == 3); // the trailing i binds the loop
  CHECK(profile.hist.bins.at(1) == 1); // a .. b .. a
  CHECK(profile.cold_scalars == std::set<std::string>{"a", "b"});
}

TEST_CASE("prediction agrees with the oracle on random affine nests", "[predictor][property]") {
  // depth-2 nests mixing streaming arrays, row reuse, and scalars
  std::mt19937 rng(2024);
  for (int round = 0; round < 20; ++round) {
    Nest nest;
    nest.loops = {{
                      "i",
                      std::uniform_int_distribution<std::int64_t>(4, 8)(rng),
                      "",
                  },
                  {
                      "j",
                      std::uniform_int_distribution<std::int64_t>(4, 8)(rng),
                      "",
                  }};
    Stmt stmt;
    stmt.depth = 2;
    int shape = std::uniform_int_distribution<int>(0, 3)(rng);
    switch (shape) {
      case 0: // dot-product style
        stmt.accesses = {Access::array("A", {"i", "j"}), Access::array("x", {"j"}),
                         Access::scalar("acc")};
        break;
      case 1: // row broadcast
        stmt.accesses = {Access::array("A", {"i"}), Access::array("B", {"i", "j"})};
        break;
      case 2: // pure streaming with a scalar
        stmt.accesses = {Access::scalar("c"), Access::array("B", {"i", "j"})};
        break;
      default: // read-modify-write
        stmt.accesses = {Access::array("x", {"j"}), Access::array("y", {"i"}),
                         Access::array("y", {"i"})};
        break;
    }
    nest.body.push_back(stmt);
    LoopNestSpec spec{"gen", {}, {nest}};
    validate_spec(spec);

    auto blocks = separate_blocks(parse_trace(serialize_trace(synth_annotated(spec))));
    BlockProfile profile = predict_block(blocks.back());
    OracleResult oracle = oracle_from_spec(spec);
    INFO("shape " << shape << " bounds " << nest.loops[0].bound << "x" << nest.loops[1].bound);
    CHECK(profile.hist.reuse_total() + profile.cold_total() == total_accesses(spec));
    CHECK(profile.cold_total() == oracle.hist.cold());
    ReuseHistogram oracle_reuse = oracle.hist;
    oracle_reuse.bins.erase(-1);
    CHECK(profile.hist.bins == oracle_reuse.bins);
  }
}
