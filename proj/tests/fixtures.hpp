#pragma once

// Shared fixtures: the reference annotated trace for two chained matrix
// products (scalar prologue, 100-200-300 nest into tmp, 150-250-350 nest
// into D) and the equivalent nest description.

#include <string>

#include <json.hpp>

#include "rdstat/loopnest.hpp"

namespace fixtures {

// Loop controller scalars echo around every begin/end marker, subscript
// loads precede each array token, and a stray controller read trails each
// loop; the parser keeps all of them and reconstruction sorts out which are
// loop machinery.
inline const char* kMmTrace =
    "['retval', 'alpha', 'beta', 'i', '[100', 'i', 'j', '[200', 'j', 'i', 'j', 'tmp_array-i-j', "
    "'k', '[300', 'k', 'alpha', 'i', 'k', 'A_array-i-k', 'k', 'j', 'B_array-k-j', 'i', 'j', "
    "'tmp_array-i-j', 'tmp_array-i-j', 'k', 'k', ']', 'k', 'j', 'j', ']', 'j', 'i', 'i', ']', "
    "'i', 'i', '[150', 'i', 'j', '[250', 'j', 'beta', 'i', 'j', 'D_array-i-j', 'D_array-i-j', "
    "'k', '[350', 'k', 'i', 'k', 'tmp_array-i-k', 'k', 'j', 'C_array-k-j', 'i', 'j', "
    "'D_array-i-j', 'D_array-i-j', 'k', 'k', ']', 'k', 'j', 'j', ']', 'j', 'i', 'i', ']', 'i']";

// Clean-room description of the same program: statement accesses only, no
// loop machinery tokens.
inline const char* kDemoSpecJson = R"json({
  "name": "demo_mm",
  "nests": [
    { "body": [ { "depth": 0, "accesses": ["retval", "alpha", "beta"] } ] },
    { "loops": [ { "iter": "i", "bound": 100 },
                 { "iter": "j", "bound": 200 },
                 { "iter": "k", "bound": 300 } ],
      "body": [ { "depth": 2, "accesses": ["tmp[i][j]"] },
                { "depth": 3, "accesses": ["alpha", "A[i][k]", "B[k][j]",
                                           "tmp[i][j]", "tmp[i][j]"] } ] },
    { "loops": [ { "iter": "i", "bound": 150 },
                 { "iter": "j", "bound": 250 },
                 { "iter": "k", "bound": 350 } ],
      "body": [ { "depth": 2, "accesses": ["beta", "D[i][j]", "D[i][j]"] },
                { "depth": 3, "accesses": ["tmp[i][k]", "C[k][j]",
                                           "D[i][j]", "D[i][j]"] } ] }
  ]
})json";

inline rdstat::LoopNestSpec spec_from_text(const std::string& text) {
  return rdstat::spec_from_json(nlohmann::json::parse(text));
}

inline rdstat::LoopNestSpec demo_spec() { return spec_from_text(kDemoSpecJson); }

// The two-block overlap scenario: both nests sweep tmp[i][k], the second
// over a strictly larger rectangle, so 100*300 cells are re-touches.
inline const char* kOverlapSpecJson = R"json({
  "name": "overlap",
  "nests": [
    { "loops": [ { "iter": "i", "bound": 100 },
                 { "iter": "k", "bound": 300 } ],
      "body": [ { "depth": 2, "accesses": ["tmp[i][k]"] } ] },
    { "loops": [ { "iter": "i", "bound": 150 },
                 { "iter": "k", "bound": 350 } ],
      "body": [ { "depth": 2, "accesses": ["tmp[i][k]"] } ] }
  ]
})json";

inline rdstat::LoopNestSpec overlap_spec() { return spec_from_text(kOverlapSpecJson); }

} // namespace fixtures
