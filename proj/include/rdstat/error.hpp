#pragma once

#include <stdexcept>
#include <string>

// Error taxonomy for the whole toolkit. Every failure carries a Fault so the
// CLI can map it onto a process exit code without string matching.

namespace rdstat {

enum class Fault {
  // input-level problems (CLI exit code 2)
  MalformedToken,
  UnbalancedLoops,
  BadTripCount,
  UnboundIndex,
  BadSpec,
  UnresolvedParam,
  UnknownIterator,
  NonRectangularFootprint,
  ArityMismatch,
  DepthUnsupported,
  IncompleteSamples,
  ClassMismatch,
  UnionTooComplex,
  EmptyHistogram,
  BadCacheConfig,
  Io,
  // resource guard (exit code 3)
  CapExceeded,
  // broken internal invariant (exit code 4)
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(Fault fault, const std::string& what)
      : std::runtime_error(what), fault_(fault) {}

  Fault fault() const noexcept { return fault_; }

 private:
  Fault fault_;
};

// Suggested process exit code for a fault (the CLI contract).
inline int exit_code_for(Fault f) {
  switch (f) {
    case Fault::CapExceeded:
      return 3;
    case Fault::Internal:
      return 4;
    default:
      return 2;
  }
}

[[noreturn]] inline void fail(Fault fault, const std::string& what) {
  throw Error(fault, what);
}

} // namespace rdstat
