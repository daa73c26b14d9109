#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>

#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"

// Probabilistic hit-rate estimate for a set-associative LRU cache fed by a
// reuse-distance histogram. A reference with d distinct lines touched since
// its previous use hits iff fewer than `assoc` of those lines landed in its
// own set; under uniform set mapping that count is Binomial(d, 1/sets):
//
//   P(hit | d) = sum_{a=0}^{assoc-1} C(d, a) (1/sets)^a (1 - 1/sets)^(d - a)
//
// Distances are measured in array elements and converted to cache lines
// before the formula is applied.

namespace rdstat {

struct CacheConfig {
  std::int64_t capacity_bytes = 0;
  std::int64_t line_bytes = 64;
  std::int64_t assoc = 8;
  std::int64_t elem_bytes = 8;

  std::int64_t sets() const { return capacity_bytes / (line_bytes * assoc); }
};

inline void validate_cache_config(const CacheConfig& c) {
  if (c.capacity_bytes <= 0 || c.line_bytes <= 0 || c.assoc <= 0 || c.elem_bytes <= 0)
    fail(Fault::BadCacheConfig, "cache geometry values must be positive");
  if (c.capacity_bytes % (c.line_bytes * c.assoc) != 0)
    fail(Fault::BadCacheConfig,
         "capacity " + std::to_string(c.capacity_bytes) + " is not divisible by line*assoc = " +
             std::to_string(c.line_bytes * c.assoc));
}

// "32K", "256k", "1M", "8G" or a plain byte count.
inline std::int64_t parse_size_bytes(const std::string& text) {
  if (text.empty()) fail(Fault::BadCacheConfig, "empty size");
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &pos);
  } catch (const std::exception&) {
    fail(Fault::BadCacheConfig, "unreadable size \"" + text + "\"");
  }
  std::int64_t scale = 1;
  if (pos < text.size()) {
    if (pos + 1 != text.size()) fail(Fault::BadCacheConfig, "trailing junk in size \"" + text + "\"");
    switch (std::toupper(static_cast<unsigned char>(text[pos]))) {
      case 'K': scale = 1024; break;
      case 'M': scale = 1024 * 1024; break;
      case 'G': scale = 1024 * 1024 * 1024; break;
      default: fail(Fault::BadCacheConfig, "unknown size suffix in \"" + text + "\"");
    }
  }
  if (value <= 0) fail(Fault::BadCacheConfig, "size must be positive: \"" + text + "\"");
  return value * scale;
}

// d is in cache lines.
inline double hit_probability(std::int64_t d, const CacheConfig& config) {
  if (d < 0) return 0.0; // cold: no previous use to hit on
  if (d < config.assoc) return 1.0; // cannot be evicted by fewer than assoc lines
  std::int64_t sets = config.sets();
  if (sets <= 1) return 0.0; // fully associative with d >= assoc: evicted for sure
  double log_p = -std::log(static_cast<double>(sets));
  double log_q = std::log1p(-1.0 / static_cast<double>(sets));
  double dd = static_cast<double>(d);
  double sum = 0.0;
  for (std::int64_t a = 0; a < config.assoc; ++a) {
    double log_comb =
        std::lgamma(dd + 1.0) - std::lgamma(static_cast<double>(a) + 1.0) -
        std::lgamma(dd - static_cast<double>(a) + 1.0);
    sum += std::exp(log_comb + static_cast<double>(a) * log_p + (dd - static_cast<double>(a)) * log_q);
  }
  if (sum > 1.0) sum = 1.0;
  return sum;
}

inline std::int64_t elements_to_lines(std::int64_t d_elements, const CacheConfig& config) {
  if (d_elements <= 0) return d_elements;
  return (d_elements * config.elem_bytes + config.line_bytes - 1) / config.line_bytes;
}

inline double hit_rate(const ReuseHistogram& hist, const CacheConfig& config) {
  validate_cache_config(config);
  std::int64_t total = hist.total();
  if (total == 0) fail(Fault::EmptyHistogram, "cannot estimate a hit rate from an empty histogram");
  double weighted = 0.0;
  for (const auto& [d, freq] : hist.bins) {
    if (d < 0) continue; // cold misses contribute probability zero
    weighted += static_cast<double>(freq) * hit_probability(elements_to_lines(d, config), config);
  }
  return weighted / static_cast<double>(total);
}

} // namespace rdstat
