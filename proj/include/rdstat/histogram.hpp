#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rdstat/error.hpp"

// Reuse distance histogram. Distances are element-granularity stack
// distances; cold (first-touch) accesses live in the bin keyed -1.

namespace rdstat {

inline constexpr std::int64_t kColdKey = -1;

struct ReuseHistogram {
  std::map<std::int64_t, std::int64_t> bins;

  std::int64_t total() const {
    return std::accumulate(bins.begin(), bins.end(), std::int64_t{0},
                           [](std::int64_t acc, const auto& kv) { return acc + kv.second; });
  }

  std::int64_t cold() const {
    auto it = bins.find(kColdKey);
    return it == bins.end() ? 0 : it->second;
  }

  // Sum of the non-cold bins.
  std::int64_t reuse_total() const { return total() - cold(); }

  void add(std::int64_t distance, std::int64_t count = 1) {
    if (count == 0) return;
    auto it = bins.find(distance);
    if (it == bins.end()) {
      bins.emplace(distance, count);
    } else {
      it->second += count;
      if (it->second == 0) bins.erase(it);
    }
  }

  void merge_in(const ReuseHistogram& other) {
    for (const auto& [d, n] : other.bins) add(d, n);
  }

  bool operator==(const ReuseHistogram&) const = default;
};

inline nlohmann::json hist_to_json(const ReuseHistogram& h) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& [d, n] : h.bins) bins[std::to_string(d)] = n;
  return nlohmann::json{{"bins", bins}, {"total", h.total()}};
}

inline ReuseHistogram hist_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("bins") || !j.at("bins").is_object())
    fail(Fault::Io, "histogram JSON must be an object with a \"bins\" object");
  ReuseHistogram h;
  for (const auto& [key, val] : j.at("bins").items()) {
    std::int64_t d = 0;
    try {
      d = std::stoll(key);
    } catch (const std::exception&) {
      fail(Fault::Io, "histogram bin key is not an integer: \"" + key + "\"");
    }
    if (!val.is_number_integer())
      fail(Fault::Io, "histogram bin value for " + key + " is not an integer");
    h.add(d, val.get<std::int64_t>());
  }
  if (j.contains("total") && j.at("total").get<std::int64_t>() != h.total())
    fail(Fault::Io, "histogram JSON total does not match the sum of its bins");
  return h;
}

// CSV form: header + one "distance,frequency" row per bin, ascending distance.
inline std::string hist_to_csv(const ReuseHistogram& h) {
  std::ostringstream out;
  out << "distance,frequency\n";
  for (const auto& [d, n] : h.bins) out << d << ',' << n << '\n';
  return out.str();
}

} // namespace rdstat
