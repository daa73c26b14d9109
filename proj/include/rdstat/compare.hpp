#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdstat/cache_model.hpp"
#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"

// Side-by-side evaluation of two reuse histograms (usually predicted vs
// exact): per-bin errors, totals, cold counts, and the hit rates both imply
// for a few standard cache shapes. Bins where both inputs stay under
// `min_freq` are noise for plotting and per-bin error purposes and are left
// out of the rows; totals always cover everything.

namespace rdstat {

struct CompareOptions {
  std::string label_a = "a";
  std::string label_b = "b"; // reference side for relative errors
  std::int64_t min_freq = 800;
  bool with_hit_rates = true;
  std::optional<double> elapsed_a; // seconds, optional timing sidecar
  std::optional<double> elapsed_b;
};

struct BinRow {
  std::int64_t distance = 0; // -1 means cold
  std::int64_t freq_a = 0;
  std::int64_t freq_b = 0;
  std::int64_t abs_err = 0;
  std::optional<double> rel_err; // |a-b| / b, absent when b == 0
};

struct HitRateRow {
  std::string cache;
  double rate_a = 0.0;
  double rate_b = 0.0;
};

struct ComparisonReport {
  CompareOptions opts;
  std::int64_t total_a = 0, total_b = 0;
  std::int64_t cold_a = 0, cold_b = 0;
  std::vector<BinRow> rows;
  std::optional<double> max_rel_err; // across rows that have one
  std::vector<HitRateRow> hit_rates;
};

inline std::vector<std::pair<std::string, CacheConfig>> standard_cache_configs() {
  return {
      {"32K", CacheConfig{32 * 1024, 64, 8, 8}},
      {"256K", CacheConfig{256 * 1024, 64, 8, 8}},
      {"1M", CacheConfig{1024 * 1024, 64, 8, 8}},
  };
}

inline ComparisonReport compare_histograms(const ReuseHistogram& a, const ReuseHistogram& b,
                                           const CompareOptions& opts = {}) {
  ComparisonReport report;
  report.opts = opts;
  report.total_a = a.total();
  report.total_b = b.total();
  report.cold_a = a.cold();
  report.cold_b = b.cold();

  std::vector<std::int64_t> keys;
  for (const auto& [d, n] : a.bins) keys.push_back(d);
  for (const auto& [d, n] : b.bins) keys.push_back(d);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  for (std::int64_t d : keys) {
    auto freq_in = [d](const ReuseHistogram& h) {
      auto it = h.bins.find(d);
      return it == h.bins.end() ? std::int64_t{0} : it->second;
    };
    BinRow row;
    row.distance = d;
    row.freq_a = freq_in(a);
    row.freq_b = freq_in(b);
    if (std::max(row.freq_a, row.freq_b) < opts.min_freq) continue;
    row.abs_err = std::abs(row.freq_a - row.freq_b);
    if (row.freq_b != 0) {
      row.rel_err = static_cast<double>(row.abs_err) / static_cast<double>(row.freq_b);
      if (!report.max_rel_err || *row.rel_err > *report.max_rel_err)
        report.max_rel_err = row.rel_err;
    }
    report.rows.push_back(row);
  }

  if (opts.with_hit_rates && report.total_a > 0 && report.total_b > 0) {
    for (const auto& [label, config] : standard_cache_configs())
      report.hit_rates.push_back({label, hit_rate(a, config), hit_rate(b, config)});
  }
  return report;
}

inline nlohmann::json compare_to_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["a"] = r.opts.label_a;
  j["b"] = r.opts.label_b;
  j["min_freq"] = r.opts.min_freq;
  j["total"] = {{"a", r.total_a}, {"b", r.total_b}};
  j["cold"] = {{"a", r.cold_a}, {"b", r.cold_b}};
  nlohmann::json bins = nlohmann::json::array();
  for (const BinRow& row : r.rows) {
    nlohmann::json jr = {{"distance", row.distance},
                         {"a", row.freq_a},
                         {"b", row.freq_b},
                         {"abs_err", row.abs_err}};
    jr["rel_err"] = row.rel_err ? nlohmann::json(*row.rel_err) : nlohmann::json(nullptr);
    bins.push_back(jr);
  }
  j["bins"] = bins;
  j["max_rel_err"] = r.max_rel_err ? nlohmann::json(*r.max_rel_err) : nlohmann::json(nullptr);
  nlohmann::json rates = nlohmann::json::array();
  for (const HitRateRow& row : r.hit_rates)
    rates.push_back({{"cache", row.cache},
                     {"a", row.rate_a},
                     {"b", row.rate_b},
                     {"diff", std::abs(row.rate_a - row.rate_b)}});
  j["hit_rate"] = rates;
  nlohmann::json timing;
  timing["a"] = r.opts.elapsed_a ? nlohmann::json(*r.opts.elapsed_a) : nlohmann::json(nullptr);
  timing["b"] = r.opts.elapsed_b ? nlohmann::json(*r.opts.elapsed_b) : nlohmann::json(nullptr);
  timing["speedup_a_over_b"] = (r.opts.elapsed_a && r.opts.elapsed_b && *r.opts.elapsed_a > 0)
                                   ? nlohmann::json(*r.opts.elapsed_b / *r.opts.elapsed_a)
                                   : nlohmann::json(nullptr);
  j["elapsed_seconds"] = timing;
  return j;
}

inline std::string compare_to_csv(const ComparisonReport& r) {
  std::ostringstream out;
  out << "distance," << r.opts.label_a << "," << r.opts.label_b << ",abs_err,rel_err\n";
  for (const BinRow& row : r.rows) {
    out << row.distance << "," << row.freq_a << "," << row.freq_b << "," << row.abs_err << ",";
    if (row.rel_err) out << *row.rel_err;
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Plain SVG bar charts, no plotting dependency. Distances are treated as
// categories (one slot per populated bin), which is the only readable way to
// draw histograms whose keys span several orders of magnitude.

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<std::int64_t> values; // parallel to the category labels
};

inline std::string svg_bar_chart(const std::string& title,
                                 const std::vector<std::string>& categories,
                                 const std::vector<SvgSeries>& series) {
  const double width = 960, height = 420;
  const double left = 80, right = 24, top = 48, bottom = 84;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  std::int64_t peak = 1;
  for (const SvgSeries& s : series)
    for (std::int64_t v : s.values) peak = std::max(peak, v);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << xml_escape(title) << "</text>\n";

  // horizontal gridlines at quarters of the peak
  for (int q = 0; q <= 4; ++q) {
    double frac = q / 4.0;
    double y = top + plot_h * (1.0 - frac);
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + plot_w << "\" y2=\""
        << y << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << static_cast<std::int64_t>(std::llround(frac * static_cast<double>(peak)))
        << "</text>\n";
  }

  const std::size_t ncat = categories.size();
  const std::size_t nser = std::max<std::size_t>(1, series.size());
  const double slot = ncat ? plot_w / static_cast<double>(ncat) : plot_w;
  const double bar = slot * 0.8 / static_cast<double>(nser);
  const bool tilt = ncat > 12;
  for (std::size_t c = 0; c < ncat; ++c) {
    double x0 = left + slot * static_cast<double>(c) + slot * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      double v = static_cast<double>(series[s].values[c]);
      double h = plot_h * v / static_cast<double>(peak);
      out << "<rect x=\"" << x0 + bar * static_cast<double>(s) << "\" y=\"" << top + plot_h - h
          << "\" width=\"" << bar << "\" height=\"" << h << "\" fill=\"" << series[s].color
          << "\"/>\n";
    }
    double lx = left + slot * (static_cast<double>(c) + 0.5);
    double ly = top + plot_h + 16;
    out << "<text x=\"" << lx << "\" y=\"" << ly << "\" font-family=\"sans-serif\" font-size=\"11\""
        << " text-anchor=\"" << (tilt ? "end" : "middle") << "\"";
    if (tilt) out << " transform=\"rotate(-45 " << lx << " " << ly << ")\"";
    out << ">" << xml_escape(categories[c]) << "</text>\n";
  }

  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<text x=\"20\" y=\"" << top + plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << top + plot_h / 2 << ")\">frequency</text>\n";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">reuse distance"
      << "</text>\n";

  double legend_x = left + plot_w - 180, legend_y = top + 8;
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<rect x=\"" << legend_x << "\" y=\"" << legend_y + 18.0 * static_cast<double>(s)
        << "\" width=\"12\" height=\"12\" fill=\"" << series[s].color << "\"/>\n";
    out << "<text x=\"" << legend_x + 18 << "\" y=\"" << legend_y + 18.0 * static_cast<double>(s) + 10
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(series[s].label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

} // namespace detail

inline std::string histogram_svg(const ReuseHistogram& hist, const std::string& title,
                                 std::int64_t min_freq = 0) {
  std::vector<std::string> categories;
  detail::SvgSeries series{"frequency", "#4477aa", {}};
  for (const auto& [d, n] : hist.bins) {
    if (d >= 0 && n < min_freq) continue;
    categories.push_back(d < 0 ? "cold" : std::to_string(d));
    series.values.push_back(n);
  }
  return detail::svg_bar_chart(title, categories, {series});
}

inline std::string compare_svg(const ComparisonReport& r, const std::string& title) {
  std::vector<std::string> categories;
  detail::SvgSeries sa{r.opts.label_a, "#4477aa", {}};
  detail::SvgSeries sb{r.opts.label_b, "#ee6677", {}};
  for (const BinRow& row : r.rows) {
    categories.push_back(row.distance < 0 ? "cold" : std::to_string(row.distance));
    sa.values.push_back(row.freq_a);
    sb.values.push_back(row.freq_b);
  }
  return detail::svg_bar_chart(title, categories, {sa, sb});
}

} // namespace rdstat
