// rdstat: static reuse-distance profiles for loop nest programs.
//
// Subcommands cover the whole pipeline: synthesize an annotated trace from a
// nest description, unroll to the explicit event stream, predict a reuse
// profile statically, compute the exact profile with the unrolled oracle,
// turn a profile into a cache hit rate, diff two profiles, and benchmark
// predictor against oracle.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdstat/rdstat.hpp"

namespace {

using nlohmann::json;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) rdstat::fail(rdstat::Fault::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write through a temp file and rename so readers never observe a torn file.
void write_output(const std::string& path, const std::string& content) {
  if (path == "-" || path.empty()) {
    std::cout << content;
    return;
  }
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) rdstat::fail(rdstat::Fault::Io, "cannot create " + tmp.string());
    out << content;
    if (!out.flush()) rdstat::fail(rdstat::Fault::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    rdstat::fail(rdstat::Fault::Io, "cannot move output into place at " + path);
  }
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) rdstat::fail(rdstat::Fault::Io, what + " is not valid JSON");
  return j;
}

std::map<std::string, std::int64_t> collect_bindings(const std::string& params_path,
                                                     const std::vector<std::string>& sets) {
  std::map<std::string, std::int64_t> bound;
  if (!params_path.empty()) {
    json j = parse_json(read_input(params_path), params_path);
    if (!j.is_object())
      rdstat::fail(rdstat::Fault::Io, params_path + " must be a JSON object of name -> integer");
    for (const auto& [name, value] : j.items()) {
      if (!value.is_number_integer())
        rdstat::fail(rdstat::Fault::Io, params_path + ": parameter " + name + " is not an integer");
      bound[name] = value.get<std::int64_t>();
    }
  }
  for (const std::string& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      rdstat::fail(rdstat::Fault::BadSpec, "--set expects NAME=VALUE, got \"" + kv + "\"");
    try {
      bound[kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
    } catch (const std::exception&) {
      rdstat::fail(rdstat::Fault::BadSpec, "--set value in \"" + kv + "\" is not an integer");
    }
  }
  return bound;
}

// Program input: either a nest description (JSON object) or an annotated
// trace (anything else). Sniffing on the first meaningful byte is enough
// because traces start with '[' or an identifier.
struct ProgramInput {
  std::optional<rdstat::LoopNestSpec> spec; // resolved
  std::optional<rdstat::AnnotatedTrace> trace;
  std::map<std::string, std::int64_t> trace_bounds; // --set overrides for traces
};

ProgramInput load_program(const std::string& path, const std::string& params_path,
                          const std::vector<std::string>& sets) {
  ProgramInput input;
  std::string text = read_input(path);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    rdstat::LoopNestSpec spec = rdstat::spec_from_json(parse_json(text, path));
    input.spec = rdstat::resolve_spec(spec, collect_bindings(params_path, sets));
  } else {
    input.trace = rdstat::parse_trace(text);
    input.trace_bounds = collect_bindings(params_path, sets);
  }
  return input;
}

rdstat::ProgramProfile predict_input(const ProgramInput& input) {
  if (input.spec) return rdstat::predict_from_spec(*input.spec);
  return rdstat::predict_from_trace(*input.trace, input.trace_bounds);
}

rdstat::OracleResult oracle_input(const ProgramInput& input, std::int64_t cap) {
  if (input.spec) return rdstat::oracle_from_spec(*input.spec, cap);
  if (!input.trace_bounds.empty())
    rdstat::fail(rdstat::Fault::BadSpec, "--set bounds apply to nest descriptions, not traces");
  return rdstat::oracle_from_trace(*input.trace, cap);
}

void print_profile_summary(const rdstat::ProgramProfile& profile, std::ostream& out) {
  out << "accesses      " << profile.hist.total() << "\n";
  out << "cold misses   " << profile.hist.cold() << "\n";
  out << "reuse bins    " << (profile.hist.bins.size() - (profile.hist.bins.count(-1) ? 1 : 0))
      << "\n";
  out << "blocks        " << profile.per_block.size() << "\n";
  std::vector<std::pair<std::int64_t, std::int64_t>> top;
  for (const auto& [d, n] : profile.hist.bins)
    if (d >= 0) top.push_back({n, d});
  std::sort(top.rbegin(), top.rend());
  if (top.size() > 10) top.resize(10);
  if (!top.empty()) out << "top bins (distance: frequency)\n";
  for (const auto& [n, d] : top) out << "  " << d << ": " << n << "\n";
  for (const std::string& w : profile.warnings) out << "warning: " << w << "\n";
}

double median_seconds(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

template <typename Fn>
double time_runs(int repeat, Fn&& fn) {
  std::vector<double> times;
  for (int r = 0; r < repeat; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return median_seconds(std::move(times));
}

int run(int argc, char** argv) {
  CLI::App app{"static reuse-distance and cache hit-rate estimation for loop nests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rdstat 1.0.0");

  // shared option storage; each subcommand wires the subset it needs
  std::string in_path, out_path, params_path, csv_path, svg_path;
  std::vector<std::string> sets;
  auto add_input = [&](CLI::App* cmd, bool with_bounds = true) {
    cmd->add_option("input", in_path, "nest description JSON or annotated trace ('-' for stdin)")
        ->required();
    if (with_bounds) {
      cmd->add_option("-p,--params", params_path, "JSON object binding parameters to integers");
      cmd->add_option("-s,--set", sets, "bind one parameter, NAME=VALUE (repeatable)");
    }
  };

  CLI::App* synth = app.add_subcommand("synth", "emit the annotated trace for a nest description");
  add_input(synth);
  synth->add_option("-o,--output", out_path, "output path (default stdout)");

  CLI::App* unroll_cmd =
      app.add_subcommand("unroll", "emit the explicit access stream, one location per line");
  add_input(unroll_cmd);
  unroll_cmd->add_option("-o,--output", out_path, "output path (default stdout)");
  std::int64_t head = 0;
  unroll_cmd->add_option("--head", head, "print only the first N events");

  CLI::App* predict = app.add_subcommand("predict", "statically predict the reuse profile");
  add_input(predict);
  predict->add_option("-o,--output", out_path, "profile JSON path (default stdout)");
  predict->add_option("--csv", csv_path, "also write the histogram as distance,frequency CSV");
  predict->add_option("--svg", svg_path, "also write a bar chart of the histogram");
  std::int64_t svg_min_freq = 0;
  predict->add_option("--svg-min-freq", svg_min_freq, "hide bins below this frequency in the chart");

  CLI::App* oracle = app.add_subcommand("oracle", "exact reuse profile via full unrolling");
  add_input(oracle);
  oracle->add_option("-o,--output", out_path, "histogram JSON path (default stdout)");
  oracle->add_option("--csv", csv_path, "also write the histogram as distance,frequency CSV");
  oracle->add_option("--svg", svg_path, "also write a bar chart of the histogram");

  CLI::App* hitrate = app.add_subcommand("hitrate", "estimate the cache hit rate of a profile");
  hitrate->add_option("input", in_path, "profile JSON from predict/oracle ('-' for stdin)")
      ->required();
  std::string capacity = "32K";
  std::int64_t line_bytes = 64, assoc = 8, elem_bytes = 8;
  hitrate->add_option("--capacity", capacity, "cache capacity, e.g. 32K, 256K, 1M")
      ->capture_default_str();
  hitrate->add_option("--line", line_bytes, "line size in bytes")->capture_default_str();
  hitrate->add_option("--assoc", assoc, "associativity")->capture_default_str();
  hitrate->add_option("--elem", elem_bytes, "array element size in bytes")->capture_default_str();
  bool hitrate_json = false;
  hitrate->add_flag("--json", hitrate_json, "emit a JSON object instead of a bare number");

  CLI::App* compare = app.add_subcommand("compare", "diff two profiles bin by bin");
  std::string path_a, path_b, label_a = "a", label_b = "b";
  std::int64_t min_freq = 800;
  double elapsed_a = -1.0, elapsed_b = -1.0;
  compare->add_option("a", path_a, "profile JSON")->required();
  compare->add_option("b", path_b, "reference profile JSON")->required();
  compare->add_option("--label-a", label_a)->capture_default_str();
  compare->add_option("--label-b", label_b)->capture_default_str();
  compare->add_option("--min-freq", min_freq, "skip bins below this frequency in both inputs")
      ->capture_default_str();
  compare->add_option("--elapsed-a", elapsed_a, "seconds spent producing a (recorded in output)");
  compare->add_option("--elapsed-b", elapsed_b, "seconds spent producing b (recorded in output)");
  compare->add_option("-o,--output", out_path, "report JSON path (default stdout)");
  compare->add_option("--csv", csv_path, "also write per-bin rows as CSV");
  compare->add_option("--svg", svg_path, "also write a side-by-side bar chart");

  CLI::App* bench = app.add_subcommand("bench", "time the predictor against the oracle");
  add_input(bench);
  int repeat = 3;
  bench->add_option("--repeat", repeat, "runs per side, median reported")->capture_default_str();
  bool predict_only = false, oracle_only = false;
  bench->add_flag("--predict-only", predict_only, "skip the oracle side");
  bench->add_flag("--oracle-only", oracle_only, "skip the predictor side");
  bench->add_option("-o,--output", out_path, "timing JSON path (default stdout)");

  CLI11_PARSE(app, argc, argv);
  const std::int64_t cap = rdstat::unroll_cap_from_env();

  if (synth->parsed()) {
    ProgramInput input = load_program(in_path, params_path, sets);
    if (!input.spec)
      rdstat::fail(rdstat::Fault::BadSpec, "synth needs a nest description, not a trace");
    write_output(out_path, rdstat::serialize_trace(rdstat::synth_annotated(*input.spec)) + "\n");
    return 0;
  }

  if (unroll_cmd->parsed()) {
    ProgramInput input = load_program(in_path, params_path, sets);
    std::ostringstream lines;
    std::int64_t emitted = 0;
    auto emit_name = [&](const std::string& name) {
      if (head > 0 && emitted >= head) return;
      lines << name << "\n";
      ++emitted;
    };
    if (input.spec) {
      rdstat::LocationTable table(*input.spec);
      rdstat::visit_unroll(
          *input.spec, table,
          [&](const rdstat::AccessEvent& ev, const auto&) { emit_name(table.decode(ev.loc)); },
          cap);
    } else {
      // replay through the oracle path's reconstruction for identical rules
      auto blocks = rdstat::separate_blocks(*input.trace);
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].kind == rdstat::BlockKind::Plain) {
          std::vector<std::string> names;
          for (const auto& tok : blocks[i].tokens) names.push_back(tok.name);
          const std::string binding = rdstat::next_loop_binding(blocks, i);
          if (!binding.empty() && !names.empty() && names.back() == binding) names.pop_back();
          for (const auto& n : names) emit_name(n);
        } else {
          rdstat::LoopNestSpec single;
          single.name = "block" + std::to_string(blocks[i].ordinal);
          single.nests.push_back(rdstat::nest_from_block(blocks[i]));
          rdstat::LocationTable table(single);
          rdstat::visit_unroll(
              single, table,
              [&](const rdstat::AccessEvent& ev, const auto&) { emit_name(table.decode(ev.loc)); },
              cap);
        }
      }
    }
    write_output(out_path, lines.str());
    return 0;
  }

  if (predict->parsed()) {
    ProgramInput input = load_program(in_path, params_path, sets);
    rdstat::ProgramProfile profile = predict_input(input);
    std::string payload = rdstat::profile_to_json(profile, "predict").dump(2) + "\n";
    write_output(out_path, payload);
    if (!csv_path.empty()) write_output(csv_path, rdstat::hist_to_csv(profile.hist));
    if (!svg_path.empty())
      write_output(svg_path,
                   rdstat::histogram_svg(profile.hist, "predicted reuse profile", svg_min_freq));
    if (!out_path.empty() && out_path != "-") print_profile_summary(profile, std::cout);
    return 0;
  }

  if (oracle->parsed()) {
    ProgramInput input = load_program(in_path, params_path, sets);
    rdstat::OracleResult result = oracle_input(input, cap);
    json j;
    j["pipeline"] = "oracle";
    j["histogram"] = rdstat::hist_to_json(result.hist);
    j["distinct_locations"] = result.distinct;
    write_output(out_path, j.dump(2) + "\n");
    if (!csv_path.empty()) write_output(csv_path, rdstat::hist_to_csv(result.hist));
    if (!svg_path.empty())
      write_output(svg_path, rdstat::histogram_svg(result.hist, "exact reuse profile"));
    if (!out_path.empty() && out_path != "-") {
      std::cout << "accesses      " << result.hist.total() << "\n";
      std::cout << "cold misses   " << result.hist.cold() << "\n";
      std::cout << "distinct locs " << result.distinct << "\n";
    }
    return 0;
  }

  if (hitrate->parsed()) {
    rdstat::ProgramProfile profile =
        rdstat::profile_from_json(parse_json(read_input(in_path), in_path));
    rdstat::CacheConfig config{rdstat::parse_size_bytes(capacity), line_bytes, assoc, elem_bytes};
    double rate = rdstat::hit_rate(profile.hist, config);
    if (hitrate_json) {
      json j;
      j["capacity_bytes"] = config.capacity_bytes;
      j["line_bytes"] = config.line_bytes;
      j["assoc"] = config.assoc;
      j["elem_bytes"] = config.elem_bytes;
      j["sets"] = config.sets();
      j["hit_rate"] = rate;
      write_output(out_path, j.dump(2) + "\n");
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f\n", rate);
      write_output(out_path, buf);
    }
    return 0;
  }

  if (compare->parsed()) {
    rdstat::ProgramProfile a = rdstat::profile_from_json(parse_json(read_input(path_a), path_a));
    rdstat::ProgramProfile b = rdstat::profile_from_json(parse_json(read_input(path_b), path_b));
    rdstat::CompareOptions opts;
    opts.label_a = label_a;
    opts.label_b = label_b;
    opts.min_freq = min_freq;
    if (elapsed_a >= 0) opts.elapsed_a = elapsed_a;
    if (elapsed_b >= 0) opts.elapsed_b = elapsed_b;
    rdstat::ComparisonReport report = rdstat::compare_histograms(a.hist, b.hist, opts);
    write_output(out_path, rdstat::compare_to_json(report).dump(2) + "\n");
    if (!csv_path.empty()) write_output(csv_path, rdstat::compare_to_csv(report));
    if (!svg_path.empty())
      write_output(svg_path, rdstat::compare_svg(report, label_a + " vs " + label_b));
    return 0;
  }

  if (bench->parsed()) {
    ProgramInput input = load_program(in_path, params_path, sets);
    if (repeat < 1) repeat = 1;
    json j;
    double predict_s = -1, oracle_s = -1;
    if (!oracle_only) {
      rdstat::ProgramProfile profile; // keep the last run around for totals
      predict_s = time_runs(repeat, [&] { profile = predict_input(input); });
      j["predict_seconds"] = predict_s;
      j["accesses"] = profile.hist.total();
    }
    if (!predict_only) {
      rdstat::OracleResult result;
      oracle_s = time_runs(repeat, [&] { result = oracle_input(input, cap); });
      j["oracle_seconds"] = oracle_s;
      j["accesses"] = result.hist.total();
    }
    if (predict_s > 0 && oracle_s > 0) j["speedup"] = oracle_s / predict_s;
    j["repeat"] = repeat;
    write_output(out_path, j.dump(2) + "\n");
    return 0;
  }

  return 1; // unreachable: require_subcommand(1)
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rdstat::Error& e) {
    std::cerr << "rdstat: " << e.what() << "\n";
    return rdstat::exit_code_for(e.fault());
  } catch (const std::exception& e) {
    std::cerr << "rdstat: internal error: " << e.what() << "\n";
    return 4;
  }
}
