#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mopt/serialization.hpp"

namespace mopt {

/// One batch experiment: a problem instance, the methods to run on it, and
/// the multi-start setup. Initial points come from streams
/// (init_seed, "init", start<i>) so changing n_starts never perturbs
/// problem data or other starts.
struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<MethodConfig> methods;
  int n_starts = 100;
  double init_lo = -2.0;
  double init_hi = 2.0;
  std::uint64_t init_seed = 0;
  long max_iters = 500;
  std::string output_dir = "out";
};

inline void validate(const ExperimentConfig& cfg) {
  validate(cfg.problem);
  require(!cfg.methods.empty(), "ExperimentConfig: at least one method required");
  for (const auto& m : cfg.methods) validate(m);
  require(cfg.n_starts >= 1, "ExperimentConfig: n_starts must be at least 1");
  require(cfg.init_lo < cfg.init_hi, "ExperimentConfig: init_box must satisfy lo < hi");
  require(cfg.max_iters >= 0, "ExperimentConfig: max_iters must be nonnegative");
  require(!cfg.output_dir.empty(), "ExperimentConfig: output_dir must be set");
}

inline Json to_json(const ExperimentConfig& cfg) {
  Json methods = Json::array();
  for (const auto& m : cfg.methods) methods.push_back(to_json(m));
  return Json{{"problem", to_json(cfg.problem)},
              {"methods", methods},
              {"n_starts", cfg.n_starts},
              {"init_box", Json::array({cfg.init_lo, cfg.init_hi})},
              {"init_seed", cfg.init_seed},
              {"max_iters", cfg.max_iters},
              {"output_dir", cfg.output_dir}};
}

/// `problem` and `methods` are required; methods without their own max_iters
/// inherit the experiment-level value. Unknown keys are rejected.
inline ExperimentConfig experiment_config_from_json(const Json& j) {
  detail::check_keys(
      j, {"problem", "methods", "n_starts", "init_box", "init_seed", "max_iters", "output_dir"},
      "ExperimentConfig");
  require(j.contains("problem"), "ExperimentConfig: missing key 'problem'");
  require(j.contains("methods") && j.at("methods").is_array() && !j.at("methods").empty(),
          "ExperimentConfig: 'methods' must be a nonempty array");
  ExperimentConfig cfg;
  cfg.problem = problem_spec_from_json(j.at("problem"));
  if (j.contains("n_starts")) cfg.n_starts = j.at("n_starts").get<int>();
  if (j.contains("init_box")) {
    const Json& box = j.at("init_box");
    require(box.is_array() && box.size() == 2, "ExperimentConfig: init_box must be [lo, hi]");
    cfg.init_lo = box[0].get<double>();
    cfg.init_hi = box[1].get<double>();
  }
  if (j.contains("init_seed")) cfg.init_seed = detail::get_u64(j, "init_seed", "ExperimentConfig");
  if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<long>();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  for (const Json& mj : j.at("methods"))
    cfg.methods.push_back(method_config_from_json(mj, cfg.max_iters));
  validate(cfg);
  return cfg;
}

inline Vector initial_point(const ExperimentConfig& cfg, Index n, int start_index) {
  RngStream stream(cfg.init_seed, "init", "start" + std::to_string(start_index));
  return stream.uniform_vector(n, cfg.init_lo, cfg.init_hi);
}

inline std::string method_file_label(const ExperimentConfig& cfg, std::size_t mi) {
  return "m" + std::to_string(mi) + "_" + method_name(cfg.methods[mi].method);
}

inline std::string trace_to_csv(const RunTrace& trace) {
  std::string out = "k,wall_seconds,kkt_residual,iterate_gap,M_k,gamma_k,tau_k,restart_flag,"
                    "backtrack_count\n";
  for (const TraceRow& r : trace.records) {
    out += std::to_string(r.k);
    out += ',';
    out += fmt_e(r.wall_seconds);
    out += ',';
    out += fmt_e(r.kkt_residual);
    out += ',';
    out += fmt_e(r.iterate_gap);
    out += ',';
    out += fmt_e(r.M);
    out += ',';
    out += fmt_e(r.gamma);
    out += ',';
    out += fmt_e(r.tau);
    out += ',';
    out += r.restart_flag ? '1' : '0';
    out += ',';
    out += std::to_string(r.backtrack_count);
    out += '\n';
  }
  return out;
}

/// Write-then-rename so concurrent tasks never expose half-written files.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os.good()) throw ConfigError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os.good()) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct CmdReport {
  int failed_starts = 0;
  std::vector<std::string> errors;  // "<method>/<start>: what"
};

namespace detail {

inline void run_tasks(long count, int jobs, const std::function<void(long)>& task) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (long i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (long i; (i = next.fetch_add(1)) < count;) task(i);
    });
  for (auto& th : pool) th.join();
}

inline std::filesystem::path prepare_output_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path out(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string());
  write_file_atomic(out / "manifest.json", to_json(cfg).dump(2) + "\n");
  return out;
}

inline std::string start_tag(int start_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "start%03d", start_index);
  return buf;
}

/// Shared multi-start skeleton: runs every (method, start) pair, isolating
/// per-start failures, and hands each finished run to `consume`.
template <class Consume>
CmdReport for_each_start(const ExperimentConfig& cfg, const ObjectiveBundle& bundle, int jobs,
                         const std::function<MethodConfig(std::size_t)>& method_of,
                         Consume&& consume) {
  const long total = static_cast<long>(cfg.methods.size()) * cfg.n_starts;
  std::vector<std::string> errors(total);
  run_tasks(total, jobs, [&](long t) {
    const std::size_t mi = static_cast<std::size_t>(t) / cfg.n_starts;
    const int si = static_cast<int>(t % cfg.n_starts);
    try {
      const Vector x0 = initial_point(cfg, bundle.n, si);
      SolveResult res = run(bundle, method_of(mi), x0);
      consume(mi, si, std::move(res));
    } catch (const std::exception& e) {
      errors[t] = method_file_label(cfg, mi) + "/" + start_tag(si) + ": " + e.what();
    }
  });
  CmdReport report;
  for (const std::string& e : errors)
    if (!e.empty()) {
      ++report.failed_starts;
      report.errors.push_back(e);
    }
  return report;
}

inline void write_error_log(const std::filesystem::path& out, const CmdReport& report) {
  if (report.errors.empty()) return;
  Json j = Json::array();
  for (const std::string& e : report.errors) j.push_back(e);
  write_file_atomic(out / "errors.json", j.dump(2) + "\n");
}

}  // namespace detail

/// Writes one trace CSV per (method, start) plus a manifest echoing the
/// resolved config. Per-start solver failures are recorded in errors.json
/// without aborting the remaining starts.
inline CmdReport cmd_run(const ExperimentConfig& cfg, int jobs = 1) {
  validate(cfg);
  const auto out = detail::prepare_output_dir(cfg);
  const ObjectiveBundle bundle = make_bundle(cfg.problem);
  CmdReport report = detail::for_each_start(
      cfg, bundle, jobs, [&](std::size_t mi) { return cfg.methods[mi]; },
      [&](std::size_t mi, int si, SolveResult res) {
        const std::string name = method_file_label(cfg, mi) + "_" + detail::start_tag(si) + ".csv";
        write_file_atomic(out / name, trace_to_csv(res.trace));
      });
  detail::write_error_log(out, report);
  return report;
}

namespace detail {

struct ThresholdHit {
  std::optional<long> iters;
  double wall = std::numeric_limits<double>::quiet_NaN();
};

/// Lower median: element floor((n-1)/2) of the sorted values, with "never
/// reached" sorting last. Avoids arithmetic on infinities.
inline std::optional<long> lower_median_iters(std::vector<std::optional<long>> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a && b) return *a < *b;
    return a.has_value() && !b.has_value();
  });
  return v[(v.size() - 1) / 2];
}

inline double lower_median_wall(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace detail

/// Per method and residual threshold in {1e-2, 1e-4, 1e-6}: the median
/// (over starts) iteration count and wall time to first reach it, as CSV and
/// an aligned text table. Unreached thresholds show as inf.
inline CmdReport cmd_compare(const ExperimentConfig& cfg, int jobs = 1) {
  validate(cfg);
  require(cfg.methods.size() >= 2, "cmd_compare: need at least two methods");
  const auto out = detail::prepare_output_dir(cfg);
  const ObjectiveBundle bundle = make_bundle(cfg.problem);
  const std::vector<double> thresholds = {1e-2, 1e-4, 1e-6};

  std::vector<std::vector<detail::ThresholdHit>> hits(
      cfg.methods.size() * cfg.n_starts, std::vector<detail::ThresholdHit>(thresholds.size()));
  CmdReport report = detail::for_each_start(
      cfg, bundle, jobs, [&](std::size_t mi) { return cfg.methods[mi]; },
      [&](std::size_t mi, int si, SolveResult res) {
        auto& cell = hits[mi * cfg.n_starts + si];
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti)
          for (const TraceRow& row : res.trace.records)
            if (row.kkt_residual <= thresholds[ti]) {
              cell[ti] = {row.k, row.wall_seconds};
              break;
            }
      });

  std::string csv = "method,threshold,median_iters,median_wall_seconds\n";
  std::ostringstream txt;
  txt << "method          threshold   median_iters   median_wall_seconds\n";
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      std::vector<std::optional<long>> iters;
      std::vector<double> walls;
      for (int si = 0; si < cfg.n_starts; ++si) {
        const auto& hit = hits[mi * cfg.n_starts + si][ti];
        iters.push_back(hit.iters);
        walls.push_back(hit.iters ? hit.wall : std::numeric_limits<double>::infinity());
      }
      const auto med_iters = detail::lower_median_iters(std::move(iters));
      const double med_wall = detail::lower_median_wall(std::move(walls));
      const std::string label = method_file_label(cfg, mi);
      csv += label + "," + fmt_e(thresholds[ti]) + ",";
      csv += med_iters ? std::to_string(*med_iters) : std::string("inf");
      csv += ",";
      csv += med_iters ? fmt_e(med_wall) : std::string("inf");
      csv += "\n";
      // The infinity glyph is three bytes wide, so pad it two extra columns.
      const std::string iters_cell = med_iters ? std::to_string(*med_iters) : "∞";
      char line[128];
      std::snprintf(line, sizeof line, "%-15s %-11.0e %-*s %s\n", label.c_str(), thresholds[ti],
                    med_iters ? 14 : 16, iters_cell.c_str(),
                    med_iters ? fmt_e(med_wall).c_str() : "∞");
      txt << line;
    }
  }
  write_file_atomic(out / "compare.csv", csv);
  write_file_atomic(out / "compare.txt", txt.str());
  detail::write_error_log(out, report);
  return report;
}

/// Runs every method for exactly k_snapshot iterations from each start,
/// dominance-filters the objective vectors F(x_k) per method, and writes one
/// CSV of nondominated values per method.
inline CmdReport cmd_front(const ExperimentConfig& cfg, long k_snapshot, int jobs = 1) {
  validate(cfg);
  require(k_snapshot >= 0, "cmd_front: k_snapshot must be nonnegative");
  const auto out = detail::prepare_output_dir(cfg);
  const ObjectiveBundle bundle = make_bundle(cfg.problem);

  std::vector<std::optional<Vector>> snapshots(cfg.methods.size() * cfg.n_starts);
  CmdReport report = detail::for_each_start(
      cfg, bundle, jobs,
      [&](std::size_t mi) {
        MethodConfig m = cfg.methods[mi];
        m.max_iters = k_snapshot;
        m.kkt_tol = 0.0;  // the snapshot is taken at the exact iteration
        return m;
      },
      [&](std::size_t mi, int si, SolveResult res) {
        snapshots[mi * cfg.n_starts + si] = eval_objectives(bundle, res.final_state.x);
      });

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    std::vector<Vector> values;
    for (int si = 0; si < cfg.n_starts; ++si)
      if (const auto& snap = snapshots[mi * cfg.n_starts + si]) values.push_back(*snap);
    std::string csv;
    for (Index j = 0; j < bundle.m; ++j) csv += (j ? "," : "") + ("f" + std::to_string(j + 1));
    csv += "\n";
    for (std::size_t i : dominance_filter(values)) {
      for (Index j = 0; j < bundle.m; ++j) csv += (j ? "," : "") + fmt_e(values[i][j]);
      csv += "\n";
    }
    write_file_atomic(out / ("front_" + method_file_label(cfg, mi) + ".csv"), csv);
  }
  detail::write_error_log(out, report);
  return report;
}

}  // namespace mopt
