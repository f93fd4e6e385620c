// gpumux: discrete-event simulator for multi-tenant GPU inference scheduling.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpumux/calibrate.hpp"
#include "gpumux/config_io.hpp"
#include "gpumux/csv.hpp"
#include "gpumux/metrics.hpp"
#include "gpumux/recipes.hpp"
#include "gpumux/sim.hpp"

namespace {

using namespace gpumux;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitInternal = 3;
constexpr int kExitCalibration = 4;

std::vector<std::int64_t> parse_r_values(const std::string& text) {
  std::vector<std::int64_t> values;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::int64_t lo = std::stoll(text.substr(0, dots));
    const std::int64_t hi = std::stoll(text.substr(dots + 2));
    for (std::int64_t r = lo; r <= hi; ++r) values.push_back(r);
    return values;
  }
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t comma = text.find(',', begin);
    values.push_back(std::stoll(text.substr(begin, comma - begin)));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return values;
}

DeviceSpec load_device(const std::string& spec) {
  if (spec == "v100") return v100_profile();
  std::ifstream in(spec);
  if (!in) throw ConfigError("config: device profile '" + spec + "' not found");
  json doc;
  in >> doc;
  try {
    return device_from_json(doc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void write_trace_ndjson(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace to " + path);
  for (const DispatchEvent& e : trace.events) {
    json line{{"start_ns", e.start},
              {"end_ns", e.end},
              {"policy", std::string(policy_name(e.policy))},
              {"launches", e.launches},
              {"occupancy", e.occupancy},
              {"context_switches", e.context_switches},
              {"flops", e.flops},
              {"tenant", e.tenant_index},
              {"members", e.member_requests}};
    out << line.dump() << '\n';
  }
}

void emit_rows(const std::vector<CsvRow>& rows, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << kCsvHeader << '\n';
    for (const CsvRow& row : rows) std::cout << csv_line(row) << '\n';
  } else {
    write_csv(out_path, rows);
  }
}

// Single runs append to an existing CSV so repeated `run` calls build up a
// result set; the header is written once.
void append_row(const CsvRow& row, const std::string& out_path) {
  if (out_path.empty()) {
    emit_rows({row}, out_path);
    return;
  }
  std::ifstream probe(out_path);
  const bool fresh = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
  probe.close();
  std::ofstream out(out_path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  if (fresh) out << kCsvHeader << '\n';
  out << csv_line(row) << '\n';
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& out_path, const std::string& trace_path,
            std::optional<std::uint64_t> seed) {
  std::vector<std::string> overrides = sets;
  if (seed) overrides.push_back("sim.seed=" + std::to_string(*seed));
  SimConfig cfg = load_config(config_path, overrides);

  CsvRow row;
  row.workload = cfg.workload_name;
  row.policy = std::string(policy_name(cfg.policy));
  row.replicas = static_cast<std::int64_t>(cfg.tenants.size());
  row.batch = cfg.policy_params.batch_size;
  row.seed = cfg.seed;

  try {
    const Trace trace = run(cfg);
    row.metrics = aggregate(trace, cfg);
    if (!trace_path.empty()) write_trace_ndjson(trace_path, trace);
  } catch (const InfeasibleError& e) {
    row.status = "oom";
    append_row(row, out_path);
    std::cerr << "gpumux: infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  }
  append_row(row, out_path);
  return kExitOk;
}

int cmd_sweep(const SweepSpec& spec, const DeviceSpec& device,
              const std::string& out_path, int jobs) {
  emit_rows(run_sweep(spec, device, jobs), out_path);
  return kExitOk;
}

// --- report rendering -------------------------------------------------------

std::map<SweepKey, RunMetrics> ok_cells(const std::vector<CsvRow>& rows) {
  std::map<SweepKey, RunMetrics> cells;
  for (const CsvRow& row : rows) {
    if (row.status != "ok") continue;
    auto policy = policy_from_name(row.policy);
    if (!policy) continue;
    cells[{row.workload, row.replicas, *policy}] = row.metrics;
  }
  return cells;
}

void print_table(const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  }
  for (const auto& row : table) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) {
        line += std::string(widths[i] - row[i].size() + 2, ' ');
      }
    }
    std::cout << line << '\n';
  }
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

int cmd_report(const std::string& csv_path, const std::string& kind,
               const std::string& r_range_text, const std::string& csv_out) {
  const std::vector<CsvRow> rows = read_csv(csv_path);
  if (rows.empty()) {
    std::cerr << "gpumux: report-error: empty CSV " << csv_path << '\n';
    return kExitConfig;
  }
  const auto cells = ok_cells(rows);
  std::set<std::string> workloads;
  std::set<std::int64_t> r_present;
  for (const auto& [key, metrics] : cells) {
    workloads.insert(key.workload);
    r_present.insert(key.replicas);
  }
  std::vector<CsvRow> twin;

  if (kind == "table1") {
    std::vector<std::int64_t> r_range;
    if (!r_range_text.empty()) {
      r_range = parse_r_values(r_range_text);
    } else {
      r_range.assign(r_present.begin(), r_present.end());
    }
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header{"row"};
    std::vector<SpeedupTable> tables;
    for (const std::string& w : workloads) {
      try {
        tables.push_back(speedup_table(cells, w, r_range));
      } catch (const std::runtime_error& e) {
        std::cerr << "gpumux: report-error: " << e.what() << '\n';
        return kExitConfig;
      }
      header.push_back(w);
    }
    table.push_back(header);
    for (std::int64_t spot : {std::int64_t{10}, std::int64_t{20}}) {
      if (!r_present.count(spot)) continue;
      std::vector<std::string> row{"R = " + std::to_string(spot)};
      for (const SpeedupTable& t : tables) {
        std::string cell = "-";
        for (const SpeedupRow& r : t.rows) {
          if (r.replicas == spot) cell = fmt2(r.speedup) + "x";
        }
        row.push_back(cell);
      }
      table.push_back(row);
    }
    std::vector<std::string> geo{"geomean"};
    std::vector<std::string> next{"next best"};
    for (const SpeedupTable& t : tables) {
      geo.push_back(fmt2(t.geomean_speedup) + "x");
      next.push_back(std::string(policy_name(t.next_best)));
    }
    table.push_back(geo);
    table.push_back(next);
    print_table(table);
  } else if (kind == "fig3" || kind == "fig6") {
    const bool latency = kind == "fig3";
    std::vector<std::vector<std::string>> table;
    table.push_back({"workload", "policy", "R",
                     latency ? "mean_ms" : "throughput_gflops"});
    for (const auto& [key, m] : cells) {
      table.push_back({key.workload, std::string(policy_name(key.policy)),
                       std::to_string(key.replicas),
                       latency ? fmt2(m.mean_latency * 1e3)
                               : fmt2(m.throughput_gflops)});
    }
    print_table(table);
  } else if (kind == "fig4") {
    // Latency spread across tenants, summarized per replica count over seeds.
    std::map<std::int64_t, std::vector<double>> gaps;
    for (const CsvRow& row : rows) {
      if (row.status != "ok") continue;
      gaps[row.replicas].push_back(row.metrics.fairness_gap);
    }
    std::vector<std::vector<std::string>> table;
    table.push_back({"R", "seeds", "min_gap", "mean_gap", "max_gap"});
    for (const auto& [r, values] : gaps) {
      double lo = values[0], hi = values[0], sum = 0;
      for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      table.push_back({std::to_string(r), std::to_string(values.size()),
                       format_double(lo),
                       format_double(sum / static_cast<double>(values.size())),
                       format_double(hi)});
    }
    print_table(table);
  } else {
    std::cerr << "gpumux: report-error: unknown report kind '" << kind << "'\n";
    return kExitConfig;
  }

  if (!csv_out.empty()) {
    std::vector<CsvRow> out_rows;
    for (const CsvRow& row : rows) {
      if (row.status == "ok") out_rows.push_back(row);
    }
    write_csv(csv_out, out_rows);
  }
  return kExitOk;
}

int cmd_calibrate(const std::string& targets_path, const std::string& device_spec,
                  const std::string& profile_out, int budget_override,
                  bool exact, const std::string& free_override) {
  std::ifstream in(targets_path);
  if (!in) {
    std::cerr << "gpumux: config-error: cannot open targets '" << targets_path << "'\n";
    return kExitConfig;
  }
  json doc;
  in >> doc;
  CalibrationSpec spec = calibration_spec_from_json(doc);
  if (budget_override > 0) spec.budget = budget_override;
  if (exact) spec.exact = true;
  if (!free_override.empty()) {
    spec.free_params.clear();
    std::size_t begin = 0;
    while (begin <= free_override.size()) {
      const std::size_t comma = free_override.find(',', begin);
      spec.free_params.push_back(free_override.substr(begin, comma - begin));
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
  }

  const DeviceSpec initial = load_device(device_spec);
  const CalibrationResult result = calibrate(initial, spec);

  json out = device_to_json(result.fitted);
  if (profile_out.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::ofstream pf(profile_out, std::ios::binary);
    pf << out.dump(2) << '\n';
  }
  std::cerr << "calibrate: " << result.evaluations << " evaluations, worst "
            << format_double(result.worst_normalized_error)
            << "x of tolerance\n";
  for (std::size_t i = 0; i < spec.targets.size(); ++i) {
    std::cerr << "  " << spec.targets[i].metric << ": achieved "
              << format_double(result.achieved[i]) << " target "
              << format_double(spec.targets[i].target) << " (err "
              << format_double(result.relative_errors[i] * 100) << "%)\n";
  }
  if (!result.within_tolerance) {
    std::cerr << "gpumux: calibration-unmet: best profile emitted with errors\n";
    return kExitCalibration;
  }
  return kExitOk;
}

int cmd_presets() {
  std::vector<std::vector<std::string>> table;
  table.push_back({"name", "layers", "weights_bytes", "slo_ms"});
  for (const WorkloadPreset& p : all_presets()) {
    table.push_back({p.name, std::to_string(p.layers.size()),
                     format_double(p.weights_bytes), fmt2(p.slo_latency * 1e3)});
  }
  print_table(table);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPU multi-tenant inference scheduling simulator"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run one simulation from a config");
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_path, trace_path;
  std::optional<std::uint64_t> seed;
  run_cmd->add_option("config", config_path, "config JSON path")->required();
  run_cmd->add_option("--set", sets, "override, e.g. sim.seed=7");
  run_cmd->add_option("--out", out_path, "write CSV here instead of stdout");
  run_cmd->add_option("--trace-out", trace_path, "write NDJSON event log");
  run_cmd->add_option("--seed", seed, "override sim.seed");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "replica sweep over policies");
  std::string preset = "resnet18-conv2_2";
  std::string r_text = "2..120";
  std::string policies_text = "time-mux,space-implicit,space-explicit,space-time";
  std::string seeds_text = "1";
  std::string mode_text = "microbench";
  std::string device_text = "v100";
  int jobs = 0;
  sweep_cmd->add_option("--preset", preset, "workload preset");
  sweep_cmd->add_option("--r", r_text, "replica counts: 2..120 or 2,4,8");
  sweep_cmd->add_option("--policies", policies_text, "comma-separated policies");
  sweep_cmd->add_option("--seeds", seeds_text, "comma-separated seeds");
  sweep_cmd->add_option("--mode", mode_text, "microbench or forward_pass");
  sweep_cmd->add_option("--device", device_text, "profile name or JSON path");
  sweep_cmd->add_option("--out", out_path, "CSV output path");
  sweep_cmd->add_option("--jobs", jobs, "parallel cells (0 = hardware)");

  // report
  auto* report_cmd = app.add_subcommand("report", "render tables from sweep CSV");
  std::string csv_path, report_kind = "table1", r_range_text, csv_out;
  report_cmd->add_option("csv", csv_path, "sweep CSV path")->required();
  report_cmd->add_option("--kind", report_kind, "table1 | fig3 | fig4 | fig6");
  report_cmd->add_option("--r-range", r_range_text, "restrict R range");
  report_cmd->add_option("--csv-out", csv_out, "machine-readable twin");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "fit device parameters to targets");
  std::string targets_path, cal_device = "v100", profile_out, free_params;
  int budget = 0;
  bool exact = false;
  cal_cmd->add_option("targets", targets_path, "targets JSON path")->required();
  cal_cmd->add_option("--device", cal_device, "initial profile");
  cal_cmd->add_option("--profile-out", profile_out, "write fitted profile here");
  cal_cmd->add_option("--budget", budget, "objective evaluation budget");
  cal_cmd->add_flag("--exact", exact, "use the full R range while fitting");
  cal_cmd->add_option("--free", free_params, "override free parameter list");

  // presets
  app.add_subcommand("presets", "list workload presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(config_path, sets, out_path, trace_path, seed);
    }
    if (sweep_cmd->parsed()) {
      SweepSpec spec;
      spec.r_values = parse_r_values(r_text);
      std::size_t begin = 0;
      while (begin <= policies_text.size()) {
        const std::size_t comma = policies_text.find(',', begin);
        const std::string name = policies_text.substr(begin, comma - begin);
        auto policy = policy_from_name(name);
        if (!policy) throw ConfigError("config: unknown policy '" + name + "'");
        spec.policies.push_back(*policy);
        if (comma == std::string::npos) break;
        begin = comma + 1;
      }
      spec.seeds.clear();
      for (std::int64_t s : parse_r_values(seeds_text)) {
        spec.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      if (mode_text == "microbench") {
        spec.mode = SimMode::kMicrobench;
      } else if (mode_text == "forward_pass") {
        spec.mode = SimMode::kForwardPass;
      } else {
        throw ConfigError("config: unknown mode '" + mode_text + "'");
      }
      spec.workload_preset = preset;
      return cmd_sweep(spec, load_device(device_text), out_path, jobs);
    }
    if (report_cmd->parsed()) {
      return cmd_report(csv_path, report_kind, r_range_text, csv_out);
    }
    if (cal_cmd->parsed()) {
      return cmd_calibrate(targets_path, cal_device, profile_out, budget, exact,
                           free_params);
    }
    return cmd_presets();
  } catch (const ConfigError& e) {
    std::cerr << "gpumux: config-error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "gpumux: infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "gpumux: internal-error: " << e.what() << '\n';
    return kExitInternal;
  }
}
