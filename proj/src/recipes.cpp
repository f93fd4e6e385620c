#include "gpumux/recipes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "gpumux/config_io.hpp"

namespace gpumux {

namespace {

// Estimated seconds for one closed-loop cycle of every stream, used to size
// run durations so each cell covers a comparable number of steady rounds.
double estimate_stream_cycle(const SimConfig& cfg) {
  const DeviceSpec& dev = cfg.device;
  std::vector<GemmShape> layers = cfg.tenants.front().layers;
  if (cfg.mode == SimMode::kMicrobench) layers.resize(1);
  const auto r = static_cast<std::int64_t>(cfg.tenants.size());
  switch (cfg.policy) {
    case PolicyKind::kExclusive:
      return exclusive_pass_cost(layers, cfg.policy_params.batch_size, dev).duration;
    case PolicyKind::kTimeMux: {
      const double pass = exclusive_pass_cost(layers, 1, dev).duration;
      const double sw = cfg.mode == SimMode::kMicrobench
                            ? 0.0
                            : dev.context_switch_overhead;
      return static_cast<double>(r) * (pass + sw);
    }
    case PolicyKind::kSpaceImplicit:
    case PolicyKind::kSpaceExplicit: {
      std::vector<SpatialTenantWork> work(r);
      for (auto& w : work) w.kernels = layers;
      PolicyParams quiet = cfg.policy_params;
      quiet.fairness_gap_even = 0;
      quiet.fairness_gap_odd = 0;
      JitterRng rng(0);
      const double span =
          spatial_round_cost(work, quiet, dev, false, rng).span;
      return span * (1.0 + cfg.policy_params.fairness_gap_odd);
    }
    case PolicyKind::kSpaceTime: {
      double cycle = 0;
      for (const GemmShape& l : layers) {
        const std::int64_t blocks = thread_blocks(l, dev);
        const std::int64_t cap =
            std::max<std::int64_t>(1, dev.slot_total() / blocks);
        const std::int64_t chunk = std::min<std::int64_t>(r, cap);
        const std::int64_t rounds = (r + chunk - 1) / chunk;
        const KernelGroup group{l, chunk};
        cycle += static_cast<double>(rounds) *
                 dispatch_duration(std::span<const KernelGroup>(&group, 1), dev,
                                   dev.slot_total(), 1)
                     .duration;
      }
      return cycle;
    }
  }
  return 1e-3;
}

}  // namespace

SimConfig make_cell_config(const std::string& preset_name, std::int64_t replicas,
                           PolicyKind policy, std::uint64_t seed,
                           const DeviceSpec& device, SimMode mode,
                           std::int64_t batch) {
  const WorkloadPreset* preset = find_preset(preset_name);
  if (!preset) throw ConfigError("unknown preset '" + preset_name + "'");
  SimConfig cfg;
  cfg.device = device;
  cfg.policy = policy;
  cfg.workload_name = preset_name;
  cfg.mode = mode;
  cfg.seed = seed;
  if (policy == PolicyKind::kExclusive) {
    cfg.tenants = make_tenants(*preset, 1);
    cfg.policy_params.batch_size = batch;
  } else {
    cfg.tenants = make_tenants(*preset, static_cast<int>(replicas));
    cfg.policy_params.batch_size = batch;
  }
  cfg.scheduler.target_batch = 0;  // auto: active streams, capped at one wave

  const double cycle = estimate_stream_cycle(cfg);
  cfg.duration = std::max(0.02, 48.0 * cycle * 1.25);
  cfg.warmup = 0.1 * cfg.duration;
  return cfg;
}

CellResult run_cell(const SimConfig& config) {
  CellResult result;
  result.row.workload = config.workload_name;
  result.row.policy = std::string(policy_name(config.policy));
  result.row.replicas = static_cast<std::int64_t>(config.tenants.size());
  result.row.batch = config.policy_params.batch_size;
  result.row.seed = config.seed;
  try {
    const Trace trace = run(config);
    result.row.metrics = aggregate(trace, config);
    result.row.status = "ok";
  } catch (const InfeasibleError&) {
    result.row.status = "oom";
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    result.row.status = "error";
  }
  return result;
}

std::vector<CsvRow> run_sweep(const SweepSpec& spec, const DeviceSpec& device,
                              int jobs) {
  if (spec.r_values.empty()) throw ConfigError("sweep: r_values must be non-empty");
  for (std::int64_t r : spec.r_values) {
    if (r < 1) throw ConfigError("sweep: r_values must be >= 1");
  }

  struct Cell {
    PolicyKind policy;
    std::int64_t r;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (PolicyKind p : spec.policies) {
    for (std::int64_t r : spec.r_values) {
      for (std::uint64_t s : spec.seeds) cells.push_back({p, r, s});
    }
  }
  // Canonical row order: (workload, policy, R, seed) with the policy's wire
  // name, regardless of execution order.
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::make_tuple(policy_name(a.policy), a.r, a.seed) <
           std::make_tuple(policy_name(b.policy), b.r, b.seed);
  });

  std::vector<CsvRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      const Cell& c = cells[i];
      const std::int64_t batch =
          c.policy == PolicyKind::kExclusive ? c.r : 1;
      SimConfig cfg = make_cell_config(spec.workload_preset, c.r, c.policy,
                                       c.seed, device, spec.mode, batch);
      rows[i] = run_cell(cfg).row;
    }
  };
  unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs)
                                : std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = 1;
  n_threads = std::min<unsigned>(n_threads, cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

std::map<SweepKey, RunMetrics> microbench_suite(
    const std::string& preset, std::span<const std::int64_t> r_values,
    const DeviceSpec& device) {
  SweepSpec spec;
  spec.r_values.assign(r_values.begin(), r_values.end());
  spec.policies = {PolicyKind::kTimeMux, PolicyKind::kSpaceImplicit,
                   PolicyKind::kSpaceExplicit, PolicyKind::kSpaceTime};
  spec.workload_preset = preset;
  spec.mode = SimMode::kMicrobench;
  std::map<SweepKey, RunMetrics> out;
  for (const CsvRow& row : run_sweep(spec, device)) {
    if (row.status != "ok") {
      throw std::runtime_error("microbench cell failed: " + csv_line(row));
    }
    auto policy = policy_from_name(row.policy);
    out[{row.workload, row.replicas, *policy}] = row.metrics;
  }
  return out;
}

SlowdownSuite slowdown_suite(const std::vector<std::string>& presets,
                             std::span<const std::int64_t> replica_counts,
                             const DeviceSpec& device) {
  SlowdownSuite suite;
  for (const std::string& preset : presets) {
    SweepSpec spec;
    spec.r_values.assign(replica_counts.begin(), replica_counts.end());
    spec.policies = {PolicyKind::kTimeMux, PolicyKind::kSpaceImplicit,
                     PolicyKind::kSpaceExplicit, PolicyKind::kSpaceTime};
    spec.workload_preset = preset;
    spec.mode = SimMode::kForwardPass;
    for (const CsvRow& row : run_sweep(spec, device)) {
      if (row.status != "ok") {
        throw std::runtime_error("slowdown cell failed: " + csv_line(row));
      }
      auto policy = policy_from_name(row.policy);
      suite.runs[{row.workload, row.replicas, *policy}] = row.metrics;
    }
    for (std::int64_t r : replica_counts) {
      SimConfig cfg = make_cell_config(preset, r, PolicyKind::kExclusive, 1,
                                       device, SimMode::kForwardPass, r);
      const CellResult res = run_cell(cfg);
      if (res.row.status != "ok") {
        throw std::runtime_error("slowdown baseline failed: " + csv_line(res.row));
      }
      suite.baselines[{preset, r}] = res.row.metrics;
    }
  }
  return suite;
}

std::vector<std::int64_t> full_r_range() {
  std::vector<std::int64_t> r;
  for (std::int64_t i = 2; i <= 120; ++i) r.push_back(i);
  return r;
}

std::vector<std::int64_t> sampled_r_range() {
  return {2,  3,  4,  5,  6,  8,  10, 12, 14, 16, 18,  20,  23,
          26, 30, 35, 40, 46, 53, 60, 70, 80, 90, 100, 110, 120};
}

std::vector<std::int64_t> replica_calibration_set() { return {2, 4, 6, 8, 10}; }

namespace {

// Geomean over [2,120] using sampled probes, each weighted by how many
// integers it is nearest to; an exact range uses weight 1 everywhere.
double weighted_geomean(std::span<const std::int64_t> r_values,
                        const std::vector<double>& ratios, bool exact) {
  double log_sum = 0;
  double weight_sum = 0;
  for (std::size_t i = 0; i < r_values.size(); ++i) {
    double w = 1.0;
    if (!exact) {
      const double lo = i == 0 ? 2.0
                               : 0.5 * static_cast<double>(r_values[i - 1] +
                                                           r_values[i]);
      const double hi = i + 1 == r_values.size()
                            ? 120.0
                            : 0.5 * static_cast<double>(r_values[i] +
                                                        r_values[i + 1]);
      w = std::max(1.0, hi - lo);
    }
    log_sum += w * std::log(ratios[i]);
    weight_sum += w;
  }
  return std::exp(log_sum / weight_sum);
}

double table1_geomean(const std::string& preset, const DeviceSpec& device,
                      bool exact) {
  const auto r_values = exact ? full_r_range() : sampled_r_range();
  const auto runs = microbench_suite(preset, r_values, device);
  const SpeedupTable table = speedup_table(runs, preset, r_values);
  std::vector<double> ratios;
  for (const SpeedupRow& row : table.rows) ratios.push_back(row.speedup);
  return weighted_geomean(r_values, ratios, exact);
}

double table1_spot(const std::string& preset, std::int64_t r,
                   const DeviceSpec& device) {
  const std::int64_t rs[] = {r};
  const auto runs = microbench_suite(preset, rs, device);
  return speedup_table(runs, preset, rs).rows.front().speedup;
}

double spacetime_over_timeonly(const std::string& preset,
                               const DeviceSpec& device, bool exact) {
  const auto r_values = exact ? full_r_range() : sampled_r_range();
  const auto runs = microbench_suite(preset, r_values, device);
  std::vector<double> ratios;
  for (std::int64_t r : r_values) {
    const double st =
        runs.at({preset, r, PolicyKind::kSpaceTime}).throughput_gflops;
    const double tm =
        runs.at({preset, r, PolicyKind::kTimeMux}).throughput_gflops;
    ratios.push_back(st / tm);
  }
  return weighted_geomean(r_values, ratios, exact);
}

double slowdown_metric(PolicyKind which, const DeviceSpec& device) {
  const auto replicas = replica_calibration_set();
  const SlowdownSuite suite =
      slowdown_suite({"mobilenetv2", "resnet50"}, replicas, device);
  const auto slowdowns = slowdown_vs_exclusive(suite.runs, suite.baselines);
  if (which == PolicyKind::kTimeMux) return slowdowns.at(PolicyKind::kTimeMux);
  // "spatial" pools both spatial flavors.
  return std::sqrt(slowdowns.at(PolicyKind::kSpaceImplicit) *
                   slowdowns.at(PolicyKind::kSpaceExplicit));
}

}  // namespace

double evaluate_metric(const std::string& name, const DeviceSpec& device,
                       bool exact) {
  const auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (true) {
      const std::size_t colon = s.find(':', begin);
      parts.push_back(s.substr(begin, colon - begin));
      if (colon == std::string::npos) break;
      begin = colon + 1;
    }
    return parts;
  };
  const auto parts = split(name);
  if (parts[0] == "table1_geomean" && parts.size() == 2) {
    return table1_geomean(parts[1], device, exact);
  }
  if (parts[0] == "table1_spot" && parts.size() == 3) {
    return table1_spot(parts[1], std::stoll(parts[2]), device);
  }
  if (parts[0] == "spacetime_over_timeonly_overall" && parts.size() == 1) {
    const double conv = spacetime_over_timeonly("resnet18-conv2_2", device, exact);
    const double rnn = spacetime_over_timeonly("rnn-matvec", device, exact);
    const double square = spacetime_over_timeonly("square-256", device, exact);
    return std::cbrt(conv * rnn * square);
  }
  if (parts[0] == "slowdown_geomean" && parts.size() == 2) {
    if (parts[1] == "time-mux") {
      return slowdown_metric(PolicyKind::kTimeMux, device);
    }
    if (parts[1] == "spatial") {
      return slowdown_metric(PolicyKind::kSpaceImplicit, device);
    }
    throw std::runtime_error("unknown slowdown metric '" + parts[1] + "'");
  }
  if (parts[0] == "exclusive_utilization_batch26" && parts.size() == 1) {
    SimConfig cfg = make_cell_config("resnet50", 1, PolicyKind::kExclusive, 1,
                                     device, SimMode::kForwardPass, 26);
    const CellResult res = run_cell(cfg);
    if (res.row.status != "ok") {
      throw std::runtime_error("exclusive utilization cell failed");
    }
    return res.row.metrics.utilization;
  }
  throw std::runtime_error("unknown calibration metric '" + name + "'");
}

}  // namespace gpumux
