#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpumux/sim.hpp"

namespace gpumux {

struct RunMetrics {
  double throughput_gflops = 0;
  double mean_latency = 0;  // seconds
  double p50 = 0;
  double p99 = 0;
  double fairness_gap = 0;  // (max tenant mean - min tenant mean) / min
  double utilization = 0;   // fraction of peak_flops
  double peak_memory = 0;   // bytes
  std::int64_t launches = 0;
  double slo_attainment = 0;
  std::int64_t cancelled = 0;
};

double geomean(std::span<const double> values);

// Nearest-rank percentile (not interpolated, for bit-stable output).
double percentile_nearest_rank(std::vector<double> values, double pct);

// Aggregates a trace over [window_start, window_end] (defaults to
// [warmup, duration]). Throughput credits a forward pass's flops at its
// completion time; latency is enqueue-to-complete of the pass; percentiles
// are nearest-rank; the fairness gap is over per-tenant means of non-evicted
// tenants. Throws std::runtime_error when the window has no completions.
RunMetrics aggregate(const Trace& trace, const SimConfig& config,
                     std::optional<double> window_start = std::nullopt,
                     std::optional<double> window_end = std::nullopt);

struct SweepKey {
  std::string workload;
  std::int64_t replicas = 0;
  PolicyKind policy = PolicyKind::kSpaceTime;
  auto operator<=>(const SweepKey&) const = default;
};

struct SpeedupRow {
  std::int64_t replicas = 0;
  double speedup = 0;       // space-time over best competitor
  PolicyKind next_best = PolicyKind::kTimeMux;
};

struct SpeedupTable {
  std::string workload;
  std::vector<SpeedupRow> rows;
  double geomean_speedup = 0;
  PolicyKind next_best = PolicyKind::kTimeMux;  // most frequent max competitor
};

// Per-R ratio of space-time throughput to the best competitor throughput,
// with the geomean across r_range. Competitors are every non-space-time
// policy present. Throws std::runtime_error naming any missing cell.
SpeedupTable speedup_table(
    const std::map<SweepKey, RunMetrics>& runs, const std::string& workload,
    std::span<const std::int64_t> r_range);

// Geometric-mean latency slowdown of each policy versus the exclusive
// baseline over matching (workload, replicas) cells. The baseline for a cell
// with R replicas is the exclusive run batched R wide.
std::map<PolicyKind, double> slowdown_vs_exclusive(
    const std::map<SweepKey, RunMetrics>& runs,
    const std::map<std::pair<std::string, std::int64_t>, RunMetrics>& baselines);

}  // namespace gpumux
