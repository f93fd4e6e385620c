#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpumux/csv.hpp"
#include "gpumux/metrics.hpp"
#include "gpumux/sim.hpp"

namespace gpumux {

// Canned experiment procedures reused by the sweep/report/calibrate commands
// and by the verification suite. All are deterministic for a given device.

// Builds the config for one sweep cell. Microbench cells issue the preset's
// first layer as a standalone kernel stream per tenant; exclusive cells run a
// single tenant batched `batch` wide. Durations are sized per cell so every
// run covers a comparable number of steady-state rounds.
SimConfig make_cell_config(const std::string& preset_name, std::int64_t replicas,
                           PolicyKind policy, std::uint64_t seed,
                           const DeviceSpec& device, SimMode mode,
                           std::int64_t batch = 1);

struct CellResult {
  CsvRow row;
};

// Runs one cell, mapping InfeasibleError to status "oom".
CellResult run_cell(const SimConfig& config);

struct SweepSpec {
  std::vector<std::int64_t> r_values;
  std::vector<PolicyKind> policies;
  std::string workload_preset;
  std::vector<std::uint64_t> seeds = {1};
  SimMode mode = SimMode::kMicrobench;
};

// Cartesian (R, policy, seed) sweep; cells run concurrently on `jobs`
// threads and rows come back sorted by (workload, policy, R, seed).
std::vector<CsvRow> run_sweep(const SweepSpec& spec, const DeviceSpec& device,
                              int jobs = 0);

// The multiplexing-strategy sweep behind the throughput-comparison table:
// the three sharing policies plus space-time over r_values for one preset.
std::map<SweepKey, RunMetrics> microbench_suite(
    const std::string& preset, std::span<const std::int64_t> r_values,
    const DeviceSpec& device);

// Forward-pass latency study: policies x replica counts for one model preset
// plus the exclusive baseline batched R wide for each R.
struct SlowdownSuite {
  std::map<SweepKey, RunMetrics> runs;
  std::map<std::pair<std::string, std::int64_t>, RunMetrics> baselines;
};
SlowdownSuite slowdown_suite(const std::vector<std::string>& presets,
                             std::span<const std::int64_t> replica_counts,
                             const DeviceSpec& device);

std::vector<std::int64_t> full_r_range();      // 2..120
std::vector<std::int64_t> sampled_r_range();   // log-spaced subsample
std::vector<std::int64_t> replica_calibration_set();  // {2,4,6,8,10}

// Named calibration metrics evaluated against a device profile. `exact`
// selects the full R range; the sampled range weights each probe by how many
// integers it stands for, which keeps geomeans close at a fraction of the
// cost. Unknown names throw std::runtime_error.
double evaluate_metric(const std::string& name, const DeviceSpec& device,
                       bool exact);

}  // namespace gpumux
