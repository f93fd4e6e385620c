#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpumux/device.hpp"
#include "gpumux/policies.hpp"
#include "gpumux/scheduler.hpp"
#include "gpumux/vtime.hpp"
#include "gpumux/workload.hpp"

namespace gpumux {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a run cannot start because the policy's footprint mode does not
// fit device memory; carries the totals for the structured CLI message.
struct InfeasibleError : std::runtime_error {
  InfeasibleError(std::string msg, double required, double capacity)
      : std::runtime_error(std::move(msg)), required_bytes(required),
        capacity_bytes(capacity) {}
  double required_bytes = 0;
  double capacity_bytes = 0;
};

// Straggler detector settings (space-time only).
struct DetectorParams {
  double ewma_alpha = 0.2;
  std::int64_t min_observations = 10;
  double threshold_ratio = 1.5;
  bool evict_stragglers = true;
};

// Post-dispatch tenant-local slowdown, used to exercise the monitoring and
// eviction path without touching other super-kernel members.
struct DegradationSpec {
  int tenant_index = 0;
  double slowdown = 1.0;
  double start = 0;  // virtual seconds
};

struct SimConfig {
  DeviceSpec device;
  PolicyKind policy = PolicyKind::kSpaceTime;
  PolicyParams policy_params;
  BatchPolicy scheduler;
  DetectorParams detector;
  std::vector<Tenant> tenants;
  double duration = 1.0;  // virtual seconds
  double warmup = 0.1;    // excluded from metric windows
  std::uint64_t seed = 1;
  SimMode mode = SimMode::kForwardPass;
  std::optional<DegradationSpec> degradation;
  std::string workload_name = "custom";

  void validate() const;  // throws ConfigError
};

// A completed forward pass (one logical query).
struct RequestLifecycle {
  std::uint64_t request_id = 0;
  int tenant_index = 0;
  TimeNs enqueue_time = 0;
  TimeNs dispatch_time = 0;
  TimeNs complete_time = 0;
  bool slo_met = false;
  std::int64_t flops = 0;
};

struct Trace {
  std::vector<DispatchEvent> events;
  std::vector<RequestLifecycle> completions;   // forward passes
  std::vector<std::uint64_t> cancellations;    // kernel requests dropped by eviction
  std::vector<int> evicted_tenants;
  std::vector<TimeNs> eviction_times;
  double peak_memory = 0;
  std::int64_t cache_hits = 0;
  std::int64_t cache_misses = 0;
  std::int64_t dispatched_flops = 0;           // sum over events
  std::int64_t completed_kernel_flops = 0;     // sum over finished kernels
  std::string config_echo;
};

// Runs one deterministic closed-loop simulation: every tenant keeps exactly
// `concurrency` forward passes in flight, a new pass enqueues the instant one
// completes, and layers of a pass execute strictly in order. New work stops
// at `duration` but in-flight work drains, so dispatched and completed kernel
// flops always balance.
Trace run(const SimConfig& config);

struct OraclePrediction {
  double latency = 0;     // steady-state forward-pass latency, seconds
  double throughput = 0;  // FLOP/s
};

// Closed-form steady state for restricted configs: a single one-layer shape,
// jitter-free, under exclusive, time-mux, or space-time with full target
// batches. Quantizes to nanoseconds exactly like the engine so the event
// machinery can be checked to 1e-9 relative. Throws ConfigError otherwise.
OraclePrediction analytic_oracle(const SimConfig& config);

// Returns a copy of `config` with a degradation installed.
SimConfig inject_degradation(const SimConfig& config, int tenant_index,
                             double slowdown, double start);

}  // namespace gpumux
