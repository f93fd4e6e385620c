#include "gpumux/policies.hpp"

#include <algorithm>
#include <cmath>

namespace gpumux {

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kExclusive: return "exclusive";
    case PolicyKind::kTimeMux: return "time-mux";
    case PolicyKind::kSpaceImplicit: return "space-implicit";
    case PolicyKind::kSpaceExplicit: return "space-explicit";
    case PolicyKind::kSpaceTime: return "space-time";
  }
  return "unknown";
}

std::optional<PolicyKind> policy_from_name(std::string_view name) {
  if (name == "exclusive") return PolicyKind::kExclusive;
  if (name == "time-mux") return PolicyKind::kTimeMux;
  if (name == "space-implicit") return PolicyKind::kSpaceImplicit;
  if (name == "space-explicit") return PolicyKind::kSpaceExplicit;
  if (name == "space-time") return PolicyKind::kSpaceTime;
  return std::nullopt;
}

SharingMode footprint_mode(PolicyKind kind, SimMode mode) {
  // The kernel microbenchmark drives all strategies from one process with
  // operands preallocated, so nothing pays a per-process context there.
  if (mode == SimMode::kMicrobench) return SharingMode::kSharedContext;
  switch (kind) {
    case PolicyKind::kExclusive:
    case PolicyKind::kTimeMux:
    case PolicyKind::kSpaceImplicit:
      return SharingMode::kProcessPerTenant;
    case PolicyKind::kSpaceExplicit:
    case PolicyKind::kSpaceTime:
      return SharingMode::kSharedContext;
  }
  return SharingMode::kSharedContext;
}

PassCost exclusive_pass_cost(std::span<const GemmShape> layers,
                             std::int64_t batch, const DeviceSpec& device) {
  PassCost pass;
  const std::int64_t budget = device.slot_total();
  for (const GemmShape& layer : layers) {
    const KernelCost cost =
        dispatch_duration(batch_inputs(layer, batch), device, budget, 1);
    pass.duration += cost.duration;
    pass.launches += 1;
    pass.flops += cost.flops;
    pass.blocks += cost.blocks;
    pass.wave_slots += cost.waves * budget;
  }
  pass.occupancy = static_cast<double>(pass.blocks) /
                   static_cast<double>(pass.wave_slots);
  return pass;
}

SpatialRoundCost spatial_round_cost(std::span<const SpatialTenantWork> work,
                                    const PolicyParams& params,
                                    const DeviceSpec& device, bool implicit,
                                    JitterRng& rng) {
  SpatialRoundCost round;
  const std::size_t n = work.size();
  if (n == 0) return round;
  const std::int64_t total_slots = device.slot_total();
  const std::int64_t partition =
      std::max<std::int64_t>(1, total_slots / static_cast<std::int64_t>(n));

  // Aggregate memory traffic shares the device-wide bandwidth, so every
  // concurrent tenant sees at least the round's total transfer time.
  double round_bytes = 0;
  std::int64_t total_launches = 0;
  for (const SpatialTenantWork& w : work) {
    for (const GemmShape& kernel : w.kernels) {
      round_bytes += static_cast<double>(gemm_bytes(kernel));
    }
    total_launches += static_cast<std::int64_t>(w.kernels.size());
  }
  const double memory_floor = round_bytes / device.mem_bandwidth;
  const double overhead = static_cast<double>(total_launches) *
                          device.launch_overhead * device.launch_serialization;

  const bool odd = (n % 2) != 0;
  const double gap = (implicit && odd) ? params.fairness_gap_odd
                                       : params.fairness_gap_even;

  round.completion.resize(n);
  round.occupancy.resize(n);
  round.launches = total_launches;
  for (std::size_t i = 0; i < n; ++i) {
    double compute = 0;
    std::int64_t blocks = 0;
    std::int64_t wave_slots = 0;
    for (const GemmShape& kernel : work[i].kernels) {
      const std::int64_t b = thread_blocks(kernel, device);
      const std::int64_t waves = (b + partition - 1) / partition;
      // Waves are bounded by the tenant's partition, but a resident block
      // still computes at peak/slot_total like anywhere else on the device.
      const double efficiency = static_cast<double>(b) /
                                static_cast<double>(waves * total_slots);
      compute += static_cast<double>(gemm_flops(kernel)) /
                 (device.peak_flops * efficiency);
      blocks += b;
      wave_slots += waves * total_slots;
    }
    const double jitter = 1.0 + gap * rng.uniform01();
    const double base = overhead + std::max(compute, memory_floor);
    round.completion[i] = device.space_sched_penalty * jitter * base;
    round.occupancy[i] = wave_slots > 0 ? static_cast<double>(blocks) /
                                              static_cast<double>(wave_slots)
                                        : 0.0;
    round.span = std::max(round.span, round.completion[i]);
  }
  return round;
}

}  // namespace gpumux
