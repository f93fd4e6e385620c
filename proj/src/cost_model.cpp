#include "gpumux/cost_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace gpumux {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::int64_t thread_blocks(const GemmShape& shape, const DeviceSpec& device) {
  return ceil_div(shape.m, device.tile_m) * ceil_div(shape.n, device.tile_n);
}

KernelCost dispatch_duration(std::span<const KernelGroup> kernels,
                             const DeviceSpec& device, std::int64_t slot_budget,
                             std::int64_t launches) {
  if (kernels.empty()) throw std::invalid_argument("empty dispatch");
  if (slot_budget < 1 || slot_budget > device.slot_total()) {
    throw std::invalid_argument("slot_budget out of range");
  }
  if (launches < 1) throw std::invalid_argument("launches must be >= 1");

  KernelCost cost;
  for (const KernelGroup& g : kernels) {
    if (g.count < 1 || !g.shape.valid()) {
      throw std::invalid_argument("invalid kernel group");
    }
    cost.flops += g.count * gemm_flops(g.shape);
    cost.bytes += g.count * gemm_bytes(g.shape);
    cost.blocks += g.count * thread_blocks(g.shape, device);
  }
  cost.waves = ceil_div(cost.blocks, slot_budget);
  const double parallel_efficiency =
      static_cast<double>(cost.blocks) /
      static_cast<double>(cost.waves * slot_budget);
  const double compute = static_cast<double>(cost.flops) /
                         (device.peak_flops * parallel_efficiency);
  const double memory = static_cast<double>(cost.bytes) / device.mem_bandwidth;
  cost.duration = static_cast<double>(launches) * device.launch_overhead +
                  std::max(compute, memory);
  return cost;
}

KernelCost dispatch_duration(const GemmShape& shape, const DeviceSpec& device,
                             std::int64_t slot_budget, std::int64_t launches) {
  const KernelGroup group{shape, 1};
  return dispatch_duration(std::span<const KernelGroup>(&group, 1), device,
                           slot_budget, launches);
}

double memory_footprint(std::span<const Tenant> tenants, SharingMode mode,
                        const DeviceSpec& device) {
  double total = 0;
  for (const Tenant& t : tenants) {
    total += t.weights_bytes + t.activation_bytes;
    if (mode == SharingMode::kProcessPerTenant) {
      total += device.process_context_bytes;
    }
  }
  if (mode == SharingMode::kSharedContext) {
    total += device.process_context_bytes;
  }
  return total;
}

}  // namespace gpumux
