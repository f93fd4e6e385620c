#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpumux/device.hpp"
#include "gpumux/gemm.hpp"
#include "gpumux/workload.hpp"

namespace gpumux {

// Roofline cost of one launch (a plain kernel or a super-kernel).
struct KernelCost {
  std::int64_t flops = 0;
  std::int64_t bytes = 0;
  std::int64_t blocks = 0;
  double duration = 0;  // seconds
  std::int64_t waves = 0;
};

// A shape with a launch multiplicity, so 20x the same sub-problem does not
// need 20 identical entries.
struct KernelGroup {
  GemmShape shape;
  std::int64_t count = 1;
};

// Tiled GEMM grid size: ceil(m/tile_m) * ceil(n/tile_n). Partial tiles cost a
// full block, matching how a real grid launch rounds up.
std::int64_t thread_blocks(const GemmShape& shape, const DeviceSpec& device);

// Roofline duration with wave quantization. Blocks execute in waves of
// `slot_budget`; the compute side is scaled by the mean resident-block
// fraction B/(waves*slot_budget) while the memory side sees the full device
// bandwidth (bandwidth is a device-wide shared resource, not per-slot).
// Throws std::invalid_argument on an empty kernel list.
KernelCost dispatch_duration(std::span<const KernelGroup> kernels,
                             const DeviceSpec& device, std::int64_t slot_budget,
                             std::int64_t launches);
KernelCost dispatch_duration(const GemmShape& shape, const DeviceSpec& device,
                             std::int64_t slot_budget, std::int64_t launches);

enum class SharingMode {
  kProcessPerTenant,  // every tenant pays the fixed process context
  kSharedContext,     // one context shared by all tenants
};

double memory_footprint(std::span<const Tenant> tenants, SharingMode mode,
                        const DeviceSpec& device);

}  // namespace gpumux
