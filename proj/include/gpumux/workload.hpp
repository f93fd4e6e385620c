#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gpumux/gemm.hpp"

namespace gpumux {

// One model replica. All tenants in a run share the same `layers` (the
// workload model is restricted to a single architecture with distinct
// weights), so per-tenant state is the footprint, SLO and loop depth.
struct Tenant {
  std::string tenant_id;
  std::vector<GemmShape> layers;
  double weights_bytes = 0;
  double activation_bytes = 0;
  double slo_latency = 0.1;  // seconds per forward pass
  int concurrency = 1;       // closed-loop outstanding forward passes
};

struct WorkloadPreset {
  std::string name;
  std::vector<GemmShape> layers;
  double weights_bytes = 0;
  double slo_latency = 0.1;
};

const std::vector<WorkloadPreset>& all_presets();
const WorkloadPreset* find_preset(std::string_view name);

std::vector<Tenant> make_tenants(const WorkloadPreset& preset, int count,
                                 int concurrency = 1);

}  // namespace gpumux
