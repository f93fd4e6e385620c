#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpumux/cost_model.hpp"
#include "gpumux/vtime.hpp"

namespace gpumux {

enum class PolicyKind {
  kExclusive,
  kTimeMux,
  kSpaceImplicit,
  kSpaceExplicit,
  kSpaceTime,
};

// Wire names used in configs and CSV.
std::string_view policy_name(PolicyKind kind);
std::optional<PolicyKind> policy_from_name(std::string_view name);

struct PolicyParams {
  double quantum = 5e-3;          // time-mux round-robin slice
  std::int64_t batch_size = 1;    // exclusive-access batch
  double fairness_gap_even = 0.25;  // implicit-spatial jitter ceiling, even n
  double fairness_gap_odd = 0.45;   // ceiling when an odd tenant count runs
  std::uint64_t rng_seed = 0;     // 0 = derive from the sim seed
};

// One kernel invocation window on the device. Spatial rounds emit one event
// per tenant, all sharing the round's [start, end) window.
struct DispatchEvent {
  TimeNs start = 0;
  TimeNs end = 0;
  std::int64_t launches = 1;
  std::vector<std::uint64_t> member_requests;
  PolicyKind policy = PolicyKind::kExclusive;
  double occupancy = 0;
  int context_switches = 0;
  std::int64_t flops = 0;
  int tenant_index = -1;  // -1 when the event spans tenants
};

enum class SimMode { kForwardPass, kMicrobench };

// Which footprint accounting a policy uses. Microbench mode models a
// single-process kernel benchmark, so everything shares one context.
SharingMode footprint_mode(PolicyKind kind, SimMode mode);

// Cost of one forward pass executed alone at the full slot budget with each
// layer batched `batch` wide; one launch per layer.
struct PassCost {
  double duration = 0;  // seconds, includes per-layer launch overhead
  std::int64_t launches = 0;
  std::int64_t flops = 0;
  std::int64_t blocks = 0;
  std::int64_t wave_slots = 0;  // sum over layers of waves*slot_budget
  double occupancy = 0;
};
PassCost exclusive_pass_cost(std::span<const GemmShape> layers,
                             std::int64_t batch, const DeviceSpec& device);

// Deterministic uniform doubles for the jitter model. mt19937_64 is fully
// specified by the standard; the [0,1) mapping is ours so results do not
// depend on the library's distribution implementation.
class JitterRng {
 public:
  explicit JitterRng(std::uint64_t seed) : gen_(seed) {}
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 gen_;
};

// A tenant's serial kernel chain for one concurrent round.
struct SpatialTenantWork {
  std::vector<GemmShape> kernels;
};

struct SpatialRoundCost {
  // Per-tenant completion offsets from round start, seconds, jitter applied.
  std::vector<double> completion;
  std::vector<double> occupancy;
  double span = 0;              // max completion
  std::int64_t launches = 0;    // total kernel launches in the round
};

// Concurrent round under implicit/explicit spatial multiplexing. The slot
// budget is statically partitioned across tenants: each tenant's blocks wave
// within its partition but per-slot throughput stays peak/slot_total, so a
// kernel never runs faster concurrently than it would alone. The serialized
// share of launch overheads and the scheduling penalty stretch the round;
// implicit mode draws a larger jitter ceiling when the tenant count is odd.
SpatialRoundCost spatial_round_cost(std::span<const SpatialTenantWork> work,
                                    const PolicyParams& params,
                                    const DeviceSpec& device, bool implicit,
                                    JitterRng& rng);

}  // namespace gpumux
