#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gpumux/cost_model.hpp"
#include "gpumux/vtime.hpp"

namespace gpumux {

// One queued SGEMM problem from one tenant's forward pass.
struct KernelRequest {
  std::uint64_t request_id = 0;
  int tenant_index = 0;
  GemmShape shape;
  TimeNs enqueue_time = 0;
  TimeNs slo_deadline = 0;  // absolute virtual time
  int layer_index = 0;
  std::uint32_t pass_index = 0;
};

// Rules controlling when pending requests fuse into a super-kernel.
struct BatchPolicy {
  double max_wait = 2e-3;           // seconds a request may age before forced dispatch
  std::int64_t target_batch = 1;    // preferred members per super-kernel
  bool allow_variable_size = false; // fuse heterogeneous shapes (MAGMA-style)
  double slo_safety_margin = 0.0;   // fraction of predicted duration held back
  double variable_inefficiency = 1.10;  // relative cost of a variable-size batch
};

struct SuperKernel {
  std::string shape_signature;
  std::vector<KernelRequest> members;
  bool uniform = true;
  KernelCost planned_cost;
};

// Per-tenant latency monitor.
struct TenantHealth {
  int tenant_index = 0;
  double ewma_latency = 0;
  double ewma_alpha = 0.2;
  std::int64_t observed_count = 0;
  bool evicted = false;
};

struct SuperKernelCache {
  std::map<std::string, KernelCost> entries;
  std::int64_t hits = 0;
  std::int64_t misses = 0;
};

// Pending requests grouped by exact shape; FIFO within each group.
class RequestQueue {
 public:
  // Throws std::invalid_argument on a duplicate request id.
  void enqueue(const KernelRequest& request);
  bool empty() const { return size_ == 0; }
  std::int64_t size() const { return size_; }

  // Removes and returns all pending requests of one tenant.
  std::vector<KernelRequest> cancel_tenant(int tenant_index);

  const std::map<GemmShape, std::deque<KernelRequest>>& groups() const {
    return groups_;
  }

 private:
  friend std::vector<SuperKernel> form_batches(RequestQueue&, TimeNs,
                                               const BatchPolicy&,
                                               const DeviceSpec&);
  std::map<GemmShape, std::deque<KernelRequest>> groups_;
  std::unordered_set<std::uint64_t> ids_;
  std::int64_t size_ = 0;
};

// Seconds of slack before the request would breach its SLO if dispatched now.
double slo_headroom(const KernelRequest& request, TimeNs now,
                    double predicted_duration, const BatchPolicy& policy);

// Groups pending requests (by identical shape, or one pool in variable mode)
// and emits super-kernels. A group emits when it has target_batch members,
// when its oldest member has waited max_wait, or when any member is out of
// SLO headroom; members leave oldest-first. Emitted chunks are capped at one
// wave of block slots so a super-kernel fills the device without spilling
// into a second wave; an age/SLO trigger flushes the remainder in capped
// chunks as well.
std::vector<SuperKernel> form_batches(RequestQueue& queue, TimeNs now,
                                      const BatchPolicy& policy,
                                      const DeviceSpec& device);

// Planned roofline cost of fusing `members` into one launch.
KernelCost plan_super_kernel(std::span<const KernelRequest> members,
                             bool uniform, const BatchPolicy& policy,
                             const DeviceSpec& device);

// Executes the cache lookup side of a dispatch: on a miss the signature is
// inserted and planning_overhead is added to the returned duration.
double dispatch_cost(const SuperKernel& sk, SuperKernelCache& cache,
                     const DeviceSpec& device);

// EWMA update; the first observation initializes the average.
void record_latency(TenantHealth& health, double observed_seconds);

// Tenants whose EWMA exceeds threshold_ratio times the median EWMA over
// non-evicted tenants, once they have min_observations samples. Fewer than
// two non-evicted tenants means no peer baseline, so nothing is flagged.
std::vector<int> detect_stragglers(std::span<const TenantHealth> healths,
                                   double threshold_ratio,
                                   std::int64_t min_observations);

// Marks the tenant evicted and returns its cancelled pending requests.
// Eviction is terminal for the run: the engine admits nothing further from
// an evicted tenant. Throws std::invalid_argument for an unknown or
// already-evicted tenant.
std::vector<KernelRequest> evict(std::vector<TenantHealth>& healths,
                                 RequestQueue& queue, int tenant_index);

}  // namespace gpumux
