#include "gpumux/scheduler.hpp"

#include <algorithm>
#include <stdexcept>

namespace gpumux {

void RequestQueue::enqueue(const KernelRequest& request) {
  if (!request.shape.valid()) throw std::invalid_argument("enqueue: invalid shape");
  if (!ids_.insert(request.request_id).second) {
    throw std::invalid_argument("enqueue: duplicate request id " +
                                std::to_string(request.request_id));
  }
  groups_[request.shape].push_back(request);
  ++size_;
}

std::vector<KernelRequest> RequestQueue::cancel_tenant(int tenant_index) {
  std::vector<KernelRequest> removed;
  for (auto it = groups_.begin(); it != groups_.end();) {
    auto& dq = it->second;
    for (auto rit = dq.begin(); rit != dq.end();) {
      if (rit->tenant_index == tenant_index) {
        removed.push_back(*rit);
        ids_.erase(rit->request_id);
        rit = dq.erase(rit);
        --size_;
      } else {
        ++rit;
      }
    }
    it = dq.empty() ? groups_.erase(it) : std::next(it);
  }
  return removed;
}

double slo_headroom(const KernelRequest& request, TimeNs now,
                    double predicted_duration, const BatchPolicy& policy) {
  return to_seconds(request.slo_deadline - now) -
         predicted_duration * (1.0 + policy.slo_safety_margin);
}

KernelCost plan_super_kernel(std::span<const KernelRequest> members,
                             bool uniform, const BatchPolicy& policy,
                             const DeviceSpec& device) {
  std::vector<KernelGroup> kernels;
  kernels.reserve(members.size());
  for (const KernelRequest& r : members) {
    if (!kernels.empty() && kernels.back().shape == r.shape) {
      ++kernels.back().count;
    } else {
      kernels.push_back({r.shape, 1});
    }
  }
  KernelCost cost = dispatch_duration(kernels, device, device.slot_total(), 1);
  if (!uniform) {
    // Heterogeneous sub-problems batch with a relative efficiency loss.
    cost.duration *= policy.variable_inefficiency;
  }
  return cost;
}

namespace {

std::string signature_of(std::span<const KernelRequest> members, bool uniform) {
  if (uniform) {
    return shape_key(members.front().shape) + "*" +
           std::to_string(members.size());
  }
  std::vector<GemmShape> shapes;
  shapes.reserve(members.size());
  for (const KernelRequest& r : members) shapes.push_back(r.shape);
  std::sort(shapes.begin(), shapes.end());
  std::string sig = "v:";
  for (const GemmShape& s : shapes) sig += shape_key(s) + ";";
  return sig;
}

SuperKernel make_super_kernel(std::vector<KernelRequest> members, bool uniform,
                              const BatchPolicy& policy, const DeviceSpec& device) {
  SuperKernel sk;
  sk.uniform = uniform;
  if (uniform) {
    for (const KernelRequest& r : members) {
      if (!(r.shape == members.front().shape)) { sk.uniform = false; break; }
    }
  }
  sk.shape_signature = signature_of(members, sk.uniform);
  sk.planned_cost = plan_super_kernel(members, sk.uniform, policy, device);
  sk.members = std::move(members);
  return sk;
}

}  // namespace

std::vector<SuperKernel> form_batches(RequestQueue& queue, TimeNs now,
                                      const BatchPolicy& policy,
                                      const DeviceSpec& device) {
  std::vector<SuperKernel> formed;
  const TimeNs max_wait_ns = to_ns(policy.max_wait);

  if (policy.allow_variable_size) {
    // One pool ordered by arrival; chunks fill up to a wave of blocks.
    std::vector<KernelRequest> pool;
    pool.reserve(queue.size());
    for (auto& [shape, dq] : queue.groups_) {
      pool.insert(pool.end(), dq.begin(), dq.end());
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const KernelRequest& a, const KernelRequest& b) {
                       if (a.enqueue_time != b.enqueue_time) {
                         return a.enqueue_time < b.enqueue_time;
                       }
                       return a.request_id < b.request_id;
                     });
    std::size_t taken = 0;
    while (taken < pool.size()) {
      const std::size_t remaining = pool.size() - taken;
      const bool size_ok =
          static_cast<std::int64_t>(remaining) >= policy.target_batch;
      bool forced = now - pool[taken].enqueue_time >= max_wait_ns;
      if (!forced) {
        const double predicted =
            plan_super_kernel(std::span(pool).subspan(taken), false, policy,
                              device)
                .duration;
        for (std::size_t i = taken; i < pool.size() && !forced; ++i) {
          forced = slo_headroom(pool[i], now, predicted, policy) <= 0;
        }
      }
      if (!size_ok && !forced) break;
      // Fill one wave of block slots, at least one member.
      std::vector<KernelRequest> chunk;
      std::int64_t blocks = 0;
      while (taken < pool.size()) {
        const std::int64_t b = thread_blocks(pool[taken].shape, device);
        if (!chunk.empty() && blocks + b > device.slot_total()) break;
        if (size_ok && !forced &&
            static_cast<std::int64_t>(chunk.size()) >= policy.target_batch) {
          break;
        }
        blocks += b;
        chunk.push_back(pool[taken++]);
      }
      formed.push_back(make_super_kernel(std::move(chunk), false, policy, device));
    }
    if (!formed.empty()) {
      for (const SuperKernel& sk : formed) {
        for (const KernelRequest& r : sk.members) {
          auto& dq = queue.groups_[r.shape];
          for (auto it = dq.begin(); it != dq.end(); ++it) {
            if (it->request_id == r.request_id) {
              dq.erase(it);
              queue.ids_.erase(r.request_id);
              --queue.size_;
              break;
            }
          }
          if (dq.empty()) queue.groups_.erase(r.shape);
        }
      }
    }
    return formed;
  }

  for (auto it = queue.groups_.begin(); it != queue.groups_.end();) {
    auto& dq = it->second;
    // A super-kernel never takes more members than fill one wave of block
    // slots; what the trigger asked for beyond that waits for the next round.
    const std::int64_t wave_cap = std::max<std::int64_t>(
        1, device.slot_total() / thread_blocks(it->first, device));
    while (!dq.empty()) {
      const std::int64_t group_size = static_cast<std::int64_t>(dq.size());
      const bool size_ok = group_size >= policy.target_batch;
      bool forced = now - dq.front().enqueue_time >= max_wait_ns;
      if (!forced) {
        const std::int64_t probe =
            std::min<std::int64_t>(group_size, std::max<std::int64_t>(
                                                   policy.target_batch, 1));
        std::vector<KernelRequest> head(dq.begin(), dq.begin() + probe);
        const double predicted =
            plan_super_kernel(head, true, policy, device).duration;
        for (const KernelRequest& r : dq) {
          if (slo_headroom(r, now, predicted, policy) <= 0) { forced = true; break; }
        }
      }
      if (!size_ok && !forced) break;
      const std::int64_t take =
          std::min(size_ok ? policy.target_batch : group_size, wave_cap);
      std::vector<KernelRequest> members(dq.begin(), dq.begin() + take);
      for (const KernelRequest& r : members) queue.ids_.erase(r.request_id);
      dq.erase(dq.begin(), dq.begin() + take);
      queue.size_ -= take;
      formed.push_back(make_super_kernel(std::move(members), true, policy, device));
    }
    it = dq.empty() ? queue.groups_.erase(it) : std::next(it);
  }
  return formed;
}

double dispatch_cost(const SuperKernel& sk, SuperKernelCache& cache,
                     const DeviceSpec& device) {
  double duration = sk.planned_cost.duration;
  auto [it, inserted] = cache.entries.emplace(sk.shape_signature, sk.planned_cost);
  if (inserted) {
    ++cache.misses;
    duration += device.planning_overhead;
  } else {
    ++cache.hits;
  }
  return duration;
}

void record_latency(TenantHealth& health, double observed_seconds) {
  if (observed_seconds < 0) throw std::invalid_argument("negative latency");
  if (health.observed_count == 0) {
    health.ewma_latency = observed_seconds;
  } else {
    health.ewma_latency = health.ewma_alpha * observed_seconds +
                          (1.0 - health.ewma_alpha) * health.ewma_latency;
  }
  ++health.observed_count;
}

std::vector<KernelRequest> evict(std::vector<TenantHealth>& healths,
                                 RequestQueue& queue, int tenant_index) {
  TenantHealth* found = nullptr;
  for (TenantHealth& h : healths) {
    if (h.tenant_index == tenant_index) {
      found = &h;
      break;
    }
  }
  if (!found) {
    throw std::invalid_argument("evict: unknown tenant " +
                                std::to_string(tenant_index));
  }
  if (found->evicted) {
    throw std::invalid_argument("evict: tenant " + std::to_string(tenant_index) +
                                " already evicted");
  }
  found->evicted = true;
  return queue.cancel_tenant(tenant_index);
}

std::vector<int> detect_stragglers(std::span<const TenantHealth> healths,
                                   double threshold_ratio,
                                   std::int64_t min_observations) {
  if (threshold_ratio <= 1.0) {
    throw std::invalid_argument("threshold_ratio must be > 1");
  }
  std::vector<double> peer_ewma;
  for (const TenantHealth& h : healths) {
    if (!h.evicted && h.observed_count > 0) peer_ewma.push_back(h.ewma_latency);
  }
  if (peer_ewma.size() < 2) return {};
  std::sort(peer_ewma.begin(), peer_ewma.end());
  const std::size_t mid = peer_ewma.size() / 2;
  const double median = (peer_ewma.size() % 2 != 0)
                            ? peer_ewma[mid]
                            : 0.5 * (peer_ewma[mid - 1] + peer_ewma[mid]);
  std::vector<int> flagged;
  for (const TenantHealth& h : healths) {
    if (h.evicted) continue;
    if (h.observed_count >= min_observations &&
        h.ewma_latency > threshold_ratio * median) {
      flagged.push_back(h.tenant_index);
    }
  }
  return flagged;
}

}  // namespace gpumux
