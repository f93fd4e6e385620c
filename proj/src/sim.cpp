#include "gpumux/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>

#include "gpumux/config_io.hpp"
#include "gpumux/metrics.hpp"

namespace gpumux {

void SimConfig::validate() const {
  device.validate();
  if (tenants.empty()) throw ConfigError("config: tenants must be non-empty");
  if (!(duration > warmup) || warmup < 0) {
    throw ConfigError("config: need duration > warmup >= 0");
  }
  for (const Tenant& t : tenants) {
    if (t.layers.empty()) throw ConfigError("config: tenant '" + t.tenant_id + "' has no layers");
    for (const GemmShape& s : t.layers) {
      if (!s.valid()) throw ConfigError("config: invalid layer shape in '" + t.tenant_id + "'");
    }
    if (t.concurrency < 1) throw ConfigError("config: concurrency must be >= 1");
    if (t.slo_latency <= 0) throw ConfigError("config: slo_latency must be > 0");
    if (t.layers != tenants.front().layers) {
      throw ConfigError("config: tenants must share identical layers ('" +
                        t.tenant_id + "' differs)");
    }
  }
  if (policy == PolicyKind::kExclusive && tenants.size() != 1) {
    throw ConfigError("exclusive requires single tenant");
  }
  if (policy_params.quantum <= 0) throw ConfigError("config: quantum must be > 0");
  if (policy_params.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (policy_params.fairness_gap_even < 0 ||
      policy_params.fairness_gap_odd < policy_params.fairness_gap_even) {
    throw ConfigError("config: need 0 <= fairness_gap_even <= fairness_gap_odd");
  }
  if (scheduler.max_wait <= 0) throw ConfigError("config: scheduler.max_wait must be > 0");
  if (scheduler.target_batch < 0) {
    throw ConfigError("config: scheduler.target_batch must be >= 0 (0 = auto)");
  }
  if (detector.threshold_ratio <= 1) {
    throw ConfigError("config: detector.threshold_ratio must be > 1");
  }
  if (degradation) {
    if (degradation->tenant_index < 0 ||
        degradation->tenant_index >= static_cast<int>(tenants.size())) {
      throw ConfigError("config: degradation names unknown tenant");
    }
    if (degradation->slowdown < 1.0) {
      throw ConfigError("config: degradation slowdown must be >= 1");
    }
  }
}

SimConfig inject_degradation(const SimConfig& config, int tenant_index,
                             double slowdown, double start) {
  if (tenant_index < 0 || tenant_index >= static_cast<int>(config.tenants.size())) {
    throw ConfigError("inject_degradation: unknown tenant");
  }
  SimConfig out = config;
  out.degradation = DegradationSpec{tenant_index, slowdown, start};
  return out;
}

namespace {

struct PassState {
  std::uint64_t pass_id = 0;
  TimeNs enqueue = 0;
  int next_layer = 0;
};

// Shared bookkeeping for the closed-loop drivers.
struct Engine {
  const SimConfig& cfg;
  std::vector<GemmShape> layers;  // effective (microbench keeps layer 0 only)
  TimeNs duration_ns = 0;
  TimeNs warmup_ns = 0;
  TimeNs slo_ns = 0;
  std::int64_t pass_flops = 0;  // per forward pass at batch 1
  Trace trace;
  std::uint64_t next_id = 1;

  explicit Engine(const SimConfig& config) : cfg(config) {
    layers = config.tenants.front().layers;
    if (config.mode == SimMode::kMicrobench) layers.resize(1);
    duration_ns = to_ns(config.duration);
    warmup_ns = to_ns(config.warmup);
    slo_ns = to_ns(config.tenants.front().slo_latency);
    for (const GemmShape& l : layers) pass_flops += gemm_flops(l);
  }

  bool degraded(int tenant, TimeNs now) const {
    return cfg.degradation && cfg.degradation->tenant_index == tenant &&
           cfg.degradation->slowdown > 1.0 && now >= to_ns(cfg.degradation->start);
  }

  // Tenant-local post-dispatch delay: the observed completion of a degraded
  // tenant's work stretches by the slowdown factor without holding the device.
  TimeNs completion_with_degradation(int tenant, TimeNs start, TimeNs exec) const {
    if (!degraded(tenant, start)) return start + exec;
    const double factor = cfg.degradation->slowdown;
    return start + static_cast<TimeNs>(
                       std::llround(static_cast<double>(exec) * factor));
  }

  void record_pass(std::uint64_t id, int tenant, TimeNs enqueue, TimeNs dispatch,
                   TimeNs complete) {
    RequestLifecycle rec;
    rec.request_id = id;
    rec.tenant_index = tenant;
    rec.enqueue_time = enqueue;
    rec.dispatch_time = dispatch;
    rec.complete_time = complete;
    rec.slo_met = (complete - enqueue) <= slo_ns;
    rec.flops = pass_flops;
    trace.completions.push_back(rec);
  }

  std::uint64_t fresh_id() { return next_id++; }
};

std::uint64_t jitter_seed(const SimConfig& cfg) {
  return cfg.policy_params.rng_seed != 0 ? cfg.policy_params.rng_seed : cfg.seed;
}

// ---------------------------------------------------------------------------
// Exclusive access: one tenant, `batch_size` queries per forward pass. The
// in-flight query count equals the batch so every pass launches fully formed.
void run_exclusive(Engine& eng) {
  const auto& cfg = eng.cfg;
  const std::int64_t batch = cfg.policy_params.batch_size;
  const DeviceSpec& dev = cfg.device;

  std::vector<TimeNs> layer_ns;
  PassCost pass = exclusive_pass_cost(eng.layers, batch, dev);
  TimeNs pass_ns = 0;
  for (const GemmShape& l : eng.layers) {
    const KernelCost c = dispatch_duration(batch_inputs(l, batch), dev,
                                           dev.slot_total(), 1);
    layer_ns.push_back(to_ns(c.duration));
    pass_ns += layer_ns.back();
  }

  struct Query { std::uint64_t id; TimeNs enqueue; };
  std::vector<Query> queries;
  for (std::int64_t i = 0; i < batch; ++i) queries.push_back({eng.fresh_id(), 0});

  TimeNs now = 0;
  while (now < eng.duration_ns) {
    const TimeNs start = now;
    const TimeNs end = start + pass_ns;
    DispatchEvent ev;
    ev.start = start;
    ev.end = end;
    ev.launches = pass.launches;
    ev.policy = PolicyKind::kExclusive;
    ev.occupancy = pass.occupancy;
    ev.flops = pass.flops;
    ev.tenant_index = 0;
    ev.member_requests.reserve(queries.size());
    for (const Query& q : queries) ev.member_requests.push_back(q.id);
    eng.trace.events.push_back(std::move(ev));
    eng.trace.dispatched_flops += pass.flops;
    eng.trace.completed_kernel_flops += pass.flops;

    const TimeNs complete = eng.completion_with_degradation(0, start, pass_ns);
    TimeNs next_start = end;
    for (Query& q : queries) {
      eng.record_pass(q.id, 0, q.enqueue, start, complete);
      q = {eng.fresh_id(), complete};
      next_start = std::max(next_start, complete);
    }
    now = next_start;
  }
}

// ---------------------------------------------------------------------------
// Time multiplexing: strict round-robin over tenants. A turn serves the
// passes that were ready when it began (never work arriving mid-turn), pays
// the context switch on every tenant change, and stops starting kernels once
// the quantum is spent; an interrupted pass resumes at its next turn.
void run_time_mux(Engine& eng) {
  const auto& cfg = eng.cfg;
  const DeviceSpec& dev = cfg.device;
  const int n = static_cast<int>(cfg.tenants.size());
  const TimeNs switch_ns =
      cfg.mode == SimMode::kMicrobench ? 0 : to_ns(dev.context_switch_overhead);
  const TimeNs quantum_ns = to_ns(cfg.policy_params.quantum);

  std::vector<TimeNs> layer_ns;
  std::vector<std::int64_t> layer_flops;
  std::vector<std::int64_t> layer_blocks;
  std::vector<std::int64_t> layer_wave_slots;
  for (const GemmShape& l : eng.layers) {
    const KernelCost c = dispatch_duration(l, dev, dev.slot_total(), 1);
    layer_ns.push_back(to_ns(c.duration));
    layer_flops.push_back(c.flops);
    layer_blocks.push_back(c.blocks);
    layer_wave_slots.push_back(c.waves * dev.slot_total());
  }

  std::vector<std::deque<PassState>> ready(n);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < cfg.tenants[t].concurrency; ++k) {
      ready[t].push_back({eng.fresh_id(), 0, 0});
    }
  }

  TimeNs now = 0;
  int cursor = 0;
  int last_served = -1;
  while (now < eng.duration_ns) {
    // Next tenant with work that was ready before this instant.
    int tenant = -1;
    for (int i = 0; i < n; ++i) {
      const int cand = (cursor + i) % n;
      if (!ready[cand].empty() && ready[cand].front().enqueue <= now) {
        tenant = cand;
        break;
      }
    }
    if (tenant < 0) {
      TimeNs wake = std::numeric_limits<TimeNs>::max();
      for (int t = 0; t < n; ++t) {
        if (!ready[t].empty()) wake = std::min(wake, ready[t].front().enqueue);
      }
      if (wake == std::numeric_limits<TimeNs>::max()) break;
      now = wake;
      continue;
    }

    const bool charged = last_served != -1 && last_served != tenant;
    const TimeNs turn_start = now + (charged ? switch_ns : 0);
    TimeNs cur = turn_start;
    DispatchEvent ev;
    ev.start = turn_start;
    ev.launches = 0;
    ev.policy = PolicyKind::kTimeMux;
    ev.context_switches = charged ? 1 : 0;
    ev.tenant_index = tenant;
    std::int64_t blocks = 0;
    std::int64_t wave_slots = 0;

    const std::size_t ready_count = ready[tenant].size();
    bool quantum_spent = false;
    for (std::size_t p = 0; p < ready_count && !quantum_spent; ++p) {
      PassState& pass = ready[tenant].front();
      if (pass.enqueue > now) break;
      ev.member_requests.push_back(pass.pass_id);
      bool pass_done = false;
      while (pass.next_layer < static_cast<int>(eng.layers.size())) {
        const int l = pass.next_layer;
        cur += layer_ns[l];
        ev.launches += 1;
        ev.flops += layer_flops[l];
        blocks += layer_blocks[l];
        wave_slots += layer_wave_slots[l];
        eng.trace.completed_kernel_flops += layer_flops[l];
        ++pass.next_layer;
        pass_done = pass.next_layer == static_cast<int>(eng.layers.size());
        if (pass_done) break;
        if (cur - turn_start >= quantum_ns) {
          quantum_spent = true;  // pass resumes at this tenant's next turn
          break;
        }
      }
      if (pass_done) {
        const TimeNs complete =
            eng.completion_with_degradation(tenant, turn_start, cur - turn_start);
        eng.record_pass(pass.pass_id, tenant, pass.enqueue, turn_start, complete);
        ready[tenant].pop_front();
        ready[tenant].push_back({eng.fresh_id(), complete, 0});
        if (cur - turn_start >= quantum_ns) quantum_spent = true;
      }
    }
    ev.end = cur;
    eng.trace.dispatched_flops += ev.flops;
    ev.occupancy = wave_slots > 0
                       ? static_cast<double>(blocks) / static_cast<double>(wave_slots)
                       : 1.0;
    eng.trace.events.push_back(std::move(ev));
    last_served = tenant;
    cursor = (tenant + 1) % n;
    now = cur;
  }
}

// ---------------------------------------------------------------------------
// Spatial multiplexing (implicit via the device scheduler, explicit via
// streams in one process): every tenant's ready passes run concurrently in
// one round over a statically partitioned slot budget.
void run_spatial(Engine& eng, bool implicit) {
  const auto& cfg = eng.cfg;
  const DeviceSpec& dev = cfg.device;
  const int n = static_cast<int>(cfg.tenants.size());
  JitterRng rng(jitter_seed(cfg));

  std::vector<std::deque<PassState>> ready(n);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < cfg.tenants[t].concurrency; ++k) {
      ready[t].push_back({eng.fresh_id(), 0, 0});
    }
  }

  TimeNs now = 0;
  while (now < eng.duration_ns) {
    std::vector<int> active;
    for (int t = 0; t < n; ++t) {
      if (!ready[t].empty() && ready[t].front().enqueue <= now) active.push_back(t);
    }
    if (active.empty()) {
      TimeNs wake = std::numeric_limits<TimeNs>::max();
      for (int t = 0; t < n; ++t) {
        if (!ready[t].empty()) wake = std::min(wake, ready[t].front().enqueue);
      }
      if (wake == std::numeric_limits<TimeNs>::max()) break;
      now = wake;
      continue;
    }

    std::vector<SpatialTenantWork> work;
    std::vector<std::size_t> served(active.size(), 0);
    for (std::size_t i = 0; i < active.size(); ++i) {
      SpatialTenantWork w;
      for (const PassState& p : ready[active[i]]) {
        if (p.enqueue > now) break;
        for (const GemmShape& l : eng.layers) w.kernels.push_back(l);
        ++served[i];
      }
      work.push_back(std::move(w));
    }

    const SpatialRoundCost round =
        spatial_round_cost(work, cfg.policy_params, dev, implicit, rng);
    const TimeNs round_end = now + to_ns(round.span);

    for (std::size_t i = 0; i < active.size(); ++i) {
      const int tenant = active[i];
      const TimeNs completion_ns = to_ns(round.completion[i]);
      DispatchEvent ev;
      ev.start = now;
      ev.end = round_end;
      ev.launches = static_cast<std::int64_t>(work[i].kernels.size());
      ev.policy = implicit ? PolicyKind::kSpaceImplicit : PolicyKind::kSpaceExplicit;
      ev.occupancy = round.occupancy[i];
      ev.tenant_index = tenant;

      const std::size_t pass_count = served[i];
      std::int64_t tenant_flops = static_cast<std::int64_t>(pass_count) * eng.pass_flops;
      ev.flops = tenant_flops;
      eng.trace.dispatched_flops += tenant_flops;
      eng.trace.completed_kernel_flops += tenant_flops;

      const TimeNs complete =
          eng.completion_with_degradation(tenant, now, completion_ns);
      for (std::size_t p = 0; p < pass_count; ++p) {
        PassState& pass = ready[tenant].front();
        ev.member_requests.push_back(pass.pass_id);
        eng.record_pass(pass.pass_id, tenant, pass.enqueue, now, complete);
        ready[tenant].pop_front();
        ready[tenant].push_back({eng.fresh_id(), complete, 0});
      }
      eng.trace.events.push_back(std::move(ev));
    }
    now = round_end;
  }
}

// ---------------------------------------------------------------------------
// Dynamic space-time scheduling: per-layer kernel requests flow through the
// batching queue; formed super-kernels run back-to-back on the device; the
// per-kernel latency monitor can evict stragglers.
struct StEvent {
  TimeNs time = 0;
  int type = 0;  // 0 request-ready, 1 device-free, 2 batch-timer
  int tenant = 0;
  std::uint64_t seq = 0;
  KernelRequest request;  // type 0 only

  bool operator>(const StEvent& o) const {
    return std::tie(time, type, tenant, seq) >
           std::tie(o.time, o.type, o.tenant, o.seq);
  }
};

struct PassProgress {
  std::uint64_t pass_id = 0;
  TimeNs enqueue = 0;
  TimeNs first_dispatch = -1;
};

void run_space_time(Engine& eng) {
  const auto& cfg = eng.cfg;
  const DeviceSpec& dev = cfg.device;
  const int n = static_cast<int>(cfg.tenants.size());
  const int layer_count = static_cast<int>(eng.layers.size());

  RequestQueue queue;
  SuperKernelCache cache;
  std::vector<TenantHealth> healths(n);
  for (int t = 0; t < n; ++t) {
    healths[t].tenant_index = t;
    healths[t].ewma_alpha = cfg.detector.ewma_alpha;
  }
  std::vector<std::map<std::uint32_t, PassProgress>> passes(n);
  std::vector<std::uint32_t> next_pass(n, 0);

  std::priority_queue<StEvent, std::vector<StEvent>, std::greater<StEvent>> pq;
  std::uint64_t seq = 0;
  std::deque<SuperKernel> dispatch_fifo;
  bool device_busy = false;
  struct InFlight { SuperKernel sk; TimeNs start = 0; TimeNs end = 0; };
  InFlight in_flight;

  auto start_pass = [&](int tenant, TimeNs at) {
    const std::uint32_t pass_index = next_pass[tenant]++;
    PassProgress prog;
    prog.pass_id = eng.fresh_id();
    prog.enqueue = at;
    passes[tenant][pass_index] = prog;
    KernelRequest r;
    r.request_id = eng.fresh_id();
    r.tenant_index = tenant;
    r.shape = eng.layers[0];
    r.enqueue_time = at;
    r.slo_deadline = at + eng.slo_ns;
    r.layer_index = 0;
    r.pass_index = pass_index;
    pq.push({at, 0, tenant, seq++, r});
  };

  auto active_streams = [&]() {
    std::int64_t count = 0;
    for (int t = 0; t < n; ++t) {
      if (!healths[t].evicted) count += cfg.tenants[t].concurrency;
    }
    return count;
  };

  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < cfg.tenants[t].concurrency; ++k) start_pass(t, 0);
  }

  const TimeNs max_wait_ns = to_ns(cfg.scheduler.max_wait);

  while (!pq.empty()) {
    const TimeNs now = pq.top().time;

    // Apply every event at this timestamp, including ones pushed while
    // processing (completion-driven enqueues land at the same instant).
    while (!pq.empty() && pq.top().time == now) {
      const StEvent ev = pq.top();
      pq.pop();
      if (ev.type == 0) {
        if (healths[ev.tenant].evicted) {
          eng.trace.cancellations.push_back(ev.request.request_id);
          continue;
        }
        queue.enqueue(ev.request);
      } else if (ev.type == 1) {
        // Super-kernel completion.
        device_busy = false;
        const SuperKernel& sk = in_flight.sk;
        const TimeNs exec = in_flight.end - in_flight.start;
        eng.trace.completed_kernel_flops += sk.planned_cost.flops;
        for (const KernelRequest& r : sk.members) {
          const TimeNs complete =
              eng.completion_with_degradation(r.tenant_index, in_flight.start, exec);
          record_latency(healths[r.tenant_index],
                         to_seconds(complete - in_flight.start));
          if (healths[r.tenant_index].evicted) continue;
          auto it = passes[r.tenant_index].find(r.pass_index);
          if (it == passes[r.tenant_index].end()) continue;
          PassProgress& prog = it->second;
          if (prog.first_dispatch < 0) prog.first_dispatch = in_flight.start;
          if (r.layer_index + 1 < layer_count) {
            KernelRequest next = r;
            next.request_id = eng.fresh_id();
            next.shape = eng.layers[r.layer_index + 1];
            next.enqueue_time = complete;
            ++next.layer_index;
            pq.push({complete, 0, r.tenant_index, seq++, next});
          } else {
            eng.record_pass(prog.pass_id, r.tenant_index, prog.enqueue,
                            prog.first_dispatch, complete);
            passes[r.tenant_index].erase(it);
            start_pass(r.tenant_index, complete);
          }
        }
        // Monitor and evict stragglers once their sample count qualifies.
        if (cfg.detector.evict_stragglers) {
          for (int t : detect_stragglers(healths, cfg.detector.threshold_ratio,
                                         cfg.detector.min_observations)) {
            eng.trace.evicted_tenants.push_back(t);
            eng.trace.eviction_times.push_back(now);
            for (const KernelRequest& r : evict(healths, queue, t)) {
              eng.trace.cancellations.push_back(r.request_id);
            }
            passes[t].clear();
          }
        }
      }
      // type 2 is a bare wake-up
    }

    if (device_busy) continue;

    if (!dispatch_fifo.empty() || now < eng.duration_ns) {
      if (dispatch_fifo.empty()) {
        BatchPolicy policy = cfg.scheduler;
        if (policy.target_batch == 0) {
          policy.target_batch = std::max<std::int64_t>(1, active_streams());
        } else {
          policy.target_batch =
              std::min(policy.target_batch,
                       std::max<std::int64_t>(1, active_streams()));
        }
        for (SuperKernel& sk : form_batches(queue, now, policy, dev)) {
          dispatch_fifo.push_back(std::move(sk));
        }
      }
      if (!dispatch_fifo.empty()) {
        SuperKernel sk = std::move(dispatch_fifo.front());
        dispatch_fifo.pop_front();
        const double duration_s = dispatch_cost(sk, cache, dev);
        const TimeNs end = now + to_ns(duration_s);
        DispatchEvent ev;
        ev.start = now;
        ev.end = end;
        ev.launches = 1;
        ev.policy = PolicyKind::kSpaceTime;
        ev.occupancy = static_cast<double>(sk.planned_cost.blocks) /
                       static_cast<double>(sk.planned_cost.waves * dev.slot_total());
        ev.flops = sk.planned_cost.flops;
        ev.member_requests.reserve(sk.members.size());
        for (const KernelRequest& r : sk.members) {
          ev.member_requests.push_back(r.request_id);
        }
        eng.trace.dispatched_flops += sk.planned_cost.flops;
        eng.trace.events.push_back(std::move(ev));
        device_busy = true;
        in_flight = {std::move(sk), now, end};
        pq.push({end, 1, 0, seq++, {}});
      } else if (!queue.empty() && now < eng.duration_ns) {
        // Nothing triggered: wake exactly when the earliest age or SLO
        // deadline arrives.
        BatchPolicy policy = cfg.scheduler;
        if (policy.target_batch == 0) {
          policy.target_batch = std::max<std::int64_t>(1, active_streams());
        }
        TimeNs wake = std::numeric_limits<TimeNs>::max();
        for (const auto& [shape, dq] : queue.groups()) {
          wake = std::min(wake, dq.front().enqueue_time + max_wait_ns);
          const std::int64_t probe = std::min<std::int64_t>(
              static_cast<std::int64_t>(dq.size()),
              std::max<std::int64_t>(policy.target_batch, 1));
          std::vector<KernelRequest> head(dq.begin(), dq.begin() + probe);
          const double predicted =
              plan_super_kernel(head, true, policy, dev).duration;
          const TimeNs predicted_ns =
              to_ns(predicted * (1.0 + policy.slo_safety_margin));
          for (const KernelRequest& r : dq) {
            wake = std::min(wake, r.slo_deadline - predicted_ns);
          }
        }
        if (wake != std::numeric_limits<TimeNs>::max()) {
          pq.push({std::max(wake, now + 1), 2, 0, seq++, {}});
        }
      }
    }
  }

  eng.trace.cache_hits = cache.hits;
  eng.trace.cache_misses = cache.misses;
}

}  // namespace

Trace run(const SimConfig& config) {
  config.validate();
  Engine eng(config);

  const SharingMode mode = footprint_mode(config.policy, config.mode);
  const double required = memory_footprint(config.tenants, mode, config.device);
  if (required > config.device.mem_capacity) {
    const char* mode_name = mode == SharingMode::kProcessPerTenant
                                ? "process-per-tenant"
                                : "shared-context";
    throw InfeasibleError(
        "out of device memory: " + std::string(policy_name(config.policy)) +
            " (" + mode_name + ") needs " + std::to_string(required) +
            " bytes of " + std::to_string(config.device.mem_capacity),
        required, config.device.mem_capacity);
  }
  eng.trace.peak_memory = required;

  switch (config.policy) {
    case PolicyKind::kExclusive:
      run_exclusive(eng);
      break;
    case PolicyKind::kTimeMux:
      run_time_mux(eng);
      break;
    case PolicyKind::kSpaceImplicit:
      run_spatial(eng, true);
      break;
    case PolicyKind::kSpaceExplicit:
      run_spatial(eng, false);
      break;
    case PolicyKind::kSpaceTime:
      run_space_time(eng);
      break;
  }

  eng.trace.config_echo = config_to_json(config).dump();
  return std::move(eng.trace);
}

OraclePrediction analytic_oracle(const SimConfig& config) {
  config.validate();
  if (config.degradation) throw ConfigError("oracle: degradation unsupported");
  std::vector<GemmShape> layers = config.tenants.front().layers;
  if (config.mode == SimMode::kMicrobench) layers.resize(1);
  if (layers.size() != 1) throw ConfigError("oracle: single shape only");
  for (const Tenant& t : config.tenants) {
    if (t.concurrency != 1) throw ConfigError("oracle: concurrency 1 only");
  }
  const DeviceSpec& dev = config.device;
  const GemmShape shape = layers[0];
  const double flops = static_cast<double>(gemm_flops(shape));
  const std::int64_t r = static_cast<std::int64_t>(config.tenants.size());

  OraclePrediction out;
  switch (config.policy) {
    case PolicyKind::kExclusive: {
      const std::int64_t b = config.policy_params.batch_size;
      const KernelCost c =
          dispatch_duration(batch_inputs(shape, b), dev, dev.slot_total(), 1);
      const TimeNs pass_ns = to_ns(c.duration);
      out.latency = to_seconds(pass_ns);
      out.throughput = static_cast<double>(c.flops) / out.latency;
      return out;
    }
    case PolicyKind::kTimeMux: {
      const KernelCost c = dispatch_duration(shape, dev, dev.slot_total(), 1);
      const TimeNs kernel_ns = to_ns(c.duration);
      const TimeNs switch_ns = config.mode == SimMode::kMicrobench
                                   ? 0
                                   : to_ns(dev.context_switch_overhead);
      const TimeNs cycle = static_cast<TimeNs>(r) *
                           (kernel_ns + (r > 1 ? switch_ns : 0));
      out.latency = to_seconds(cycle);
      out.throughput = static_cast<double>(r) * flops / out.latency;
      return out;
    }
    case PolicyKind::kSpaceTime: {
      const std::int64_t target = config.scheduler.target_batch;
      if (target != 0 && target != r) {
        throw ConfigError("oracle: space-time requires full target batches");
      }
      const std::int64_t blocks = thread_blocks(shape, dev);
      if (r * blocks > dev.slot_total()) {
        throw ConfigError("oracle: space-time supported up to one wave");
      }
      const KernelGroup group{shape, r};
      const KernelCost c = dispatch_duration(
          std::span<const KernelGroup>(&group, 1), dev, dev.slot_total(), 1);
      const TimeNs round_ns = to_ns(c.duration);
      out.latency = to_seconds(round_ns);
      out.throughput = static_cast<double>(c.flops) / out.latency;
      return out;
    }
    default:
      throw ConfigError("oracle: unsupported policy");
  }
}

}  // namespace gpumux
