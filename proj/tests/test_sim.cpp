#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "gpumux/metrics.hpp"
#include "gpumux/sim.hpp"

using namespace gpumux;

namespace {

DeviceSpec sim_device() {
  DeviceSpec d;
  d.launch_overhead = 5e-6;
  d.context_switch_overhead = 1e-3;
  d.planning_overhead = 50e-6;
  d.space_sched_penalty = 1.5;
  d.launch_serialization = 0.5;
  return d;
}

SimConfig base_config(PolicyKind policy, int tenants, GemmShape shape,
                      double duration = 0.05) {
  SimConfig cfg;
  cfg.device = sim_device();
  cfg.policy = policy;
  Tenant t;
  t.layers = {shape};
  t.weights_bytes = 1e6;
  t.slo_latency = 0.05;
  cfg.tenants.assign(tenants, t);
  for (int i = 0; i < tenants; ++i) {
    cfg.tenants[i].tenant_id = "t" + std::to_string(i);
  }
  cfg.duration = duration;
  cfg.warmup = 0.1 * duration;
  cfg.seed = 11;
  cfg.scheduler.target_batch = 0;
  return cfg;
}

bool traces_equal(const Trace& a, const Trace& b) {
  if (a.events.size() != b.events.size()) return false;
  if (a.completions.size() != b.completions.size()) return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const DispatchEvent& x = a.events[i];
    const DispatchEvent& y = b.events[i];
    if (x.start != y.start || x.end != y.end || x.launches != y.launches ||
        x.flops != y.flops || x.member_requests != y.member_requests ||
        x.occupancy != y.occupancy) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.completions.size(); ++i) {
    const RequestLifecycle& x = a.completions[i];
    const RequestLifecycle& y = b.completions[i];
    if (x.request_id != y.request_id || x.enqueue_time != y.enqueue_time ||
        x.complete_time != y.complete_time || x.slo_met != y.slo_met) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("closed loop: one tenant under exclusive hits the closed form") {
  SimConfig cfg = base_config(PolicyKind::kExclusive, 1, {256, 128, 1152});
  const Trace trace = run(cfg);
  const RunMetrics m = aggregate(trace, cfg);
  const OraclePrediction oracle = analytic_oracle(cfg);
  CHECK(m.mean_latency == doctest::Approx(oracle.latency).epsilon(1e-12));
  // window edges clip a fractional pass, so throughput is near but not exact
  CHECK(m.throughput_gflops * 1e9 ==
        doctest::Approx(oracle.throughput).epsilon(0.01));
}

TEST_CASE("identical configs produce identical traces") {
  for (PolicyKind policy :
       {PolicyKind::kExclusive, PolicyKind::kTimeMux, PolicyKind::kSpaceImplicit,
        PolicyKind::kSpaceExplicit, PolicyKind::kSpaceTime}) {
    const int tenants = policy == PolicyKind::kExclusive ? 1 : 7;
    SimConfig cfg = base_config(policy, tenants, {256, 128, 1152}, 0.01);
    const Trace a = run(cfg);
    const Trace b = run(cfg);
    CHECK(traces_equal(a, b));
  }
}

TEST_CASE("oracle equivalence across a config grid") {
  const GemmShape shapes[] = {{256, 128, 1152}, {512, 1, 512}, {256, 256, 256},
                              {64, 64, 64},     {100, 100, 100}, {65, 64, 7},
                              {512, 512, 512}};
  int cases = 0;
  for (const GemmShape& shape : shapes) {
    // exclusive at several batch sizes
    for (std::int64_t b : {1, 2, 5, 20, 26}) {
      SimConfig cfg = base_config(PolicyKind::kExclusive, 1, shape, 0.02);
      cfg.policy_params.batch_size = b;
      const OraclePrediction oracle = analytic_oracle(cfg);
      const RunMetrics m = aggregate(run(cfg), cfg);
      CHECK(std::abs(m.mean_latency - oracle.latency) <=
            1e-9 * oracle.latency);
      ++cases;
    }
    // time multiplexing at several replica counts
    for (int r : {1, 2, 3, 5, 8, 10}) {
      SimConfig cfg = base_config(PolicyKind::kTimeMux, r, shape, 0.8);
      const OraclePrediction oracle = analytic_oracle(cfg);
      const RunMetrics m = aggregate(run(cfg), cfg);
      CHECK(std::abs(m.mean_latency - oracle.latency) <=
            1e-9 * oracle.latency);
      ++cases;
    }
    // space-time with full target batches, up to one wave
    for (int r : {1, 2, 5, 10, 20}) {
      SimConfig cfg = base_config(PolicyKind::kSpaceTime, r, shape, 0.02);
      try {
        const OraclePrediction oracle = analytic_oracle(cfg);
        const RunMetrics m = aggregate(run(cfg), cfg);
        CHECK(std::abs(m.mean_latency - oracle.latency) <=
              1e-9 * oracle.latency);
        ++cases;
      } catch (const ConfigError&) {
        // more blocks than one wave; outside the oracle's domain
      }
    }
  }
  CHECK(cases >= 100);
}

TEST_CASE("time-mux: single tenant equals exclusive batch 1, no switches") {
  SimConfig tm = base_config(PolicyKind::kTimeMux, 1, {256, 128, 1152}, 0.01);
  SimConfig ex = base_config(PolicyKind::kExclusive, 1, {256, 128, 1152}, 0.01);
  const Trace tm_trace = run(tm);
  const Trace ex_trace = run(ex);
  int switches = 0;
  for (const DispatchEvent& e : tm_trace.events) switches += e.context_switches;
  CHECK(switches == 0);
  CHECK(aggregate(tm_trace, tm).mean_latency ==
        doctest::Approx(aggregate(ex_trace, ex).mean_latency));
}

TEST_CASE("time-mux: steady-state cycle is R*(kernel + switch)") {
  const int r = 5;
  SimConfig cfg = base_config(PolicyKind::kTimeMux, r, {256, 128, 1152}, 0.5);
  const Trace trace = run(cfg);
  const KernelCost kc =
      dispatch_duration({256, 128, 1152}, cfg.device, 160, 1);
  const TimeNs cycle =
      r * (to_ns(kc.duration) + to_ns(cfg.device.context_switch_overhead));
  // consecutive completions of one tenant are exactly one cycle apart
  std::vector<TimeNs> tenant0;
  for (const RequestLifecycle& c : trace.completions) {
    if (c.tenant_index == 0) tenant0.push_back(c.complete_time);
  }
  REQUIRE(tenant0.size() > 10);
  for (std::size_t i = 5; i + 1 < tenant0.size(); ++i) {
    CHECK(tenant0[i + 1] - tenant0[i] == cycle);
  }
  // events never overlap and stay ordered
  for (std::size_t i = 0; i + 1 < trace.events.size(); ++i) {
    CHECK(trace.events[i].end <= trace.events[i + 1].start);
  }
}

TEST_CASE("time-mux is work-conserving outside switch intervals") {
  SimConfig cfg = base_config(PolicyKind::kTimeMux, 4, {256, 128, 1152}, 0.1);
  const Trace trace = run(cfg);
  const TimeNs switch_ns = to_ns(cfg.device.context_switch_overhead);
  for (std::size_t i = 8; i + 1 < trace.events.size(); ++i) {
    CHECK(trace.events[i + 1].start - trace.events[i].end == switch_ns);
  }
}

TEST_CASE("spatial rounds share one window per round") {
  SimConfig cfg = base_config(PolicyKind::kSpaceImplicit, 6, {256, 128, 1152}, 0.02);
  const Trace trace = run(cfg);
  REQUIRE(trace.events.size() >= 12);
  for (std::size_t i = 0; i + 6 <= trace.events.size(); i += 6) {
    for (std::size_t j = 1; j < 6; ++j) {
      CHECK(trace.events[i + j].start == trace.events[i].start);
      CHECK(trace.events[i + j].end == trace.events[i].end);
    }
  }
}

TEST_CASE("flops conservation across randomized configs") {
  std::mt19937_64 rng(99);
  const PolicyKind policies[] = {PolicyKind::kExclusive, PolicyKind::kTimeMux,
                                 PolicyKind::kSpaceImplicit,
                                 PolicyKind::kSpaceExplicit,
                                 PolicyKind::kSpaceTime};
  int checked = 0;
  for (int i = 0; i < 50; ++i) {
    const PolicyKind policy = policies[rng() % 5];
    const int tenants =
        policy == PolicyKind::kExclusive ? 1 : static_cast<int>(rng() % 12 + 1);
    const GemmShape shape{static_cast<std::int64_t>(rng() % 400 + 1),
                          static_cast<std::int64_t>(rng() % 400 + 1),
                          static_cast<std::int64_t>(rng() % 400 + 1)};
    SimConfig cfg = base_config(policy, tenants, shape, 0.02);
    cfg.seed = rng();
    if (policy == PolicyKind::kExclusive) {
      cfg.policy_params.batch_size = static_cast<std::int64_t>(rng() % 16 + 1);
    }
    if (rng() % 2 == 0) cfg.mode = SimMode::kMicrobench;
    const Trace trace = run(cfg);
    CHECK(trace.dispatched_flops == trace.completed_kernel_flops);
    std::int64_t event_flops = 0;
    for (const DispatchEvent& e : trace.events) event_flops += e.flops;
    CHECK(event_flops == trace.dispatched_flops);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("single-tenant saturation: the loop never goes idle") {
  for (PolicyKind policy : {PolicyKind::kTimeMux, PolicyKind::kSpaceExplicit,
                            PolicyKind::kSpaceTime}) {
    SimConfig cfg = base_config(policy, 3, {256, 128, 1152}, 0.02);
    const Trace trace = run(cfg);
    // each tenant's next pass enqueues the instant the previous completes
    std::map<int, std::vector<const RequestLifecycle*>> per_tenant;
    for (const RequestLifecycle& c : trace.completions) {
      per_tenant[c.tenant_index].push_back(&c);
    }
    for (auto& [tenant, list] : per_tenant) {
      for (std::size_t i = 0; i + 1 < list.size(); ++i) {
        CHECK(list[i + 1]->enqueue_time == list[i]->complete_time);
      }
    }
  }
}

TEST_CASE("event-time causality") {
  for (PolicyKind policy : {PolicyKind::kTimeMux, PolicyKind::kSpaceImplicit,
                            PolicyKind::kSpaceTime}) {
    SimConfig cfg = base_config(policy, 4, {128, 64, 256}, 0.02);
    const Trace trace = run(cfg);
    for (const RequestLifecycle& c : trace.completions) {
      CHECK(c.enqueue_time <= c.dispatch_time);
      CHECK(c.dispatch_time < c.complete_time);
    }
  }
}

TEST_CASE("exclusive batch 20 matches the 20-way super-kernel round") {
  SimConfig ex = base_config(PolicyKind::kExclusive, 1, {256, 128, 1152}, 0.05);
  ex.policy_params.batch_size = 20;
  SimConfig st = base_config(PolicyKind::kSpaceTime, 20, {256, 128, 1152}, 0.05);
  const RunMetrics ex_m = aggregate(run(ex), ex);
  const RunMetrics st_m = aggregate(run(st), st);
  CHECK(ex_m.mean_latency == doctest::Approx(st_m.mean_latency).epsilon(1e-9));
  CHECK(ex_m.throughput_gflops ==
        doctest::Approx(st_m.throughput_gflops).epsilon(1e-9));
}

TEST_CASE("inject_degradation validates and no-ops at slowdown 1") {
  SimConfig cfg = base_config(PolicyKind::kSpaceTime, 4, {256, 128, 1152}, 0.01);
  CHECK_THROWS_AS(inject_degradation(cfg, 99, 2.0, 0.0), ConfigError);
  const SimConfig degraded = inject_degradation(cfg, 1, 1.0, 0.0);
  CHECK(traces_equal(run(cfg), run(degraded)));
  // injection after the horizon has no effect either
  const SimConfig late = inject_degradation(cfg, 1, 3.0, cfg.duration * 2);
  CHECK(traces_equal(run(cfg), run(late)));
}

TEST_CASE("a 2x degraded tenant is flagged and evicted; work is cancelled") {
  SimConfig cfg = base_config(PolicyKind::kSpaceTime, 10, {256, 128, 1152}, 0.05);
  cfg.detector.min_observations = 10;
  const SimConfig degraded = inject_degradation(cfg, 3, 2.0, 0.0);
  const Trace trace = run(degraded);
  REQUIRE(trace.evicted_tenants.size() == 1);
  CHECK(trace.evicted_tenants[0] == 3);
  CHECK(!trace.cancellations.empty());
  // terminal: nothing from tenant 3 completes after the eviction
  const TimeNs evicted_at = trace.eviction_times[0];
  for (const RequestLifecycle& c : trace.completions) {
    if (c.tenant_index == 3) CHECK(c.enqueue_time <= evicted_at);
  }
  // the detector fires within 2x min_observations of its completions
  std::int64_t straggler_completions = 0;
  for (const RequestLifecycle& c : trace.completions) {
    if (c.tenant_index == 3 && c.complete_time <= evicted_at) {
      ++straggler_completions;
    }
  }
  CHECK(straggler_completions <= 2 * cfg.detector.min_observations);
}

TEST_CASE("evicting the only tenant never fires: no peer baseline") {
  SimConfig cfg = base_config(PolicyKind::kSpaceTime, 1, {256, 128, 1152}, 0.01);
  const SimConfig degraded = inject_degradation(cfg, 0, 4.0, 0.0);
  const Trace trace = run(degraded);
  CHECK(trace.evicted_tenants.empty());
  CHECK(!trace.completions.empty());
}

TEST_CASE("cache warms once per signature and stays hot") {
  SimConfig cfg = base_config(PolicyKind::kSpaceTime, 8, {256, 128, 1152}, 0.02);
  const Trace trace = run(cfg);
  CHECK(trace.cache_misses == 1);  // one distinct signature in steady state
  CHECK(trace.cache_hits > 100);
}

TEST_CASE("trace invariants: ordered events, unique completion ids") {
  for (PolicyKind policy : {PolicyKind::kExclusive, PolicyKind::kTimeMux,
                            PolicyKind::kSpaceImplicit, PolicyKind::kSpaceTime}) {
    const int tenants = policy == PolicyKind::kExclusive ? 1 : 5;
    SimConfig cfg = base_config(policy, tenants, {256, 128, 1152}, 0.02);
    const Trace trace = run(cfg);
    for (std::size_t i = 0; i + 1 < trace.events.size(); ++i) {
      CHECK(trace.events[i].start <= trace.events[i + 1].start);
    }
    std::set<std::uint64_t> ids;
    for (const RequestLifecycle& c : trace.completions) {
      CHECK(ids.insert(c.request_id).second);
    }
    for (const DispatchEvent& e : trace.events) {
      CHECK(e.end > e.start);
      CHECK(e.launches >= 1);
      CHECK(!e.member_requests.empty());
      CHECK(e.occupancy > 0.0);
      CHECK(e.occupancy <= 1.0);
    }
  }
}

TEST_CASE("cache hit rate is non-decreasing over rounds") {
  SimConfig cfg = base_config(PolicyKind::kSpaceTime, 6, {256, 128, 1152}, 0.02);
  const Trace trace = run(cfg);
  // one signature total: every round after the first is a hit
  CHECK(trace.cache_misses == 1);
  CHECK(trace.cache_hits ==
        static_cast<std::int64_t>(trace.events.size()) - 1);
}

TEST_CASE("homogeneity and memory feasibility are enforced") {
  SimConfig cfg = base_config(PolicyKind::kSpaceImplicit, 2, {8, 8, 8}, 0.01);
  cfg.tenants[1].layers = {{16, 16, 16}};
  CHECK_THROWS_AS(run(cfg), ConfigError);

  SimConfig oom = base_config(PolicyKind::kSpaceImplicit, 18, {256, 128, 1152}, 0.01);
  for (Tenant& t : oom.tenants) t.weights_bytes = 102.4e6;
  oom.device.process_context_bytes = 800e6;
  oom.device.mem_capacity = 16e9;
  CHECK_THROWS_AS(run(oom), InfeasibleError);
}

TEST_CASE("microbench mode drops the context-switch charge") {
  SimConfig fw = base_config(PolicyKind::kTimeMux, 4, {256, 128, 1152}, 0.1);
  SimConfig mb = fw;
  mb.mode = SimMode::kMicrobench;
  const RunMetrics fw_m = aggregate(run(fw), fw);
  const RunMetrics mb_m = aggregate(run(mb), mb);
  CHECK(mb_m.mean_latency < fw_m.mean_latency);
  const KernelCost kc = dispatch_duration({256, 128, 1152}, fw.device, 160, 1);
  CHECK(mb_m.mean_latency ==
        doctest::Approx(to_seconds(4 * to_ns(kc.duration))).epsilon(1e-12));
}
