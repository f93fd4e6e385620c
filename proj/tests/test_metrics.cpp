#include <doctest.h>

#include <algorithm>
#include <random>

#include "gpumux/metrics.hpp"

using namespace gpumux;

namespace {

SimConfig metric_config(int tenants) {
  SimConfig cfg;
  Tenant t;
  t.layers = {{256, 128, 1152}};
  t.slo_latency = 0.05;
  cfg.tenants.assign(tenants, t);
  cfg.duration = 1.0;
  cfg.warmup = 0.0;
  return cfg;
}

RequestLifecycle completion(std::uint64_t id, int tenant, double enqueue,
                            double complete, std::int64_t flops) {
  RequestLifecycle r;
  r.request_id = id;
  r.tenant_index = tenant;
  r.enqueue_time = to_ns(enqueue);
  r.dispatch_time = to_ns(enqueue);
  r.complete_time = to_ns(complete);
  r.flops = flops;
  r.slo_met = true;
  return r;
}

}  // namespace

TEST_CASE("geomean basics") {
  const double two_eight[] = {2.0, 8.0};
  CHECK(geomean(two_eight) == doctest::Approx(4.0));
  const double ones[] = {1.0, 1.0, 1.0};
  CHECK(geomean(ones) == doctest::Approx(1.0));
  CHECK_THROWS_AS(geomean({}), std::invalid_argument);
}

TEST_CASE("geomean is ratio-scale correct") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> xs;
    for (int j = 0; j < 10; ++j) {
      xs.push_back(0.1 + static_cast<double>(rng() % 1000) / 100.0);
    }
    const double scale = 0.5 + static_cast<double>(rng() % 50) / 10.0;
    std::vector<double> scaled = xs;
    for (double& x : scaled) x *= scale;
    CHECK(geomean(scaled) == doctest::Approx(scale * geomean(xs)).epsilon(1e-12));
  }
}

TEST_CASE("nearest-rank percentiles") {
  std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(percentile_nearest_rank(v, 50) == 3);
  CHECK(percentile_nearest_rank(v, 99) == 5);
  CHECK(percentile_nearest_rank(v, 1) == 1);
  CHECK(percentile_nearest_rank({7.0}, 99) == 7.0);
}

TEST_CASE("aggregate: single-kernel window matches hand arithmetic") {
  SimConfig cfg = metric_config(1);
  cfg.duration = 1.1285353142857142e-4;  // compute + launch of the conv kernel
  Trace trace;
  trace.completions.push_back(completion(1, 0, 0, cfg.duration, 75497472));
  const RunMetrics m = aggregate(trace, cfg);
  CHECK(m.throughput_gflops == doctest::Approx(669.0).epsilon(0.01));
  CHECK(m.utilization == doctest::Approx(0.0478).epsilon(0.01));
  CHECK(m.slo_attainment == 1.0);
}

TEST_CASE("fairness gap over per-tenant means") {
  SimConfig cfg = metric_config(2);
  Trace trace;
  SUBCASE("identical latencies mean zero gap") {
    trace.completions.push_back(completion(1, 0, 0, 8e-3, 100));
    trace.completions.push_back(completion(2, 1, 0, 8e-3, 100));
    CHECK(aggregate(trace, cfg).fairness_gap == doctest::Approx(0.0));
  }
  SUBCASE("8ms and 10ms means gap 0.25") {
    trace.completions.push_back(completion(1, 0, 0, 8e-3, 100));
    trace.completions.push_back(completion(2, 1, 0, 10e-3, 100));
    CHECK(aggregate(trace, cfg).fairness_gap == doctest::Approx(0.25));
  }
  SUBCASE("evicted tenants drop out of the gap") {
    trace.completions.push_back(completion(1, 0, 0, 8e-3, 100));
    trace.completions.push_back(completion(2, 1, 0, 80e-3, 100));
    trace.evicted_tenants.push_back(1);
    CHECK(aggregate(trace, cfg).fairness_gap == doctest::Approx(0.0));
  }
}

TEST_CASE("fairness gap is invariant under tenant relabeling") {
  SimConfig cfg = metric_config(3);
  Trace trace;
  trace.completions.push_back(completion(1, 0, 0, 8e-3, 1));
  trace.completions.push_back(completion(2, 1, 0, 9e-3, 1));
  trace.completions.push_back(completion(3, 2, 0, 10e-3, 1));
  const double gap = aggregate(trace, cfg).fairness_gap;
  Trace relabeled = trace;
  relabeled.completions[0].tenant_index = 2;
  relabeled.completions[2].tenant_index = 0;
  CHECK(aggregate(relabeled, cfg).fairness_gap == doctest::Approx(gap));
}

TEST_CASE("aggregate is order-insensitive") {
  SimConfig cfg = metric_config(2);
  Trace trace;
  for (int i = 0; i < 20; ++i) {
    trace.completions.push_back(
        completion(i + 1, i % 2, i * 1e-3, i * 1e-3 + 5e-3, 1000));
  }
  Trace shuffled = trace;
  std::reverse(shuffled.completions.begin(), shuffled.completions.end());
  const RunMetrics a = aggregate(trace, cfg);
  const RunMetrics b = aggregate(shuffled, cfg);
  CHECK(a.mean_latency == b.mean_latency);
  CHECK(a.p50 == b.p50);
  CHECK(a.p99 == b.p99);
  CHECK(a.throughput_gflops == b.throughput_gflops);
}

TEST_CASE("empty window is an error") {
  SimConfig cfg = metric_config(1);
  Trace trace;
  trace.completions.push_back(completion(1, 0, 0, 2.0, 1));  // outside window
  CHECK_THROWS_WITH_AS(aggregate(trace, cfg), "no completions in window",
                       std::runtime_error);
}

TEST_CASE("throughput splits additively across equal half-windows") {
  SimConfig cfg = metric_config(1);
  Trace trace;
  trace.completions.push_back(completion(1, 0, 0.0, 0.2, 600));
  trace.completions.push_back(completion(2, 0, 0.2, 0.7, 400));
  const RunMetrics whole = aggregate(trace, cfg, 0.0, 1.0);
  const RunMetrics first = aggregate(trace, cfg, 0.0, 0.5);
  const RunMetrics second = aggregate(trace, cfg, 0.5, 1.0);
  CHECK(whole.throughput_gflops ==
        doctest::Approx(0.5 * (first.throughput_gflops + second.throughput_gflops)));
}

namespace {

std::map<SweepKey, RunMetrics> uniform_runs(const std::string& workload,
                                            std::span<const std::int64_t> rs,
                                            double st, double tm, double si,
                                            double se) {
  std::map<SweepKey, RunMetrics> runs;
  for (std::int64_t r : rs) {
    RunMetrics m;
    m.throughput_gflops = st;
    runs[{workload, r, PolicyKind::kSpaceTime}] = m;
    m.throughput_gflops = tm;
    runs[{workload, r, PolicyKind::kTimeMux}] = m;
    m.throughput_gflops = si;
    runs[{workload, r, PolicyKind::kSpaceImplicit}] = m;
    m.throughput_gflops = se;
    runs[{workload, r, PolicyKind::kSpaceExplicit}] = m;
  }
  return runs;
}

}  // namespace

TEST_CASE("speedup table: equal throughput means ratio 1 everywhere") {
  const std::int64_t rs[] = {2, 10, 20};
  const auto runs = uniform_runs("conv", rs, 5.0, 5.0, 5.0, 5.0);
  const SpeedupTable table = speedup_table(runs, "conv", rs);
  for (const SpeedupRow& row : table.rows) {
    CHECK(row.speedup == doctest::Approx(1.0));
  }
  CHECK(table.geomean_speedup == doctest::Approx(1.0));
}

TEST_CASE("speedup table: next best is the most frequent max competitor") {
  const std::int64_t rs[] = {2, 10, 20};
  const auto runs = uniform_runs("conv", rs, 9.0, 1.0, 3.0, 2.0);
  const SpeedupTable table = speedup_table(runs, "conv", rs);
  CHECK(table.next_best == PolicyKind::kSpaceImplicit);
  CHECK(table.rows[0].speedup == doctest::Approx(3.0));
}

TEST_CASE("speedup table: a missing cell is reported by name") {
  const std::int64_t rs[] = {2, 10};
  auto runs = uniform_runs("conv", rs, 9.0, 1.0, 3.0, 2.0);
  runs.erase({"conv", 10, PolicyKind::kTimeMux});
  CHECK_THROWS_WITH_AS(speedup_table(runs, "conv", rs),
                       "speedup_table: missing cell workload=conv R=10 "
                       "policy=time-mux",
                       std::runtime_error);
}

TEST_CASE("slowdown geomean against exclusive baselines") {
  std::map<SweepKey, RunMetrics> runs;
  std::map<std::pair<std::string, std::int64_t>, RunMetrics> baselines;
  RunMetrics base;
  base.mean_latency = 1e-3;
  baselines[{"m", 2}] = base;
  baselines[{"m", 4}] = base;
  RunMetrics slow;
  slow.mean_latency = 2e-3;
  runs[{"m", 2, PolicyKind::kTimeMux}] = slow;
  slow.mean_latency = 8e-3;
  runs[{"m", 4, PolicyKind::kTimeMux}] = slow;
  slow.mean_latency = 1e-3;
  runs[{"m", 2, PolicyKind::kSpaceExplicit}] = slow;
  runs[{"m", 4, PolicyKind::kSpaceExplicit}] = slow;

  const auto slowdowns = slowdown_vs_exclusive(runs, baselines);
  CHECK(slowdowns.at(PolicyKind::kTimeMux) == doctest::Approx(4.0));
  CHECK(slowdowns.at(PolicyKind::kSpaceExplicit) == doctest::Approx(1.0));

  baselines.erase({"m", 4});
  CHECK_THROWS_AS(slowdown_vs_exclusive(runs, baselines), std::runtime_error);
}
