#include "gpumux/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gpumux {

double geomean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("geomean of empty set");
  double log_sum = 0;
  for (double v : values) {
    if (v <= 0) throw std::invalid_argument("geomean requires positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  if (rank == 0) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

RunMetrics aggregate(const Trace& trace, const SimConfig& config,
                     std::optional<double> window_start,
                     std::optional<double> window_end) {
  const TimeNs ws = to_ns(window_start.value_or(config.warmup));
  const TimeNs we = to_ns(window_end.value_or(config.duration));
  if (we <= ws) throw std::runtime_error("aggregate: empty window");

  const std::set<int> evicted(trace.evicted_tenants.begin(),
                              trace.evicted_tenants.end());

  RunMetrics m;
  std::vector<double> latencies;
  std::map<int, std::pair<double, std::int64_t>> tenant_latency;  // sum, count
  std::int64_t window_flops = 0;
  std::int64_t slo_met = 0;
  for (const RequestLifecycle& r : trace.completions) {
    if (r.complete_time <= ws || r.complete_time > we) continue;
    window_flops += r.flops;
    const double latency = to_seconds(r.complete_time - r.enqueue_time);
    latencies.push_back(latency);
    if (r.slo_met) ++slo_met;
    if (!evicted.count(r.tenant_index)) {
      auto& [sum, count] = tenant_latency[r.tenant_index];
      sum += latency;
      ++count;
    }
  }
  if (latencies.empty()) throw std::runtime_error("no completions in window");

  const double window_seconds = to_seconds(we - ws);
  m.throughput_gflops = static_cast<double>(window_flops) / window_seconds / 1e9;
  m.utilization = static_cast<double>(window_flops) / window_seconds /
                  config.device.peak_flops;
  double sum = 0;
  for (double l : latencies) sum += l;
  m.mean_latency = sum / static_cast<double>(latencies.size());
  m.p50 = percentile_nearest_rank(latencies, 50.0);
  m.p99 = percentile_nearest_rank(latencies, 99.0);
  m.slo_attainment = static_cast<double>(slo_met) /
                     static_cast<double>(latencies.size());

  if (tenant_latency.size() >= 2) {
    double lo = std::numeric_limits<double>::max();
    double hi = 0;
    for (const auto& [tenant, acc] : tenant_latency) {
      const double mean = acc.first / static_cast<double>(acc.second);
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    m.fairness_gap = (hi - lo) / lo;
  }

  for (const DispatchEvent& e : trace.events) {
    if (e.start >= ws && e.start < we) m.launches += e.launches;
  }
  m.peak_memory = trace.peak_memory;
  m.cancelled = static_cast<std::int64_t>(trace.cancellations.size());
  return m;
}

SpeedupTable speedup_table(const std::map<SweepKey, RunMetrics>& runs,
                           const std::string& workload,
                           std::span<const std::int64_t> r_range) {
  static const PolicyKind kCompetitors[] = {
      PolicyKind::kTimeMux, PolicyKind::kSpaceImplicit,
      PolicyKind::kSpaceExplicit};

  SpeedupTable table;
  table.workload = workload;
  std::map<PolicyKind, int> wins;
  std::vector<double> ratios;
  for (std::int64_t r : r_range) {
    auto st = runs.find({workload, r, PolicyKind::kSpaceTime});
    if (st == runs.end()) {
      throw std::runtime_error("speedup_table: missing cell workload=" + workload +
                               " R=" + std::to_string(r) + " policy=space-time");
    }
    double best = 0;
    PolicyKind best_policy = PolicyKind::kTimeMux;
    for (PolicyKind p : kCompetitors) {
      auto it = runs.find({workload, r, p});
      if (it == runs.end()) {
        throw std::runtime_error(
            "speedup_table: missing cell workload=" + workload +
            " R=" + std::to_string(r) + " policy=" + std::string(policy_name(p)));
      }
      if (it->second.throughput_gflops > best) {
        best = it->second.throughput_gflops;
        best_policy = p;
      }
    }
    SpeedupRow row;
    row.replicas = r;
    row.speedup = st->second.throughput_gflops / best;
    row.next_best = best_policy;
    ratios.push_back(row.speedup);
    ++wins[best_policy];
    table.rows.push_back(row);
  }
  table.geomean_speedup = geomean(ratios);
  int top = -1;
  for (const auto& [policy, count] : wins) {
    if (count > top) {
      top = count;
      table.next_best = policy;
    }
  }
  return table;
}

std::map<PolicyKind, double> slowdown_vs_exclusive(
    const std::map<SweepKey, RunMetrics>& runs,
    const std::map<std::pair<std::string, std::int64_t>, RunMetrics>& baselines) {
  std::map<PolicyKind, std::vector<double>> ratios;
  for (const auto& [key, metrics] : runs) {
    if (key.policy == PolicyKind::kExclusive) continue;
    auto base = baselines.find({key.workload, key.replicas});
    if (base == baselines.end()) {
      throw std::runtime_error("slowdown: missing exclusive baseline for " +
                               key.workload + " R=" + std::to_string(key.replicas));
    }
    ratios[key.policy].push_back(metrics.mean_latency / base->second.mean_latency);
  }
  std::map<PolicyKind, double> out;
  for (const auto& [policy, values] : ratios) out[policy] = geomean(values);
  return out;
}

}  // namespace gpumux
