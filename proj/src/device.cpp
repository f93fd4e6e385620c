#include "gpumux/device.hpp"

#include <set>
#include <stdexcept>

namespace gpumux {

namespace {

const std::set<std::string> kDeviceKeys = {
    "peak_flops",        "mem_bandwidth",        "sm_count",
    "blocks_per_sm",     "launch_overhead",      "context_switch_overhead",
    "planning_overhead", "mem_capacity",         "process_context_bytes",
    "tile_m",            "tile_n",               "space_sched_penalty",
    "launch_serialization"};

}  // namespace

void DeviceSpec::validate() const {
  if (peak_flops <= 0) throw std::invalid_argument("device: peak_flops must be > 0");
  if (mem_bandwidth <= 0) throw std::invalid_argument("device: mem_bandwidth must be > 0");
  if (sm_count * blocks_per_sm < 1) {
    throw std::invalid_argument("device: sm_count*blocks_per_sm must be >= 1");
  }
  if (launch_overhead < 0 || context_switch_overhead < 0 || planning_overhead < 0) {
    throw std::invalid_argument("device: overheads must be >= 0");
  }
  if (tile_m < 1 || tile_n < 1) throw std::invalid_argument("device: tiles must be >= 1");
  if (space_sched_penalty < 1) {
    throw std::invalid_argument("device: space_sched_penalty must be >= 1");
  }
  if (launch_serialization < 0 || launch_serialization > 1) {
    throw std::invalid_argument("device: launch_serialization must be in [0,1]");
  }
  if (mem_capacity <= 0) throw std::invalid_argument("device: mem_capacity must be > 0");
  if (process_context_bytes < 0) {
    throw std::invalid_argument("device: process_context_bytes must be >= 0");
  }
}

DeviceSpec v100_profile() {
  DeviceSpec d;
  d.peak_flops = 14e12;
  d.mem_bandwidth = 900e9;
  d.sm_count = 80;
  d.blocks_per_sm = 2;
  // Fitted by `gpumux calibrate targets/v100_targets.json`; keep in sync with
  // profiles/v100.json.
  d.launch_overhead = 2.2e-06;
  d.context_switch_overhead = 0.000196875;
  d.planning_overhead = 50e-6;
  d.mem_capacity = 16e9;
  d.process_context_bytes = 800e6;
  d.tile_m = 64;
  d.tile_n = 64;
  d.space_sched_penalty = 1.55;
  d.launch_serialization = 1.0;
  return d;
}

DeviceSpec device_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("device profile must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kDeviceKeys.count(key)) {
      throw std::invalid_argument("device profile: unknown key '" + key + "'");
    }
  }
  DeviceSpec d;
  auto num = [&doc](const char* key, double fallback) {
    return doc.contains(key) ? doc.at(key).get<double>() : fallback;
  };
  auto integer = [&doc](const char* key, std::int64_t fallback) {
    return doc.contains(key) ? doc.at(key).get<std::int64_t>() : fallback;
  };
  d.peak_flops = num("peak_flops", d.peak_flops);
  d.mem_bandwidth = num("mem_bandwidth", d.mem_bandwidth);
  d.sm_count = integer("sm_count", d.sm_count);
  d.blocks_per_sm = integer("blocks_per_sm", d.blocks_per_sm);
  d.launch_overhead = num("launch_overhead", d.launch_overhead);
  d.context_switch_overhead = num("context_switch_overhead", d.context_switch_overhead);
  d.planning_overhead = num("planning_overhead", d.planning_overhead);
  d.mem_capacity = num("mem_capacity", d.mem_capacity);
  d.process_context_bytes = num("process_context_bytes", d.process_context_bytes);
  d.tile_m = integer("tile_m", d.tile_m);
  d.tile_n = integer("tile_n", d.tile_n);
  d.space_sched_penalty = num("space_sched_penalty", d.space_sched_penalty);
  d.launch_serialization = num("launch_serialization", d.launch_serialization);
  d.validate();
  return d;
}

nlohmann::json device_to_json(const DeviceSpec& d) {
  return nlohmann::json{
      {"peak_flops", d.peak_flops},
      {"mem_bandwidth", d.mem_bandwidth},
      {"sm_count", d.sm_count},
      {"blocks_per_sm", d.blocks_per_sm},
      {"launch_overhead", d.launch_overhead},
      {"context_switch_overhead", d.context_switch_overhead},
      {"planning_overhead", d.planning_overhead},
      {"mem_capacity", d.mem_capacity},
      {"process_context_bytes", d.process_context_bytes},
      {"tile_m", d.tile_m},
      {"tile_n", d.tile_n},
      {"space_sched_penalty", d.space_sched_penalty},
      {"launch_serialization", d.launch_serialization},
  };
}

}  // namespace gpumux
