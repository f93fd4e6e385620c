#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace gpumux {

// Analytic GPU description. peak_flops and mem_capacity come from published
// V100 figures; the remaining values are calibration parameters fitted by the
// `calibrate` command (see profiles/v100.json for the shipped fit).
struct DeviceSpec {
  double peak_flops = 14e12;               // FLOP/s, single precision
  double mem_bandwidth = 900e9;            // bytes/s
  std::int64_t sm_count = 80;
  std::int64_t blocks_per_sm = 2;          // concurrent block slots per SM
  double launch_overhead = 5e-6;           // seconds per kernel launch
  double context_switch_overhead = 1e-3;   // seconds per process context swap
  double planning_overhead = 50e-6;        // seconds per super-kernel plan miss
  double mem_capacity = 16e9;              // bytes
  double process_context_bytes = 800e6;    // fixed per-process runtime footprint
  std::int64_t tile_m = 64;                // thread-block tile
  std::int64_t tile_n = 64;
  double space_sched_penalty = 1.5;        // >= 1, device-arbitrated stream penalty
  double launch_serialization = 0.5;       // [0,1] share of launch overhead that serializes

  std::int64_t slot_total() const { return sm_count * blocks_per_sm; }
  void validate() const;
};

// The default profile shipped with the repo; must stay equal to
// profiles/v100.json (a unit test checks this).
DeviceSpec v100_profile();

// Strict JSON loading: keys must match the field names exactly and unknown
// keys are an error so typos in calibration files surface immediately.
DeviceSpec device_from_json(const nlohmann::json& doc);
nlohmann::json device_to_json(const DeviceSpec& d);

}  // namespace gpumux
