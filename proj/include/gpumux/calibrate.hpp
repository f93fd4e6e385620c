#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gpumux/device.hpp"

namespace gpumux {

struct CalibrationTarget {
  std::string metric;
  double target = 0;
  double tolerance = 0;  // relative
};

struct CalibrationSpec {
  std::vector<CalibrationTarget> targets;
  std::vector<std::string> free_params;
  int budget = 60;  // objective evaluations
  bool exact = false;
};

CalibrationSpec calibration_spec_from_json(const nlohmann::json& doc);

struct CalibrationResult {
  DeviceSpec fitted;
  std::vector<double> achieved;         // per target
  std::vector<double> relative_errors;  // per target
  double worst_normalized_error = 0;    // max |err|/tolerance, <= 1 means fit
  int evaluations = 0;
  bool within_tolerance = false;
};

// Coordinate descent over the named free parameters, minimizing the largest
// tolerance-normalized relative error across targets. Deterministic for a
// given spec and starting profile.
CalibrationResult calibrate(const DeviceSpec& initial, const CalibrationSpec& spec);

}  // namespace gpumux
