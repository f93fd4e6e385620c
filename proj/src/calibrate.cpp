#include "gpumux/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gpumux/csv.hpp"
#include "gpumux/recipes.hpp"

namespace gpumux {

namespace {

struct ParamAccess {
  const char* name;
  double DeviceSpec::* field;
  double lo;
  double hi;
};

const ParamAccess kParams[] = {
    {"space_sched_penalty", &DeviceSpec::space_sched_penalty, 1.0, 6.0},
    {"launch_serialization", &DeviceSpec::launch_serialization, 0.0, 1.0},
    {"context_switch_overhead", &DeviceSpec::context_switch_overhead, 1e-5, 3e-3},
    {"launch_overhead", &DeviceSpec::launch_overhead, 2e-7, 1e-5},
    {"planning_overhead", &DeviceSpec::planning_overhead, 0.0, 5e-4},
};

const ParamAccess& find_param(const std::string& name) {
  for (const ParamAccess& p : kParams) {
    if (name == p.name) return p;
  }
  throw std::runtime_error("calibrate: unsupported free parameter '" + name + "'");
}

}  // namespace

CalibrationSpec calibration_spec_from_json(const nlohmann::json& doc) {
  CalibrationSpec spec;
  if (!doc.contains("targets") || !doc.at("targets").is_array()) {
    throw std::runtime_error("calibrate: targets file needs a 'targets' array");
  }
  for (const auto& t : doc.at("targets")) {
    CalibrationTarget target;
    target.metric = t.at("metric").get<std::string>();
    target.target = t.at("target").get<double>();
    target.tolerance = t.at("tolerance").get<double>();
    if (target.tolerance <= 0) {
      throw std::runtime_error("calibrate: tolerance must be > 0 for " + target.metric);
    }
    spec.targets.push_back(std::move(target));
  }
  if (doc.contains("free_params")) {
    for (const auto& p : doc.at("free_params")) {
      spec.free_params.push_back(p.get<std::string>());
    }
  }
  spec.budget = doc.value("budget", spec.budget);
  spec.exact = doc.value("exact", spec.exact);
  return spec;
}

CalibrationResult calibrate(const DeviceSpec& initial, const CalibrationSpec& spec) {
  if (spec.targets.empty()) throw std::runtime_error("calibrate: no targets");
  for (const std::string& p : spec.free_params) find_param(p);  // validate names

  CalibrationResult result;
  result.fitted = initial;

  std::map<std::string, std::pair<double, std::vector<double>>> cache;
  auto objective = [&](const DeviceSpec& d) {
    std::string key;
    for (const std::string& name : spec.free_params) {
      key += format_double(d.*(find_param(name).field)) + "|";
    }
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<double> achieved;
    double worst = 0;
    for (const CalibrationTarget& t : spec.targets) {
      const double value = evaluate_metric(t.metric, d, spec.exact);
      achieved.push_back(value);
      const double err = std::abs(value / t.target - 1.0) / t.tolerance;
      worst = std::max(worst, err);
    }
    ++result.evaluations;
    auto entry = std::make_pair(worst, std::move(achieved));
    cache.emplace(key, entry);
    return entry;
  };

  auto [best, best_achieved] = objective(result.fitted);
  if (best >= 1.0 && !spec.free_params.empty()) {
    const int sweeps = 3;
    for (int sweep = 0; sweep < sweeps && best >= 1.0; ++sweep) {
      for (const std::string& name : spec.free_params) {
        if (result.evaluations >= spec.budget) break;
        const ParamAccess& p = find_param(name);
        double lo = p.lo;
        double hi = p.hi;
        double best_x = result.fitted.*(p.field);
        // Coarse scan, then two rounds of interval narrowing around the best
        // probe. The objective is deterministic, so this is reproducible.
        for (int phase = 0; phase < 3; ++phase) {
          const int probes = phase == 0 ? 7 : 5;
          double phase_best = best;
          double phase_x = best_x;
          for (int i = 0; i < probes; ++i) {
            if (result.evaluations >= spec.budget) break;
            const double x =
                lo + (hi - lo) * static_cast<double>(i) / (probes - 1);
            DeviceSpec candidate = result.fitted;
            candidate.*(p.field) = x;
            auto [value, achieved] = objective(candidate);
            if (value < phase_best) {
              phase_best = value;
              phase_x = x;
              best_achieved = achieved;
            }
          }
          if (phase_best < best) {
            best = phase_best;
            best_x = phase_x;
          }
          const double width = (hi - lo) / 4;
          lo = std::max(p.lo, best_x - width);
          hi = std::min(p.hi, best_x + width);
        }
        result.fitted.*(p.field) = best_x;
        if (best < 1.0) break;
      }
    }
  }

  auto [final_obj, final_achieved] = objective(result.fitted);
  result.worst_normalized_error = final_obj;
  result.achieved = final_achieved;
  result.relative_errors.clear();
  for (std::size_t i = 0; i < spec.targets.size(); ++i) {
    result.relative_errors.push_back(
        final_achieved[i] / spec.targets[i].target - 1.0);
  }
  result.within_tolerance = final_obj < 1.0;
  return result;
}

}  // namespace gpumux
