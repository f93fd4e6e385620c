#pragma once

#include <cmath>
#include <cstdint>

namespace gpumux {

// Virtual time is an integer count of nanoseconds so that event ordering is
// exact and identical across platforms. Cost-model math is done in double
// seconds and quantized once per launch/switch at the dispatch boundary.
using TimeNs = std::int64_t;

inline TimeNs to_ns(double seconds) {
  return static_cast<TimeNs>(std::llround(seconds * 1e9));
}

inline double to_seconds(TimeNs t) {
  return static_cast<double>(t) * 1e-9;
}

}  // namespace gpumux
