// Torus points live in [0,1); every addition is reduced immediately so
// 1e6-step orbits do not drift.
#pragma once

#include <cmath>

namespace qplab {

inline double reduce_mod1(double x) {
  double r = x - std::floor(x);
  // floor(x) == x for integral x gives r == 0; negative tiny x gives r < 1.
  return r < 1.0 ? r : 0.0;
}

// theta + k*omega reduced to [0,1). Single rounding in the multiply; callers
// that need step-by-step identical walks iterate reduce_mod1 themselves.
inline double orbit_point(double theta, long long k, double omega) {
  return reduce_mod1(theta + static_cast<double>(k) * omega);
}

}  // namespace qplab
