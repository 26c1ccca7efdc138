// Shared numerical knobs. Defaults match the documented engine contract;
// the CLI config maps onto this struct.
#pragma once

#include <cmath>
#include <cstdint>

namespace qplab {

struct EngineOptions {
  int grid_n = 4096;
  double bundle_tol = 1e-10;        // Cauchy tolerance on slopes
  long long iteration_cap = 200000;  // per point, per direction
  double residual_tol = 1e-8;       // invariance residual acceptance
  double d_floor = 1e-12;
  double quad_tol = 1e-9;           // derivative quadrature, absolute
  double bisect_tol = 1e-8;
  long long le_steps = 1000000;
  long long burn_in = 1000;
  double seed_slope = 1.0;
  double fd_step = 0.0;             // 0 = auto: max(1e-6, gap/100)
  double t0_hint = std::nan("");    // edge estimate for window checks
  int jobs = 0;                     // 0 = hardware concurrency
  long long n_first = 64;           // first rung of the doubling ladder
};

}  // namespace qplab
