// Invariant slope fields of a uniformly hyperbolic cocycle.
//
// The unstable slope at theta is the limit of pushing a seed direction
// forward along the orbit ending at theta; the stable slope is the
// backward analogue (adjugate iteration).  Convergence is geometric with
// ratio ~ (r_s/r_u)^2 per step, so each doubling of the iterate count
// squares the error.  We accept a point once the Cauchy residual
// |r(2n) - r(n)| drops below tol.
#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qplab/cocycle.hpp"
#include "qplab/kernels.hpp"
#include "qplab/options.hpp"

namespace qplab {

// Slope through the Moebius action.  A vertical direction (v = 0) is the
// point at infinity on the projective line; it never appears as a limit
// for cocycles in the cone but can appear transiently.
struct Slope {
  double r = 0.0;
  bool infinite = false;

  static Slope finite(double v) { return {v, false}; }
  static Slope at_infinity() { return {0.0, true}; }
};

Slope mobius_apply(const Mat2& m, Slope s);

struct DirectionResult {
  Slope slope;
  double residual;  // |r(n) - r(2n)|
  long long n;
};

DirectionResult unstable_direction(const ParameterFamily& fam, double theta,
                                   long long n, double seed);
DirectionResult stable_direction(const ParameterFamily& fam, double theta,
                                 long long n, double seed);

struct BundlePair {
  std::vector<double> grid;  // theta_i = i / N
  std::vector<double> r_u;
  std::vector<double> r_s;
  std::vector<long long> n_u;  // accepted iterate count per point
  std::vector<long long> n_s;
  double residual_u = 0.0;  // sup of |mobius(A(th), r_u(th)) - r_u(th+w)|
  double residual_s = 0.0;
  double cone_constant = 1.0;  // min C with all slopes in [1/C, C]
  double decay_rate = 0.0;     // per-step Cauchy decay estimate, < 1
  long long iterations_used = 0;
};

struct BundleStatus {
  bool converged = false;
  bool improving = false;  // residuals still shrinking when the cap hit
  std::string failure;     // empty when converged
  int unconverged_points = 0;
  double worst_residual = 0.0;
  double partial_d_min = 0.0;  // min r_u - r_s over the final iterates
  BundlePair pair;             // partial data, valid even on failure
};

// Non-throwing core.  `failure` is one of: "", "non_convergence",
// "cone_violation", "ordering_violation", "invariance_residual".
BundleStatus try_compute_bundles(const ParameterFamily& fam, int grid_n,
                                 const EngineOptions& opts);

// try_compute_bundles with the iteration cap raised 4x then 16x while the
// ladder is still contracting.  A raise past 4x must have bought a tenfold
// residual drop; a contracting run whose partial field is already below
// d_floor is a resolved collision and is returned as-is.
BundleStatus compute_bundles_adaptive(const ParameterFamily& fam, int grid_n,
                                      const EngineOptions& opts);

// Throwing wrapper: NonConvergence / ConeViolation on failure.
BundlePair compute_bundles(const ParameterFamily& fam, int grid_n,
                           const EngineOptions& opts);

struct DifferenceField {
  std::vector<double> d;  // over the bundle grid
  double theta_c = 0.0;
  double d_min = 0.0;
  bool multiple_minima = false;
  double second_min_ratio = 0.0;  // second basin min / global min; 0 if none
  double second_theta =
      std::numeric_limits<double>::quiet_NaN();  // refined competitor center
  // Local mesh around theta_c at the sqrt(d_min) quadratic scale, with zoom
  // levels down to spacing min(1e-6, sqrt(d_min)/50); reused by the
  // integrators so the dip is resolved once.
  std::vector<double> mesh_theta;
  std::vector<double> mesh_ru;
  std::vector<double> mesh_rs;
  double mesh_halfwidth = 0.0;
};

// Continuous evaluator: slopes at arbitrary theta by adaptive doubling.
// Deterministic: the iterate ladder depends only on construction inputs
// and theta, never on call order.  Results are cached per theta.
class PairEvaluator {
 public:
  struct Pair {
    double r_u;
    double r_s;
    double d;
    long long n;
    double residual;  // Cauchy residual at acceptance
  };

  PairEvaluator(const ParameterFamily& fam, const EngineOptions& opts,
                long long n_hint);

  Pair eval(double theta) const;
  // Batch form, one shared iterate ladder for the whole batch.
  std::vector<Pair> eval_batch(const std::vector<double>& thetas) const;
  // Inject an externally computed pair (e.g. from a converged bundle grid)
  // so quadrature over known points skips re-iteration.
  void prime(double theta, double r_u, double r_s, long long n,
             double residual) const;

  double omega() const { return omega_; }

 private:
  Pair eval_uncached(double theta) const;

  kernels::FamilyData data_;
  EngineOptions opts_;
  double omega_;
  long long n_start_;
  mutable std::vector<std::pair<double, Pair>> cache_;  // sorted by theta bits
};

DifferenceField difference_field(const ParameterFamily& fam,
                                 const BundlePair& bundles,
                                 const EngineOptions& opts);

// D_{i,j}(theta) = d(theta + j w) / d(theta + i w), i <= j.
double growth_ratio(const PairEvaluator& ev, double theta, long long i,
                    long long j);

}  // namespace qplab
