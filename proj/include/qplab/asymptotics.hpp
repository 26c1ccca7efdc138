// Parameter sweeps toward the collision, power-law fits, and numerical
// verification of the structural assumptions behind the sqrt-Holder
// asymptotics: exponential growth of the difference field along orbits
// away from the dip, linear decay of the minimum, quadratic dip shape,
// interval length vs sqrt(d_min), and the outside floor.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qplab/bundles.hpp"
#include "qplab/options.hpp"
#include "qplab/spectral_edge.hpp"

namespace qplab {

struct SweepRecord {
  double t = 0.0;
  double gap = 0.0;  // t0 - t
  double d_min = std::numeric_limits<double>::quiet_NaN();
  double theta_c = std::numeric_limits<double>::quiet_NaN();
  double L = std::numeric_limits<double>::quiet_NaN();
  double dLdt_lemma = std::numeric_limits<double>::quiet_NaN();
  double dLdt_fd = std::numeric_limits<double>::quiet_NaN();
  double err_L = std::numeric_limits<double>::quiet_NaN();
  double err_dLdt = std::numeric_limits<double>::quiet_NaN();
  bool multiple_minima = false;
  std::string status;  // "ok" or the failure reason

  bool ok() const { return status == "ok"; }
};

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  double gap_min = 0.0;
  double gap_max = 0.0;
  int n_points = 0;
};

// One clause of the assumption set failing at a concrete point.  These are
// data, not exceptions: a sweep near the edge legitimately produces fields
// outside the theorem's scenario and the report must say where and why.
struct ViolationNote {
  std::string clause;  // e.g. "A2a", "A2b", "A2c", "A2e", "S_bound"
  double theta = 0.0;
  long long k = 0;
  std::string detail;
};

struct StoppingSummary {
  long long plus_min = 0, plus_max = 0;
  long long minus_min = 0, minus_max = 0;
  double plus_mean = 0.0, minus_mean = 0.0;
  int n_samples = 0;
  bool capped = false;  // some walk hit the step cap before exiting
};

struct AssumptionReport {
  double d_min = 0.0;
  double theta_c = 0.0;
  double growth_rate_a = 0.0;     // per-step orbit growth rate of d
  double quad_constant_C1 = 0.0;  // best-fit dip curvature
  double quad_fit_residual = 0.0;  // worst relative deviation over I
  double interval_length = 0.0;    // |I|
  double interval_length_ratio = 0.0;  // |I| / (2 sqrt(d_min)), empirical C2
  bool outside_floor_ok = false;
  double outside_floor_fraction = 0.0;  // passing fraction of complement
  double S_plus_max = 0.0;
  double S_minus_max = 0.0;
  bool multiple_minima = false;  // tied or near-tied competitor basin
  StoppingSummary stopping;
  std::vector<ViolationNote> violations;
};

// Sampled distance field: strictly increasing theta in [0,1) with the
// field value at each node.  Queries interpolate linearly with wrap.
// The orbit-growth, stopping-time, and floor checks all run against this
// sampled view; the report is explicit about being a sampled verification.
struct DistanceSamples {
  std::vector<double> theta;
  std::vector<double> d;
  double omega = 0.0;

  double at(double th) const;  // linear interpolation, wrap-aware
};

// Geometric ladder gap_k = g0 * 2^{-k}, clipped to stay >= g_floor.
std::vector<double> default_gaps(double g0 = 1e-2, double g_floor = 1e-6);

// One record per gap at t = t0 - gap.  Failed points carry the failure
// reason in `status` and NaN quantities; they are never dropped.
std::vector<SweepRecord> run_sweep(const FamilyBuilder& builder, double t0,
                                   const std::vector<double>& gaps,
                                   const EngineOptions& opts);

// Least-squares line on (log x, log y).  exponent = slope,
// prefactor = exp(intercept).
PowerLawFit fit_power_law(const std::vector<double>& xs,
                          const std::vector<double>& ys);

// Assumption verification on an explicit sampled field (synthetic fields
// plug in here) and on a computed bundle context.
AssumptionReport verify_assumptions(const DistanceSamples& samples,
                                    double theta_c, double d_min,
                                    bool multiple_minima, double second_theta,
                                    const EngineOptions& opts);
AssumptionReport verify_assumptions(const ParameterFamily& fam,
                                    const BundlePair& bundles,
                                    const DifferenceField& field,
                                    const EngineOptions& opts);

struct TheoremBound {
  double K1 = 0.0;  // min over records of |dL/dt| sqrt(gap)
  double K2 = 0.0;  // max
  double ratio = 0.0;
  int n_used = 0;
};

TheoremBound theorem_bound_check(const std::vector<SweepRecord>& records);

// Fits |L - L_at_edge| against gap; the exponent is the Holder exponent.
PowerLawFit holder_check(const std::vector<SweepRecord>& records,
                         double L_at_edge);

struct EdgeExtrapolation {
  double L0 = 0.0;  // extrapolated L(t0)
  double b = 0.0;   // sqrt-law prefactor
  double rms = 0.0;
  int n_used = 0;
};

// L = L0 + b sqrt(gap) least squares over the smallest `use` gaps.
EdgeExtrapolation extrapolate_L_edge(const std::vector<SweepRecord>& records,
                                     int use = 5);

}  // namespace qplab
