// Lyapunov exponent estimators and the parameter derivative dL/dt.
//
// Two independent L(t) routes:
//   - norm growth: Birkhoff average of the log stretch along long orbits,
//     averaged over 8 starting phases (spread -> error estimate);
//   - bundle integral: L = integral of log|lambda_1(theta)| d theta with
//     lambda_1 = a21 r_u + a22, the stretch of the unstable direction.
//
// dL/dt for the shear family A_t = A e^{tw}, w = [[w1,w2],[w3,-w1]]:
//   dL/dt = integral of (w1 (r_u+r_s) + w2 - w3 r_u r_s) / d  d theta,
// evaluated by adaptive Simpson over the bundle grid plus the dip mesh.
// The standard shear is w = (0,0,1).
#pragma once

#include "qplab/bundles.hpp"
#include "qplab/cocycle.hpp"
#include "qplab/options.hpp"

namespace qplab {

struct LyapunovEstimate {
  double value = 0.0;
  long long n = 0;  // orbit length or integration node count
  double error_estimate = 0.0;
  const char* method = "";
};

LyapunovEstimate le_norm_growth(const ParameterFamily& fam,
                                const EngineOptions& opts,
                                double theta0 = 0.0);

// field may be null; when given, its dip mesh joins the integration grid.
LyapunovEstimate le_from_bundle(const ParameterFamily& fam,
                                const BundlePair& bundles,
                                const DifferenceField* field,
                                const EngineOptions& opts);

// Generator w = [[w1, w2], [w3, -w1]] of the one-parameter twist.
struct ShearGenerator {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 1.0;
};

struct DerivativeEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
  long long cells = 0;  // accepted quadrature cells (lemma route)
  const char* method = "";
};

DerivativeEstimate derivative_lemma31(const ParameterFamily& fam,
                                      const BundlePair& bundles,
                                      const DifferenceField& field,
                                      const EngineOptions& opts,
                                      const ShearGenerator& w = {});

// Central difference (L(t+h) - L(t-h)) / 2h through the bundle-integral
// route.  Throws WindowViolation if t + h crosses the edge hint.
DerivativeEstimate derivative_fd(const ParameterFamily& fam, double h,
                                 const EngineOptions& opts);

double fd_default_step(const ParameterFamily& fam, const EngineOptions& opts);

}  // namespace qplab
