// Uniform-hyperbolicity certification and the spectral-edge bisection.
//
// A parameter t is certified UH when the slope ladder converges at every
// grid point, the fields stay in a positive cone with r_u > r_s, the
// invariance residual is below tolerance, and the bundle-integral exponent
// is positive.  The edge t0 is the infimum of the non-UH set, located by
// bisection on a bracket [t_uh, t_non_uh].
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qplab/bundles.hpp"
#include "qplab/cocycle.hpp"
#include "qplab/options.hpp"

namespace qplab {

struct UHCertificate {
  double t = 0.0;
  bool is_uh = false;
  double d_min = 0.0;  // on failure: estimate from the final iterates
  double theta_c = 0.0;
  double cone_constant = 0.0;
  double invariance_residual = 0.0;
  double lyapunov = 0.0;
  long long iterations = 0;
  // empty when is_uh; otherwise "non_convergence", "d_min_below_floor",
  // "cone_violation", "ordering_violation", "invariance_residual",
  // "nonpositive_exponent"
  std::string failure;
};

// Certifies fam at its current t.  When the ladder hits the cap while the
// residuals are still contracting fast enough to finish within two more
// doublings, the cap is raised (x4, then x16) before giving up.
UHCertificate certify_uh(const ParameterFamily& fam, const EngineOptions& opts);

struct EdgeEstimate {
  double t0 = 0.0;  // midpoint of the final bracket
  double t_uh = 0.0;
  double t_non_uh = 0.0;
  double width = 0.0;
  std::vector<UHCertificate> certificates;  // probe trail, in probe order
};

using FamilyBuilder = std::function<ParameterFamily(double)>;

// Bisects [t_lo, t_hi]; t_lo must certify UH and t_hi must not, else
// BadBracket.  Stops when the bracket is narrower than tol.
EdgeEstimate find_edge(const FamilyBuilder& builder, double t_lo, double t_hi,
                       double tol, const EngineOptions& opts);

}  // namespace qplab
