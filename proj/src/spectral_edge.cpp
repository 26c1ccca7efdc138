#include "qplab/spectral_edge.hpp"

#include <cmath>
#include <sstream>

#include "qplab/errors.hpp"
#include "qplab/lyapunov.hpp"

namespace qplab {

namespace {

UHCertificate certify_status(const ParameterFamily& fam,
                             const EngineOptions& opts,
                             const BundleStatus& st) {
  UHCertificate cert;
  cert.t = fam.t;
  cert.iterations = st.pair.iterations_used;
  cert.invariance_residual = std::fmax(st.pair.residual_u, st.pair.residual_s);
  cert.cone_constant = st.pair.cone_constant;
  cert.d_min = st.partial_d_min;

  if (!st.converged) {
    // Sharper diagnoses for observed collisions.  Converged-but-coinciding
    // fields (|d| within the floor) mean the ladders met exactly; a cap hit
    // with contracting residuals and a sub-floor partial field means the
    // collision was resolved numerically.  Oscillating ladders (elliptic)
    // keep the plain cap-hit label: their partial field is meaningless.
    const bool coincided = std::fabs(st.partial_d_min) <= opts.d_floor;
    if (st.failure == "ordering_violation" && coincided)
      cert.failure = "d_min_below_floor";
    else if (st.failure == "non_convergence" && st.improving &&
             st.partial_d_min >= 0.0 && st.partial_d_min < opts.d_floor)
      cert.failure = "d_min_below_floor";
    else
      cert.failure = st.failure;
    return cert;
  }

  try {
    const DifferenceField df = difference_field(fam, st.pair, opts);
    cert.d_min = df.d_min;
    cert.theta_c = df.theta_c;
    if (!(df.d_min > opts.d_floor)) {
      cert.failure = "d_min_below_floor";
      return cert;
    }
    const LyapunovEstimate le = le_from_bundle(fam, st.pair, &df, opts);
    cert.lyapunov = le.value;
    if (!(le.value > 0.0)) {
      cert.failure = "nonpositive_exponent";
      return cert;
    }
  } catch (const NonConvergence&) {
    cert.failure = "non_convergence";
    return cert;
  } catch (const ConeViolation&) {
    cert.failure = "cone_violation";
    return cert;
  }

  cert.is_uh = true;
  return cert;
}

}  // namespace

UHCertificate certify_uh(const ParameterFamily& fam,
                         const EngineOptions& opts) {
  return certify_status(fam, opts,
                        compute_bundles_adaptive(fam, opts.grid_n, opts));
}

EdgeEstimate find_edge(const FamilyBuilder& builder, double t_lo, double t_hi,
                       double tol, const EngineOptions& opts) {
  if (!(t_lo < t_hi)) throw BadBracket("edge bracket requires t_lo < t_hi");
  if (!(tol > 0.0)) throw ConfigError("edge tolerance must be positive");

  EdgeEstimate est;
  const UHCertificate lo = certify_uh(builder(t_lo), opts);
  est.certificates.push_back(lo);
  if (!lo.is_uh) {
    std::ostringstream msg;
    msg << "bracket start t=" << t_lo
        << " is not uniformly hyperbolic (" << lo.failure << ")";
    throw BadBracket(msg.str());
  }
  const UHCertificate hi = certify_uh(builder(t_hi), opts);
  est.certificates.push_back(hi);
  if (hi.is_uh) {
    std::ostringstream msg;
    msg << "bracket end t=" << t_hi << " is still uniformly hyperbolic";
    throw BadBracket(msg.str());
  }

  double a = t_lo, b = t_hi;
  while (b - a > tol) {
    const double mid = a + (b - a) / 2.0;
    if (mid <= a || mid >= b) break;  // double precision exhausted
    const UHCertificate c = certify_uh(builder(mid), opts);
    est.certificates.push_back(c);
    (c.is_uh ? a : b) = mid;
  }

  est.t_uh = a;
  est.t_non_uh = b;
  est.t0 = a + (b - a) / 2.0;
  est.width = b - a;
  return est;
}

}  // namespace qplab
