#include "qplab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qplab/errors.hpp"
#include "qplab/lyapunov.hpp"

namespace qplab {

namespace {

double wrap_dist(double a, double b) {
  double x = std::fabs(reduce_mod1(a) - reduce_mod1(b));
  return std::fmin(x, 1.0 - x);
}

}  // namespace

double DistanceSamples::at(double th) const {
  const std::size_t n = theta.size();
  const double x = reduce_mod1(th);
  auto it = std::upper_bound(theta.begin(), theta.end(), x);
  // Wrap segment between the last and first node.
  if (it == theta.begin() || it == theta.end()) {
    const double lo = theta[n - 1], hi = theta[0] + 1.0;
    const double xx = x < theta[0] ? x + 1.0 : x;
    const double span = hi - lo;
    if (span <= 0.0) return d[0];
    const double u = (xx - lo) / span;
    return d[n - 1] + u * (d[0] - d[n - 1]);
  }
  const std::size_t j = static_cast<std::size_t>(it - theta.begin());
  const double lo = theta[j - 1], hi = theta[j];
  const double u = (x - lo) / (hi - lo);
  return d[j - 1] + u * (d[j] - d[j - 1]);
}

std::vector<double> default_gaps(double g0, double g_floor) {
  if (!(g0 > 0.0) || !(g_floor > 0.0) || g_floor > g0)
    throw DomainError("default_gaps requires 0 < g_floor <= g0");
  std::vector<double> gaps;
  for (double g = g0; g >= g_floor * (1.0 - 1e-12); g /= 2.0)
    gaps.push_back(g);
  return gaps;
}

std::vector<SweepRecord> run_sweep(const FamilyBuilder& builder, double t0,
                                   const std::vector<double>& gaps,
                                   const EngineOptions& opts) {
  if (gaps.empty()) throw DomainError("run_sweep needs at least one gap");
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (!(gaps[i] > 0.0)) throw DomainError("run_sweep gaps must be positive");
    if (i > 0 && !(gaps[i] < gaps[i - 1]))
      throw DomainError("run_sweep gaps must be sorted descending");
  }

  EngineOptions o = opts;
  o.t0_hint = t0;

  std::vector<SweepRecord> records;
  records.reserve(gaps.size());
  for (const double gap : gaps) {
    SweepRecord rec;
    rec.gap = gap;
    rec.t = t0 - gap;
    const ParameterFamily fam = builder(rec.t);

    const BundleStatus st = compute_bundles_adaptive(fam, o.grid_n, o);
    if (!st.converged) {
      rec.status = st.failure.empty() ? "non_convergence" : st.failure;
      records.push_back(std::move(rec));
      continue;
    }
    try {
      const DifferenceField df = difference_field(fam, st.pair, o);
      rec.d_min = df.d_min;
      rec.theta_c = df.theta_c;
      rec.multiple_minima = df.multiple_minima;

      const LyapunovEstimate le = le_from_bundle(fam, st.pair, &df, o);
      rec.L = le.value;
      rec.err_L = le.error_estimate;

      const DerivativeEstimate lem = derivative_lemma31(fam, st.pair, df, o);
      rec.dLdt_lemma = lem.value;

      const DerivativeEstimate fd =
          derivative_fd(fam, fd_default_step(fam, o), o);
      rec.dLdt_fd = fd.value;
      rec.err_dLdt = std::fabs(lem.value - fd.value);
      rec.status = "ok";
    } catch (const QuadratureNotConverged&) {
      rec.status = "quadrature_not_converged";
    } catch (const WindowViolation&) {
      rec.status = "window_violation";
    } catch (const NonConvergence&) {
      rec.status = "non_convergence";
    } catch (const ConeViolation&) {
      rec.status = "cone_violation";
    }
    records.push_back(std::move(rec));
  }
  return records;
}

PowerLawFit fit_power_law(const std::vector<double>& xs,
                          const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw DomainError("fit_power_law needs matching xs/ys");
  const int n = static_cast<int>(xs.size());
  if (n < 5) throw DomainError("fit_power_law needs at least 5 points");
  double xmin = xs[0], xmax = xs[0];
  for (int i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw DomainError("fit_power_law needs positive data");
    xmin = std::fmin(xmin, xs[i]);
    xmax = std::fmax(xmax, xs[i]);
  }
  if (xmax < 10.0 * xmin)
    throw DegenerateFit("fit_power_law span is below one decade");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(xs[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double den = n * sxx - sx * sx;
  PowerLawFit fit;
  fit.exponent = (n * sxy - sx * sy) / den;
  fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
  const double vden = (n * sxx - sx * sx) * (n * syy - sy * sy);
  fit.r_squared =
      vden > 0.0 ? (n * sxy - sx * sy) * (n * sxy - sx * sy) / vden : 1.0;
  fit.gap_min = xmin;
  fit.gap_max = xmax;
  fit.n_points = n;
  return fit;
}

namespace {

// Orbit walk bookkeeping shared by the rate, stopping-time, and S checks.
struct WalkLimits {
  long long cap = 65536;
};

long long first_exit(const DistanceSamples& s, double theta0, double floor,
                     int dir, long long cap, bool& capped) {
  for (long long k = 1; k <= cap; ++k) {
    const double th = theta0 + static_cast<double>(dir) *
                                   static_cast<double>(k) * s.omega;
    if (s.at(th) > floor) return k;
  }
  capped = true;
  return cap;
}

}  // namespace

AssumptionReport verify_assumptions(const DistanceSamples& samples,
                                    double theta_c, double d_min,
                                    bool multiple_minima, double second_theta,
                                    const EngineOptions& opts) {
  if (samples.theta.size() < 16 || samples.theta.size() != samples.d.size())
    throw DomainError("verify_assumptions needs a populated sample field");
  if (!(d_min > 0.0))
    throw DomainError("verify_assumptions needs a positive d_min");

  AssumptionReport rep;
  rep.d_min = d_min;
  rep.theta_c = theta_c;
  rep.multiple_minima = multiple_minima;
  const double floor = std::sqrt(d_min);
  const double y_noise = std::fmax(opts.d_floor, 1e-6 * d_min);

  // A2(c): best-fit C1 over shrinking symmetric windows; I is the largest
  // window where the two-sided relative deviation stays under 10%.
  double best_w = 0.0, best_C1 = 0.0, best_res = 0.0;
  double fallback_res = std::numeric_limits<double>::infinity();
  double fallback_C1 = 0.0;
  for (double w = 0.25; w >= 1e-7; w /= 2.0) {
    double sxx = 0.0, sxy = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < samples.theta.size(); ++i) {
      const double dist = wrap_dist(samples.theta[i], theta_c);
      if (dist > w || dist == 0.0) continue;
      const double y = samples.d[i] - d_min;
      if (y < 10.0 * y_noise) continue;
      const double x = dist * dist;
      sxx += x * x;
      sxy += x * y;
      ++used;
    }
    if (used < 8 || sxx <= 0.0) continue;
    const double C1 = sxy / sxx;
    if (!(C1 > 0.0)) continue;
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.theta.size(); ++i) {
      const double dist = wrap_dist(samples.theta[i], theta_c);
      if (dist > w || dist == 0.0) continue;
      const double y = samples.d[i] - d_min;
      if (y < 10.0 * y_noise) continue;
      worst = std::fmax(worst, std::fabs(y / (C1 * dist * dist) - 1.0));
    }
    if (worst < fallback_res) {
      fallback_res = worst;
      fallback_C1 = C1;
    }
    if (worst <= 0.10) {
      best_w = w;
      best_C1 = C1;
      best_res = worst;
      break;  // windows shrink, so the first pass is the maximal interval
    }
  }
  if (best_w == 0.0) {
    rep.quad_constant_C1 = fallback_C1;
    rep.quad_fit_residual = fallback_res;
    rep.interval_length = 0.0;
    rep.interval_length_ratio = 0.0;
    rep.violations.push_back(
        {"A2c", theta_c, 0,
         "no window around theta_c fits a two-sided quadratic within 10%"});
  } else {
    rep.quad_constant_C1 = best_C1;
    rep.quad_fit_residual = best_res;
  }
  if (multiple_minima)
    rep.violations.push_back(
        {"A2b", theta_c, 0,
         "competitor basin ties the global minimum (symmetric pair)"});

  // Stopping times, growth rates, and S sums sample the part of I inside the
  // sub-floor tube; where d already exceeds the floor the stopping time is
  // vacuous and no growth requirement applies.
  double wI = best_w > 0.0 ? best_w : std::fmax(1e-6, floor / 50.0);
  if (best_w > 0.0 && best_C1 > 0.0 && 0.5 * floor > d_min)
    wI = std::fmin(wI, std::sqrt((0.5 * floor - d_min) / best_C1));
  if (best_w > 0.0) {
    rep.interval_length = 2.0 * wI;
    rep.interval_length_ratio = wI / floor;
  }
  const WalkLimits lim;
  const int S = 17;
  const bool twin = multiple_minima && std::isfinite(second_theta);
  double a_min = std::numeric_limits<double>::infinity();
  double a_arg_theta = theta_c;
  long long a_arg_k = 0;
  long long sp_min = lim.cap, sp_max = 0, sm_min = lim.cap, sm_max = 0;
  double sp_sum = 0.0, sm_sum = 0.0;
  double S_plus_max = 0.0, S_minus_max = 0.0;
  bool capped = false;
  long long sigma_widest = 0;

  for (int s = 0; s < S; ++s) {
    const double th =
        theta_c + wI * (2.0 * static_cast<double>(s) / (S - 1) - 1.0);
    const double d0 = samples.at(th);
    const long long sp = first_exit(samples, th, floor, +1, lim.cap, capped);
    const long long sm = first_exit(samples, th, floor, -1, lim.cap, capped);
    sp_min = std::min(sp_min, sp);
    sp_max = std::max(sp_max, sp);
    sm_min = std::min(sm_min, sm);
    sm_max = std::max(sm_max, sm);
    sp_sum += static_cast<double>(sp);
    sm_sum += static_cast<double>(sm);
    sigma_widest = std::max(sigma_widest, std::max(sp, sm));

    // Per-step rates from the (k-1)-step ratios, including the exit step.
    // Orbit points landing inside the twin basin of a symmetric pair are
    // part of the critical zone and carry no rate requirement.
    double S_plus = 0.0, S_minus = 0.0;
    for (int dir : {+1, -1}) {
      const long long sigma = dir > 0 ? sp : sm;
      double& Ssum = dir > 0 ? S_plus : S_minus;
      for (long long k = 1; k <= sigma + 1; ++k) {
        const double thk = th + static_cast<double>(dir) *
                                    static_cast<double>(k - 1) *
                                    samples.omega;
        const double dk = samples.at(thk);
        Ssum += k >= 2 ? d0 / dk : 0.0;  // S runs over 1..sigma steps
        if (k < 2) continue;
        if (twin && wrap_dist(thk, second_theta) <= wI) continue;
        const double rate = std::log(dk / d0) / static_cast<double>(k - 1);
        if (rate < a_min) {
          a_min = rate;
          a_arg_theta = reduce_mod1(th);
          a_arg_k = dir * k;
        }
      }
    }
    S_plus_max = std::fmax(S_plus_max, S_plus);
    S_minus_max = std::fmax(S_minus_max, S_minus);
  }

  rep.stopping.plus_min = sp_min;
  rep.stopping.plus_max = sp_max;
  rep.stopping.minus_min = sm_min;
  rep.stopping.minus_max = sm_max;
  rep.stopping.plus_mean = sp_sum / S;
  rep.stopping.minus_mean = sm_sum / S;
  rep.stopping.n_samples = S;
  rep.stopping.capped = capped;
  rep.growth_rate_a = std::isfinite(a_min) ? a_min : 0.0;
  rep.S_plus_max = S_plus_max;
  rep.S_minus_max = S_minus_max;

  if (!(rep.growth_rate_a > 0.0)) {
    std::ostringstream msg;
    msg << "no positive orbit growth rate (min " << rep.growth_rate_a << ")";
    rep.violations.push_back({"A2a", a_arg_theta, a_arg_k, msg.str()});
  } else {
    const double bound = 1.0 / (1.0 - std::exp(-rep.growth_rate_a)) + 1e-6;
    if (S_plus_max > bound || S_minus_max > bound) {
      std::ostringstream msg;
      msg << "S sum " << std::fmax(S_plus_max, S_minus_max) << " exceeds "
          << bound;
      rep.violations.push_back({"S_bound", theta_c, 0, msg.str()});
    }
  }
  if (capped)
    rep.violations.push_back(
        {"A2a", theta_c, lim.cap,
         "stopping-time walk hit the step cap before exiting the floor"});

  // A2(e): every sampled node outside the critical orbit set must sit at or
  // above sqrt(d_min).  A below-floor node is excused when a walk that stays
  // below the floor reaches I (or its twin) within the step budget.
  const long long reach = 4 * std::max<long long>(sigma_widest, 1) + 100;
  // Capped stopping times leave reach meaningless; skip the excuse walks
  // then and let the direct floor test stand (A2a already records the cap).
  long long walk_budget = capped ? 0 : 50'000'000;
  const auto in_core = [&](double th) {
    return wrap_dist(th, theta_c) <= wI ||
           (twin && wrap_dist(th, second_theta) <= wI);
  };
  const auto excusable = [&](double th) {
    for (int dir : {+1, -1}) {
      double cur = th;
      for (long long k = 0; k <= reach; ++k) {
        if (--walk_budget < 0) return false;
        if (in_core(cur)) return true;
        if (samples.at(cur) > floor) break;
        cur += static_cast<double>(dir) * samples.omega;
      }
    }
    return false;
  };
  long long pass = 0, fail = 0;
  int reported = 0;
  for (std::size_t i = 0; i < samples.theta.size(); ++i) {
    const double th = samples.theta[i];
    if (in_core(th)) continue;
    if (samples.d[i] >= floor) {
      ++pass;
      continue;
    }
    if (excusable(th)) continue;
    ++fail;
    if (reported < 8) {
      std::ostringstream msg;
      msg << "d = " << samples.d[i] << " below floor " << floor
          << " outside the critical orbit set";
      rep.violations.push_back({"A2e", th, 0, msg.str()});
      ++reported;
    }
  }
  rep.outside_floor_fraction =
      pass + fail > 0 ? static_cast<double>(pass) /
                            static_cast<double>(pass + fail)
                      : 1.0;
  rep.outside_floor_ok = rep.outside_floor_fraction >= 0.99;
  return rep;
}

AssumptionReport verify_assumptions(const ParameterFamily& fam,
                                    const BundlePair& bundles,
                                    const DifferenceField& field,
                                    const EngineOptions& opts) {
  if (bundles.grid.size() != field.d.size())
    throw DomainError("bundle grid and difference field disagree");
  DistanceSamples s;
  s.omega = fam.omega();
  const std::size_t n = bundles.grid.size();
  const std::size_t m = field.mesh_theta.size();
  std::vector<std::pair<double, double>> nodes;
  nodes.reserve(n + m);
  for (std::size_t i = 0; i < n; ++i)
    nodes.emplace_back(bundles.grid[i], field.d[i]);
  for (std::size_t i = 0; i < m; ++i)
    nodes.emplace_back(field.mesh_theta[i],
                       field.mesh_ru[i] - field.mesh_rs[i]);
  std::sort(nodes.begin(), nodes.end());
  s.theta.reserve(nodes.size());
  s.d.reserve(nodes.size());
  for (const auto& [th, dv] : nodes) {
    if (!s.theta.empty() && th == s.theta.back()) continue;
    s.theta.push_back(th);
    s.d.push_back(dv);
  }
  return verify_assumptions(s, field.theta_c, field.d_min,
                            field.multiple_minima, field.second_theta, opts);
}

TheoremBound theorem_bound_check(const std::vector<SweepRecord>& records) {
  TheoremBound out;
  out.K1 = std::numeric_limits<double>::infinity();
  for (const SweepRecord& r : records) {
    if (!r.ok()) continue;
    const double c = std::fabs(r.dLdt_lemma) * std::sqrt(r.gap);
    out.K1 = std::fmin(out.K1, c);
    out.K2 = std::fmax(out.K2, c);
    ++out.n_used;
  }
  if (out.n_used < 5)
    throw DomainError("theorem_bound_check needs at least 5 valid records");
  out.ratio = out.K2 / out.K1;
  return out;
}

PowerLawFit holder_check(const std::vector<SweepRecord>& records,
                         double L_at_edge) {
  std::vector<double> gaps, dev;
  for (const SweepRecord& r : records) {
    if (!r.ok()) continue;
    const double y = std::fabs(r.L - L_at_edge);
    if (y > 0.0) {
      gaps.push_back(r.gap);
      dev.push_back(y);
    }
  }
  return fit_power_law(gaps, dev);
}

EdgeExtrapolation extrapolate_L_edge(const std::vector<SweepRecord>& records,
                                     int use) {
  std::vector<std::pair<double, double>> pts;  // (sqrt(gap), L)
  for (const SweepRecord& r : records)
    if (r.ok()) pts.emplace_back(std::sqrt(r.gap), r.L);
  if (static_cast<int>(pts.size()) < 3)
    throw DomainError("extrapolate_L_edge needs at least 3 valid records");
  std::sort(pts.begin(), pts.end());
  const int n = std::min<int>(std::max(use, 3), static_cast<int>(pts.size()));

  double ss = 0, ss2 = 0, sy = 0, ssy = 0;
  for (int i = 0; i < n; ++i) {
    ss += pts[i].first;
    ss2 += pts[i].first * pts[i].first;
    sy += pts[i].second;
    ssy += pts[i].first * pts[i].second;
  }
  const double den = n * ss2 - ss * ss;
  if (den == 0.0) throw DegenerateFit("extrapolate_L_edge: singular system");
  EdgeExtrapolation out;
  out.b = (n * ssy - ss * sy) / den;
  out.L0 = (sy - out.b * ss) / n;
  out.n_used = n;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = pts[i].second - out.L0 - out.b * pts[i].first;
    rss += e * e;
  }
  out.rms = std::sqrt(rss / n);
  return out;
}

}  // namespace qplab
