#include "qplab/bundles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>

#include "qplab/errors.hpp"
#include "qplab/parallel.hpp"

namespace qplab {

namespace {

// Chunked kernel call; chunks are fixed so results do not depend on jobs.
void slope_batch(const kernels::FamilyPod& pod, const double* theta, int count,
                 long long n, double seed, int direction, int jobs,
                 double* out) {
  if (count <= 0) return;
  parallel_for(count, jobs, [&](std::int64_t b, std::int64_t e) {
    kernels::slope_orbit(pod, theta + b, static_cast<int>(e - b), n, seed,
                         direction, out + b);
  });
}

struct Ladder {
  std::vector<double> r;        // latest slope per point
  std::vector<long long> n_at;  // accepted iterate count, 0 if not accepted
  long long n_last = 0;         // deepest rung computed
  int unaccepted = 0;
  bool improving = true;  // residuals still shrinking when we stopped
  double worst_residual = 0.0;
  double decay_rate = 0.0;  // per-step estimate from the last two rungs
};

Ladder run_ladder(const kernels::FamilyPod& pod, const std::vector<double>& th,
                  int direction, const EngineOptions& opts, long long cap) {
  const int n_pts = static_cast<int>(th.size());
  Ladder lad;
  lad.r.assign(n_pts, 0.0);
  lad.n_at.assign(n_pts, 0);

  long long n = std::max<long long>(1, opts.n_first);
  slope_batch(pod, th.data(), n_pts, n, opts.seed_slope, direction, opts.jobs,
              lad.r.data());
  lad.n_last = n;

  std::vector<int> active(n_pts);
  for (int i = 0; i < n_pts; ++i) active[i] = i;
  std::vector<double> th_act(th), r_new(n_pts);
  // (n, max Cauchy residual over the set active at that rung)
  std::vector<std::pair<long long, double>> hist;

  while (!active.empty() && 2 * n <= cap) {
    const long long n2 = 2 * n;
    const int m = static_cast<int>(active.size());
    slope_batch(pod, th_act.data(), m, n2, opts.seed_slope, direction,
                opts.jobs, r_new.data());
    double maxres = 0.0;
    std::vector<int> next;
    std::vector<double> th_next;
    for (int k = 0; k < m; ++k) {
      const int i = active[k];
      const double res = std::fabs(r_new[k] - lad.r[i]);
      lad.r[i] = r_new[k];
      if (res < opts.bundle_tol) {
        lad.n_at[i] = n2;
      } else {
        next.push_back(i);
        th_next.push_back(th_act[k]);
      }
      if (!(res <= maxres)) maxres = std::fmax(maxres, res);  // NaN-safe
      if (std::isnan(res)) maxres = std::numeric_limits<double>::infinity();
    }
    hist.emplace_back(n2, maxres);
    active.swap(next);
    th_act.swap(th_next);
    n = n2;
    lad.n_last = n;

    // Elliptic orbits never settle: the residual plateaus at O(1).  Stop
    // once three doublings in a row bought less than 10%, provided the
    // plateau really is elliptic-sized.  Just below the edge the iterate
    // crawls through the near-parabolic bottleneck for ~1/sqrt(gap) steps
    // and the residual plateaus too, but at the O(sqrt(gap)) slope scale;
    // those must keep running or UH points get misreported.  Parabolic
    // decay (factor 2 per rung) also runs to the cap so the failure is
    // reported as a cap hit.
    if (!active.empty() && hist.size() >= 4 && n >= 4096) {
      const double r0 = hist[hist.size() - 4].second;
      const double r3 = hist[hist.size() - 1].second;
      if (r0 > 0.0 && r3 > 0.9 * r0 && r3 > 1e-2) {
        lad.improving = false;
        break;
      }
    }
  }

  lad.unaccepted = static_cast<int>(active.size());
  if (!hist.empty()) lad.worst_residual = hist.back().second;
  if (lad.unaccepted > 0 && hist.size() >= 2) {
    const auto& [na, ra] = hist[hist.size() - 2];
    const auto& [nb, rb] = hist[hist.size() - 1];
    if (!(rb < 0.9 * ra)) lad.improving = false;
  }
  // Per-step decay from the last two rungs with usable residuals.
  for (std::size_t k = hist.size(); k >= 2; --k) {
    const auto& [na, ra] = hist[k - 2];
    const auto& [nb, rb] = hist[k - 1];
    if (ra > 0.0 && rb > 0.0 && std::isfinite(ra) && std::isfinite(rb)) {
      lad.decay_rate = std::pow(rb / ra, 1.0 / static_cast<double>(nb - na));
      break;
    }
  }
  return lad;
}

// Direct-iteration slopes at theta_i + w, compared against the Moebius image
// of the field. The comparison target inherits the accepted iterate count of
// the grid neighbourhood it lands in, not just the origin point's: near the
// difference-field dip the shifted point may need deeper iteration than the
// origin, and an under-converged target would inflate the residual.
double invariance_residual(const ParameterFamily& fam,
                           const kernels::FamilyPod& pod,
                           const std::vector<double>& grid,
                           const std::vector<double>& r,
                           const std::vector<long long>& n_at, int direction,
                           const EngineOptions& opts) {
  const double omega = fam.omega();
  const CocycleMap folded = fam.folded();
  const std::size_t np = grid.size();
  std::map<long long, std::vector<int>> groups;
  for (std::size_t i = 0; i < np; ++i) {
    const double shifted = reduce_mod1(grid[i] + omega);
    const std::size_t j0 = std::min<std::size_t>(
        static_cast<std::size_t>(shifted * static_cast<double>(np)), np - 1);
    const std::size_t j1 = (j0 + 1) % np;
    const long long n_target =
        std::max(n_at[i], std::max(n_at[j0], n_at[j1]));
    groups[n_target].push_back(i);
  }

  double worst = 0.0;
  std::vector<double> th_shift, r_shift;
  for (const auto& [n, idx] : groups) {
    th_shift.resize(idx.size());
    r_shift.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
      th_shift[k] = reduce_mod1(grid[idx[k]] + omega);
    slope_batch(pod, th_shift.data(), static_cast<int>(idx.size()), n,
                opts.seed_slope, direction, opts.jobs, r_shift.data());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int i = idx[k];
      const Slope img =
          mobius_apply(folded.evaluate(grid[i]), Slope::finite(r[i]));
      const double res = img.infinite
                             ? std::numeric_limits<double>::infinity()
                             : std::fabs(img.r - r_shift[k]);
      worst = std::fmax(worst, res);
    }
  }
  return worst;
}

}  // namespace

Slope mobius_apply(const Mat2& m, Slope s) {
  if (s.infinite) {
    if (m.a21 == 0.0) return Slope::at_infinity();
    return Slope::finite(m.a11 / m.a21);
  }
  const double num = m.a11 * s.r + m.a12;
  const double den = m.a21 * s.r + m.a22;
  if (den == 0.0) return Slope::at_infinity();
  return Slope::finite(num / den);
}

static DirectionResult direction_impl(const ParameterFamily& fam, double theta,
                                      long long n, double seed,
                                      int direction) {
  if (n < 1) throw DomainError("direction iterate count must be >= 1");
  const kernels::FamilyData data = kernels::make_family_data(fam);
  double r1 = 0.0, r2 = 0.0;
  const double th = reduce_mod1(theta);
  kernels::slope_orbit(data.pod, &th, 1, n, seed, direction, &r1);
  kernels::slope_orbit(data.pod, &th, 1, 2 * n, seed, direction, &r2);
  return {Slope::finite(r1), std::fabs(r1 - r2), n};
}

DirectionResult unstable_direction(const ParameterFamily& fam, double theta,
                                   long long n, double seed) {
  return direction_impl(fam, theta, n, seed, kernels::kForward);
}

DirectionResult stable_direction(const ParameterFamily& fam, double theta,
                                 long long n, double seed) {
  return direction_impl(fam, theta, n, seed, kernels::kBackward);
}

BundleStatus try_compute_bundles(const ParameterFamily& fam, int grid_n,
                                 const EngineOptions& opts) {
  if (grid_n < 8) throw ConfigError("bundle grid must have at least 8 points");
  BundleStatus st;
  BundlePair& bp = st.pair;
  bp.grid.resize(grid_n);
  for (int i = 0; i < grid_n; ++i)
    bp.grid[i] = static_cast<double>(i) / grid_n;

  const kernels::FamilyData data = kernels::make_family_data(fam);
  const Ladder lu =
      run_ladder(data.pod, bp.grid, kernels::kForward, opts, opts.iteration_cap);
  const Ladder ls = run_ladder(data.pod, bp.grid, kernels::kBackward, opts,
                               opts.iteration_cap);

  bp.r_u = lu.r;
  bp.r_s = ls.r;
  bp.n_u = lu.n_at;
  bp.n_s = ls.n_at;
  bp.decay_rate = std::fmax(lu.decay_rate, ls.decay_rate);
  bp.iterations_used = std::max(lu.n_last, ls.n_last);

  st.partial_d_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    const double d = bp.r_u[i] - bp.r_s[i];
    if (std::isfinite(d)) st.partial_d_min = std::fmin(st.partial_d_min, d);
  }
  if (!std::isfinite(st.partial_d_min)) st.partial_d_min = std::nan("");

  st.unconverged_points = lu.unaccepted + ls.unaccepted;
  st.worst_residual = std::fmax(lu.worst_residual, ls.worst_residual);
  if (st.unconverged_points > 0) {
    st.improving = (lu.unaccepted > 0 && lu.improving) ||
                   (ls.unaccepted > 0 && ls.improving);
    st.failure = "non_convergence";
    return st;
  }
  st.improving = false;

  double cone = 1.0;
  for (int i = 0; i < grid_n; ++i) {
    for (const double r : {bp.r_u[i], bp.r_s[i]}) {
      if (!(r > 0.0) || !std::isfinite(r)) {
        st.failure = "cone_violation";
        return st;
      }
      cone = std::fmax(cone, std::fmax(r, 1.0 / r));
    }
    if (!(bp.r_u[i] > bp.r_s[i])) {
      st.failure = "ordering_violation";
      return st;
    }
  }
  bp.cone_constant = cone;

  bp.residual_u = invariance_residual(fam, data.pod, bp.grid, bp.r_u, bp.n_u,
                                      kernels::kForward, opts);
  bp.residual_s = invariance_residual(fam, data.pod, bp.grid, bp.r_s, bp.n_s,
                                      kernels::kBackward, opts);
  if (std::fmax(bp.residual_u, bp.residual_s) > opts.residual_tol) {
    st.failure = "invariance_residual";
    return st;
  }

  st.converged = true;
  return st;
}

BundleStatus compute_bundles_adaptive(const ParameterFamily& fam, int grid_n,
                                      const EngineOptions& opts) {
  EngineOptions o = opts;
  BundleStatus st = try_compute_bundles(fam, grid_n, o);
  double prev_worst = st.worst_residual;
  for (const long long factor : {4LL, 16LL}) {
    if (st.converged || st.failure != "non_convergence" || !st.improving)
      break;
    if (st.partial_d_min >= 0.0 && st.partial_d_min < o.d_floor)
      break;  // resolved collision, deeper iteration cannot reopen it
    if (factor > 4 && !(st.worst_residual < 0.1 * prev_worst)) break;
    prev_worst = st.worst_residual;
    o.iteration_cap = opts.iteration_cap * factor;
    st = try_compute_bundles(fam, grid_n, o);
  }
  return st;
}

BundlePair compute_bundles(const ParameterFamily& fam, int grid_n,
                           const EngineOptions& opts) {
  BundleStatus st = try_compute_bundles(fam, grid_n, opts);
  if (st.converged) return std::move(st.pair);
  std::ostringstream msg;
  if (st.failure == "non_convergence") {
    msg << "slope iteration did not converge at " << st.unconverged_points
        << " grid points (cap " << opts.iteration_cap << ", worst residual "
        << st.worst_residual << ")";
    throw NonConvergence(msg.str());
  }
  if (st.failure == "invariance_residual") {
    msg << "invariance residual " << std::fmax(st.pair.residual_u,
                                               st.pair.residual_s)
        << " exceeds " << opts.residual_tol;
    throw NonConvergence(msg.str());
  }
  msg << "slope field " << st.failure << ": slopes must satisfy 0 < r_s < r_u";
  throw ConeViolation(msg.str());
}

PairEvaluator::PairEvaluator(const ParameterFamily& fam,
                             const EngineOptions& opts, long long n_hint)
    : data_(kernels::make_family_data(fam)),
      opts_(opts),
      omega_(fam.omega()) {
  n_start_ = std::max<long long>(1, opts.n_first);
  const long long target = std::min(n_hint, opts.iteration_cap);
  while (2 * n_start_ <= target) n_start_ *= 2;
}

PairEvaluator::Pair PairEvaluator::eval_uncached(double theta) const {
  const double th = reduce_mod1(theta);
  const long long cap = 4 * opts_.iteration_cap;
  long long n = n_start_;
  double ru = 0.0, rs = 0.0;
  kernels::slope_orbit(data_.pod, &th, 1, n, opts_.seed_slope,
                       kernels::kForward, &ru);
  kernels::slope_orbit(data_.pod, &th, 1, n, opts_.seed_slope,
                       kernels::kBackward, &rs);
  while (2 * n <= cap) {
    const long long n2 = 2 * n;
    double ru2 = 0.0, rs2 = 0.0;
    kernels::slope_orbit(data_.pod, &th, 1, n2, opts_.seed_slope,
                         kernels::kForward, &ru2);
    kernels::slope_orbit(data_.pod, &th, 1, n2, opts_.seed_slope,
                         kernels::kBackward, &rs2);
    const double res = std::fmax(std::fabs(ru2 - ru), std::fabs(rs2 - rs));
    ru = ru2;
    rs = rs2;
    const double d_est = ru - rs;
    // Accept on the absolute tolerance or, once d is tiny, relative to d:
    // the difference field only needs ~6 significant digits near a dip.
    if (res < std::fmax(opts_.bundle_tol, 1e-6 * std::fabs(d_est)))
      return {ru, rs, d_est, n2, res};
    n = n2;
  }
  std::ostringstream msg;
  msg << "pair evaluation did not converge at theta=" << th << " (cap " << cap
      << ")";
  throw NonConvergence(msg.str());
}

PairEvaluator::Pair PairEvaluator::eval(double theta) const {
  const double th = reduce_mod1(theta);
  const std::uint64_t k = std::bit_cast<std::uint64_t>(th);
  auto it = std::lower_bound(
      cache_.begin(), cache_.end(), k, [](const auto& e, std::uint64_t key) {
        return std::bit_cast<std::uint64_t>(e.first) < key;
      });
  if (it != cache_.end() && std::bit_cast<std::uint64_t>(it->first) == k)
    return it->second;
  const Pair p = eval_uncached(th);
  if (cache_.size() > (1u << 20)) cache_.clear();
  cache_.insert(it, {th, p});
  return p;
}

void PairEvaluator::prime(double theta, double r_u, double r_s, long long n,
                          double residual) const {
  const double th = reduce_mod1(theta);
  const std::uint64_t k = std::bit_cast<std::uint64_t>(th);
  auto it = std::lower_bound(
      cache_.begin(), cache_.end(), k, [](const auto& e, std::uint64_t key) {
        return std::bit_cast<std::uint64_t>(e.first) < key;
      });
  if (it != cache_.end() && std::bit_cast<std::uint64_t>(it->first) == k)
    return;  // first value wins; primed and computed agree to tolerance
  cache_.insert(it, {th, Pair{r_u, r_s, r_u - r_s, n, residual}});
}

std::vector<PairEvaluator::Pair> PairEvaluator::eval_batch(
    const std::vector<double>& thetas) const {
  // Same per-point ladder as eval(); batching only changes kernel call
  // grouping, so values are identical either way.
  std::vector<Pair> out(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) out[i] = eval(thetas[i]);
  return out;
}

DifferenceField difference_field(const ParameterFamily& fam,
                                 const BundlePair& bundles,
                                 const EngineOptions& opts) {
  const int n_pts = static_cast<int>(bundles.grid.size());
  if (n_pts < 8 || bundles.r_u.size() != bundles.grid.size() ||
      bundles.r_s.size() != bundles.grid.size())
    throw DomainError("difference_field needs a populated bundle pair");

  DifferenceField f;
  f.d.resize(n_pts);
  int j0 = 0;
  for (int i = 0; i < n_pts; ++i) {
    f.d[i] = bundles.r_u[i] - bundles.r_s[i];
    if (!(f.d[i] > 0.0))
      throw ConeViolation("difference field must be positive");
    if (f.d[i] < f.d[j0]) j0 = i;
  }
  const double d_grid_min = f.d[j0];

  // Competing basins are detected over local minima of the grid field, not
  // raw values: a wide shallow basin has many points near d_min but only
  // one local minimum.  Local minima within ~2% of the torus of the argmin
  // count as the same basin.  A constant field is the degenerate case
  // (every point is a plateau minimum) and is always flagged.
  const int guard = std::max(2, n_pts / 50);
  double second = std::numeric_limits<double>::infinity();
  int second_idx = -1;
  for (int i = 0; i < n_pts; ++i) {
    const int prev = (i + n_pts - 1) % n_pts;
    const int next = (i + 1) % n_pts;
    if (!(f.d[i] <= f.d[prev] && f.d[i] <= f.d[next])) continue;
    const int dist = std::min(std::abs(i - j0), n_pts - std::abs(i - j0));
    if (dist > guard && f.d[i] < second) {
      second = f.d[i];
      second_idx = i;
    }
  }
  if (std::isfinite(second)) {
    f.second_min_ratio = second / d_grid_min;
    f.multiple_minima = second <= 1.05 * d_grid_min;
  } else {
    f.second_min_ratio = 0.0;  // no second basin
    f.multiple_minima = false;
  }

  PairEvaluator ev(fam, opts, bundles.iterations_used);

  // Golden-section refinement between a grid local minimum's neighbours.
  // Coordinates are kept unwrapped; evaluation reduces mod 1.
  const auto refine = [&](int idx) -> std::pair<double, double> {
    const double step = 1.0 / n_pts;
    const double x0 = bundles.grid[idx];
    double a = x0 - step, b = x0 + step;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = ev.eval(x1).d, f2 = ev.eval(x2).d;
    double best_x = x0, best_d = f.d[idx];
    for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = ev.eval(x1).d;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = ev.eval(x2).d;
      }
      if (f1 < best_d) best_d = f1, best_x = x1;
      if (f2 < best_d) best_d = f2, best_x = x2;
    }
    return {reduce_mod1(best_x), best_d};
  };

  auto [theta_c, d_min] = refine(j0);
  if (f.multiple_minima && second_idx >= 0) {
    // A near-tied competitor can overtake the grid argmin once both basins
    // are resolved below grid spacing.
    const auto [tc2, dm2] = refine(second_idx);
    if (dm2 < d_min) {
      f.second_min_ratio = d_min / dm2;
      f.second_theta = theta_c;
      theta_c = tc2;
      d_min = dm2;
    } else {
      f.second_min_ratio = dm2 / d_min;
      f.second_theta = tc2;
    }
  }

  // Local mesh over the dip: a window at the sqrt(d_min) quadratic scale,
  // expanded until d has recovered to 4*d_min or 0.1 is reached, plus dyadic
  // zoom levels around theta_c down to spacing min(1e-6, sqrt(d_min)/50).
  const double h0 = std::fmax(1e-6, std::sqrt(d_min) / 50.0);
  const double h_fine = std::fmin(1e-6, std::sqrt(d_min) / 50.0);
  double w = 4.0 * h0;
  while (w < 0.1) {
    const double da = ev.eval(theta_c + w).d;
    const double db = ev.eval(theta_c - w).d;
    if (std::fmin(da, db) >= 4.0 * d_min) break;
    w *= 2.0;
  }
  w = std::fmin(w, 0.1);
  int half = static_cast<int>(std::ceil(w / h0));
  half = std::min(half, 512);
  const double h = w / half;

  std::vector<double> mesh;
  mesh.reserve(2 * half + 200);
  for (int k = -half; k <= half; ++k)
    mesh.push_back(theta_c + static_cast<double>(k) * h);
  for (double hz = h / 4.0;; hz /= 4.0) {
    for (int k = -32; k <= 32; ++k)
      if (k % 4 != 0) mesh.push_back(theta_c + static_cast<double>(k) * hz);
    if (hz <= h_fine) break;
  }
  std::sort(mesh.begin(), mesh.end());
  mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());

  const auto pairs = ev.eval_batch(mesh);
  f.mesh_theta.resize(mesh.size());
  f.mesh_ru.resize(mesh.size());
  f.mesh_rs.resize(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    f.mesh_theta[i] = reduce_mod1(mesh[i]);
    f.mesh_ru[i] = pairs[i].r_u;
    f.mesh_rs[i] = pairs[i].r_s;
    if (pairs[i].d < d_min) {
      d_min = pairs[i].d;
      theta_c = f.mesh_theta[i];
    }
  }
  f.mesh_halfwidth = w;
  f.theta_c = theta_c;
  f.d_min = d_min;
  return f;
}

double growth_ratio(const PairEvaluator& ev, double theta, long long i,
                    long long j) {
  if (i > j) throw DomainError("growth_ratio requires i <= j");
  const double di = ev.eval(orbit_point(theta, i, ev.omega())).d;
  const double dj = ev.eval(orbit_point(theta, j, ev.omega())).d;
  return dj / di;
}

}  // namespace qplab
