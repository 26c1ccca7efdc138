#include "qplab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "qplab/errors.hpp"
#include "qplab/kernels.hpp"

namespace qplab {

namespace {

// Merged cyclic node list: bundle grid plus the dip mesh, theta ascending,
// exact duplicates dropped.
struct FieldNode {
  double theta;
  double r_u;
  double r_s;
};

std::vector<FieldNode> merged_nodes(const BundlePair& bundles,
                                    const DifferenceField* field) {
  std::vector<FieldNode> nodes;
  nodes.reserve(bundles.grid.size() +
                (field ? field->mesh_theta.size() : 0));
  for (std::size_t i = 0; i < bundles.grid.size(); ++i)
    nodes.push_back({bundles.grid[i], bundles.r_u[i], bundles.r_s[i]});
  if (field) {
    for (std::size_t i = 0; i < field->mesh_theta.size(); ++i)
      nodes.push_back(
          {field->mesh_theta[i], field->mesh_ru[i], field->mesh_rs[i]});
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const FieldNode& a, const FieldNode& b) {
              return a.theta < b.theta;
            });
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](const FieldNode& a, const FieldNode& b) {
                            return a.theta == b.theta;
                          }),
              nodes.end());
  return nodes;
}

double log_stretch(const CocycleMap& folded, double theta, double r_u) {
  const Mat2 m = folded.evaluate(theta);
  const double lam = m.a21 * r_u + m.a22;
  if (lam == 0.0 || !std::isfinite(lam))
    throw DomainError("unstable stretch lambda_1 vanished during the "
                      "Lyapunov integral");
  return std::log(std::fabs(lam));
}

// Cyclic trapezoid over nodes with values f[i] at nodes[i].theta.
double cyclic_trapezoid(const std::vector<double>& x,
                        const std::vector<double>& f) {
  double sum = 0.0;
  const std::size_t m = x.size();
  for (std::size_t i = 0; i + 1 < m; ++i)
    sum += (x[i + 1] - x[i]) * (f[i] + f[i + 1]) / 2.0;
  sum += (x[0] + 1.0 - x[m - 1]) * (f[m - 1] + f[0]) / 2.0;
  return sum;
}

}  // namespace

LyapunovEstimate le_norm_growth(const ParameterFamily& fam,
                                const EngineOptions& opts, double theta0) {
  const long long n = std::max<long long>(opts.le_steps, 8);
  const kernels::FamilyData data = kernels::make_family_data(fam);
  constexpr int kPhases = 8;
  double th[kPhases], le[kPhases];
  for (int j = 0; j < kPhases; ++j)
    th[j] = reduce_mod1(theta0 + static_cast<double>(j) / kPhases);
  kernels::norm_growth(data.pod, th, kPhases, opts.burn_in, n, le);

  double lo = le[0], hi = le[0], mean = 0.0;
  for (int j = 0; j < kPhases; ++j) {
    lo = std::fmin(lo, le[j]);
    hi = std::fmax(hi, le[j]);
    mean += le[j];
  }
  mean /= kPhases;
  LyapunovEstimate est;
  est.value = mean;
  est.n = n;
  est.error_estimate = std::fmax((hi - lo) / 2.0, 1e-13 * (1.0 + std::fabs(mean)));
  est.method = "norm_growth";
  return est;
}

LyapunovEstimate le_from_bundle(const ParameterFamily& fam,
                                const BundlePair& bundles,
                                const DifferenceField* field,
                                const EngineOptions& opts) {
  (void)opts;
  const std::vector<FieldNode> nodes = merged_nodes(bundles, field);
  if (nodes.size() < 8)
    throw DomainError("le_from_bundle needs a populated bundle grid");
  const CocycleMap folded = fam.folded();

  std::vector<double> x(nodes.size()), f(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    x[i] = nodes[i].theta;
    f[i] = log_stretch(folded, nodes[i].theta, nodes[i].r_u);
  }
  const double fine = cyclic_trapezoid(x, f);

  // Coarse pass for the error estimate: grid only if a mesh was merged,
  // else every second grid node.
  double coarse;
  if (field && !field->mesh_theta.empty()) {
    std::vector<double> xg(bundles.grid), fg(bundles.grid.size());
    for (std::size_t i = 0; i < bundles.grid.size(); ++i)
      fg[i] = log_stretch(folded, bundles.grid[i], bundles.r_u[i]);
    coarse = cyclic_trapezoid(xg, fg);
  } else {
    std::vector<double> xh, fh;
    for (std::size_t i = 0; i < nodes.size(); i += 2) {
      xh.push_back(x[i]);
      fh.push_back(f[i]);
    }
    coarse = cyclic_trapezoid(xh, fh);
  }

  LyapunovEstimate est;
  est.value = fine;
  est.n = static_cast<long long>(nodes.size());
  est.error_estimate =
      std::fabs(fine - coarse) + 1e-13 * (1.0 + std::fabs(fine));
  est.method = "bundle_integral";
  return est;
}

namespace {

struct QNode {
  double x;     // unwrapped coordinate in [x0, x0+1)
  double g;     // integrand value
  double invd;  // 1/d, drives the variation refinement rule
  double noise; // integrand error bound from slope residuals
};

struct QCell {
  QNode a, m, b;
  double s;  // Simpson value over [a.x, b.x]
  int depth;
};

double simpson(const QNode& a, const QNode& m, const QNode& b) {
  return (b.x - a.x) / 6.0 * (a.g + 4.0 * m.g + b.g);
}

}  // namespace

DerivativeEstimate derivative_lemma31(const ParameterFamily& fam,
                                      const BundlePair& bundles,
                                      const DifferenceField& field,
                                      const EngineOptions& opts,
                                      const ShearGenerator& w) {
  PairEvaluator ev(fam, opts, bundles.iterations_used);
  for (std::size_t i = 0; i < bundles.grid.size(); ++i)
    ev.prime(bundles.grid[i], bundles.r_u[i], bundles.r_s[i],
             std::max(bundles.n_u[i], bundles.n_s[i]), opts.bundle_tol);
  for (std::size_t i = 0; i < field.mesh_theta.size(); ++i)
    ev.prime(field.mesh_theta[i], field.mesh_ru[i], field.mesh_rs[i],
             bundles.iterations_used, opts.bundle_tol);

  auto make_node = [&](double x) -> QNode {
    const PairEvaluator::Pair p = ev.eval(reduce_mod1(x));
    if (!(p.d > 0.0))
      throw ConeViolation("difference field must stay positive during "
                          "derivative quadrature");
    const double g = (w.w1 * (p.r_u + p.r_s) + w.w2 - w.w3 * p.r_u * p.r_s) / p.d;
    // Slope errors of size res move g by about res * (|g| + |w|) / d.
    const double wmag =
        std::fabs(w.w1) + std::fabs(w.w2) + std::fabs(w.w3);
    const double noise = 4.0 * p.residual * (std::fabs(g) + wmag) / p.d;
    return {x, g, 1.0 / p.d, noise};
  };

  // Partition: bundle grid + dip mesh + theta_c, sorted, made cyclic by
  // repeating the first node shifted by one period.
  std::vector<double> xs;
  xs.reserve(bundles.grid.size() + field.mesh_theta.size() + 1);
  xs.insert(xs.end(), bundles.grid.begin(), bundles.grid.end());
  xs.insert(xs.end(), field.mesh_theta.begin(), field.mesh_theta.end());
  xs.push_back(field.theta_c);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<QNode> pts(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pts[i] = make_node(xs[i]);

  std::vector<QCell> stack;
  double rough = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const QNode& a = pts[i];
    QNode b = pts[(i + 1) % xs.size()];
    if (i + 1 == xs.size()) b.x += 1.0;  // wrap segment
    if (b.x <= a.x) continue;
    const QNode m = make_node((a.x + b.x) / 2.0);
    QCell c{a, m, b, 0.0, 0};
    c.s = simpson(a, m, b);
    rough += c.s;
    stack.push_back(c);
  }

  // Density tolerance: absolute floor quad_tol per unit width, relative
  // 1e-10 once the integral is large (near-edge derivatives reach 1e2+).
  const double tol_density = std::fmax(opts.quad_tol, 1e-10 * std::fabs(rough));
  constexpr double kWidthFloor = 1e-9;
  constexpr long long kCellCap = 2000000;

  double total = 0.0, err = 0.0, noise = 0.0;
  long long accepted = 0, processed = 0;
  while (!stack.empty()) {
    if (++processed > kCellCap)
      throw QuadratureNotConverged(
          "derivative quadrature exceeded the cell budget");
    const QCell c = stack.back();
    stack.pop_back();
    const double width = c.b.x - c.a.x;

    const QNode m1 = make_node((c.a.x + c.m.x) / 2.0);
    const QNode m2 = make_node((c.m.x + c.b.x) / 2.0);
    const double sl = simpson(c.a, m1, c.m);
    const double sr = simpson(c.m, m2, c.b);
    const double diff = std::fabs(sl + sr - c.s);

    // 1/d must not vary by more than 1% across an accepted cell; steep
    // cells get split regardless of the Simpson estimate.
    double ilo = c.a.invd, ihi = c.a.invd;
    for (const QNode* q : {&c.m, &c.b, &m1, &m2}) {
      ilo = std::fmin(ilo, q->invd);
      ihi = std::fmax(ihi, q->invd);
    }
    const bool steep = ihi > 1.01 * ilo;

    if (width < kWidthFloor ||
        (!steep && diff <= 15.0 * tol_density * width)) {
      total += sl + sr + (sl + sr - c.s) / 15.0;
      err += diff / 15.0;
      double nmax = c.a.noise;
      for (const QNode* q : {&c.m, &c.b, &m1, &m2})
        nmax = std::fmax(nmax, q->noise);
      noise += width * nmax;
      ++accepted;
    } else {
      stack.push_back({c.a, m1, c.m, sl, c.depth + 1});
      stack.push_back({c.m, m2, c.b, sr, c.depth + 1});
    }
  }

  const double err_total = err + noise;
  if (err > 100.0 * std::fmax(opts.quad_tol, 1e-8 * std::fabs(total)))
    throw QuadratureNotConverged(
        "derivative quadrature error failed to contract");

  DerivativeEstimate est;
  est.value = total;
  est.error_estimate = err_total;
  est.cells = accepted;
  est.method = "lemma_integral";
  return est;
}

double fd_default_step(const ParameterFamily& fam, const EngineOptions& opts) {
  if (opts.fd_step > 0.0) return opts.fd_step;
  if (!std::isnan(opts.t0_hint)) {
    const double gap = opts.t0_hint - fam.t;
    // Never step across the edge: cap at a quarter of the remaining gap.
    if (gap > 0.0) return std::fmin(gap / 4.0, std::fmax(1e-6, gap / 100.0));
  }
  return 1e-5;
}

DerivativeEstimate derivative_fd(const ParameterFamily& fam, double h,
                                 const EngineOptions& opts) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  if (!std::isnan(opts.t0_hint) && fam.t + h >= opts.t0_hint) {
    std::ostringstream msg;
    msg << "finite-difference step " << h << " crosses the edge estimate "
        << opts.t0_hint << " from t = " << fam.t;
    throw WindowViolation(msg.str());
  }

  auto le_at = [&](double t) -> LyapunovEstimate {
    const ParameterFamily shifted = fam.with_t(t);
    const BundlePair bp = compute_bundles(shifted, opts.grid_n, opts);
    const DifferenceField df = difference_field(shifted, bp, opts);
    return le_from_bundle(shifted, bp, &df, opts);
  };
  const LyapunovEstimate lp = le_at(fam.t + h);
  const LyapunovEstimate lm = le_at(fam.t - h);

  DerivativeEstimate est;
  est.value = (lp.value - lm.value) / (2.0 * h);
  est.method = "central_difference";
  // Truncation ~ h^2/6 |L'''|; for L ~ K sqrt(t0-t) that is
  // |L'| h^2 / (8 gap^2).  Without an edge hint assume unit curvature scale.
  double trunc;
  if (!std::isnan(opts.t0_hint)) {
    const double gap = std::fmax(opts.t0_hint - fam.t - h, h);
    trunc = std::fabs(est.value) * h * h / (8.0 * gap * gap);
  } else {
    trunc = std::fabs(est.value) * h * h;
  }
  est.error_estimate =
      (lp.error_estimate + lm.error_estimate) / (2.0 * h) + trunc;
  return est;
}

}  // namespace qplab
