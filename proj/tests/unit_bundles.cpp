// Invariant slope field tests against exactly solvable families.
//
// For a theta-independent Schrodinger map at energy E < -2 the transfer
// matrix has rows (c, -1), (1, 0) with c = -E, and the slope fields are the
// fixed points of r -> c - 1/r: the roots of r^2 - c r + 1 = 0,
//   r_u = (c + sqrt(c^2-4))/2,  r_s = (c - sqrt(c^2-4))/2,
// so d = r_u - r_s = sqrt(c^2 - 4) everywhere and r_u * r_s = 1.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qplab/bundles.hpp"
#include "qplab/errors.hpp"

using namespace qplab;

namespace {

ParameterFamily free_family(double energy) {
  ParameterFamily f;
  f.base = schrodinger_cocycle(Potential::zero(), energy, Frequency::golden());
  return f;
}

ParameterFamily peaked_family(double lambda, double energy) {
  ParameterFamily f;
  f.base =
      schrodinger_cocycle(Potential::peaked(lambda), energy, Frequency::golden());
  return f;
}

}  // namespace

TEST_CASE("free family slopes match the quadratic fixed points") {
  const EngineOptions opts;
  const BundlePair bp = compute_bundles(free_family(-3.0), 64, opts);

  const double ru = (3.0 + std::sqrt(5.0)) / 2.0;
  const double rs = (3.0 - std::sqrt(5.0)) / 2.0;
  for (std::size_t i = 0; i < bp.grid.size(); ++i) {
    CHECK(bp.r_u[i] == doctest::Approx(ru).epsilon(1e-12));
    CHECK(bp.r_s[i] == doctest::Approx(rs).epsilon(1e-12));
  }
  // 1/r_s = r_u here, so the cone constant is r_u itself.
  CHECK(bp.cone_constant == doctest::Approx(ru).epsilon(1e-12));
  CHECK(bp.residual_u < 1e-8);
  CHECK(bp.residual_s < 1e-8);
  CHECK(bp.decay_rate < 1.0);

  // theta-independent map: the field is grid-constant to the bit.
  for (std::size_t i = 1; i < bp.grid.size(); ++i) {
    CHECK(bp.r_u[i] == bp.r_u[0]);
    CHECK(bp.r_s[i] == bp.r_s[0]);
  }
}

TEST_CASE("free family near the edge: d = sqrt(E^2-4) and flat field flags") {
  const EngineOptions opts;
  const ParameterFamily fam = free_family(-2.01);
  const BundlePair bp = compute_bundles(fam, 64, opts);
  const DifferenceField df = difference_field(fam, bp, opts);

  const double d_exact = std::sqrt(2.01 * 2.01 - 4.0);  // 0.200249843945...
  CHECK(df.d_min == doctest::Approx(d_exact).epsilon(1e-9));
  for (const double d : df.d) CHECK(d == doctest::Approx(d_exact).epsilon(1e-9));
  // Constant field: no isolated minimizer.
  CHECK(df.multiple_minima);
  CHECK(df.second_min_ratio == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(df.mesh_theta.size() == df.mesh_ru.size());
  CHECK(df.mesh_theta.size() >= 5);
  for (std::size_t i = 0; i < df.mesh_theta.size(); ++i)
    CHECK(df.mesh_ru[i] - df.mesh_rs[i] >= df.d_min * (1.0 - 1e-12));
}

TEST_CASE("elliptic energies are rejected") {
  EngineOptions opts;
  opts.iteration_cap = 20000;

  // E=-1: trace 1, rotation by pi/3; the slope orbit has period 6, which
  // never aliases the doubling ladder, so the residual stays O(1) or inf.
  const BundleStatus st1 = try_compute_bundles(free_family(-1.0), 64, opts);
  CHECK_FALSE(st1.converged);
  CHECK(st1.failure == "non_convergence");
  CHECK_FALSE(st1.improving);
  CHECK(st1.unconverged_points > 0);
  CHECK_THROWS_AS(compute_bundles(free_family(-1.0), 64, opts), NonConvergence);

  // E=-0.5: irrational rotation; residuals plateau and the ladder bails.
  const BundleStatus st2 = try_compute_bundles(free_family(-0.5), 64, opts);
  CHECK_FALSE(st2.converged);
  CHECK(st2.failure == "non_convergence");

  // E=0: rotation by pi/2 whose slope orbit has period 2; every power-of-two
  // iterate returns the seed, so both ladders alias to the same value and
  // the defect is caught by the ordering check instead.
  const BundleStatus st3 = try_compute_bundles(free_family(0.0), 64, opts);
  CHECK_FALSE(st3.converged);
  CHECK(st3.failure == "ordering_violation");
  CHECK_THROWS_AS(compute_bundles(free_family(0.0), 64, opts), ConeViolation);
}

TEST_CASE("converged slopes do not depend on the seed") {
  EngineOptions a;
  a.seed_slope = 1.0;
  EngineOptions b;
  b.seed_slope = 7.5;
  const ParameterFamily fam = free_family(-2.01);
  const BundlePair pa = compute_bundles(fam, 64, a);
  const BundlePair pb = compute_bundles(fam, 64, b);
  for (std::size_t i = 0; i < pa.grid.size(); ++i) {
    CHECK(std::fabs(pa.r_u[i] - pb.r_u[i]) < 1e-10);
    CHECK(std::fabs(pa.r_s[i] - pb.r_s[i]) < 1e-10);
  }
}

TEST_CASE("direction residual shrinks with n and brackets the truth") {
  const ParameterFamily fam = free_family(-2.5);
  const double ru_exact = (2.5 + std::sqrt(2.25)) / 2.0;  // c=2.5, d=1.5
  const DirectionResult a = unstable_direction(fam, 0.3, 64, 1.0);
  const DirectionResult b = unstable_direction(fam, 0.3, 256, 1.0);
  CHECK_FALSE(a.slope.infinite);
  CHECK(b.residual <= a.residual);
  CHECK(std::fabs(b.slope.r - ru_exact) < 1e-9);

  const double rs_exact = (2.5 - std::sqrt(2.25)) / 2.0;
  const DirectionResult s = stable_direction(fam, 0.3, 256, 1.0);
  CHECK(std::fabs(s.slope.r - rs_exact) < 1e-9);
}

TEST_CASE("peaked potential: theta-dependent field with a clean minimum") {
  EngineOptions opts;
  const ParameterFamily fam = peaked_family(2.0, -4.0);
  const BundlePair bp = compute_bundles(fam, 1024, opts);

  CHECK(bp.residual_u < 1e-8);
  CHECK(bp.residual_s < 1e-8);
  CHECK(bp.decay_rate < 1.0);
  CHECK(bp.cone_constant > 1.0);

  const DifferenceField df = difference_field(fam, bp, opts);
  CHECK_FALSE(df.multiple_minima);
  CHECK(df.second_min_ratio == 0.0);
  // The unstable slope at theta is set by the matrices at theta - w,
  // theta - 2w, ..., and its variation dominates the stable slope's
  // (r_u ~ c vs r_s ~ 1/c), so the dip of d sits one backward rotation
  // step past the trace minimum at 1/2: theta_c = 1/2 + w mod 1.
  const double omega = fam.omega();
  CHECK(std::fabs(df.theta_c - (0.5 + omega - 1.0)) < 0.02);
  double dmax = 0.0;
  for (const double d : df.d) dmax = std::fmax(dmax, d);
  CHECK(dmax - df.d_min > 0.01);
  CHECK(df.d_min > 0.0);
  // Orbit mixing smooths the field, so d_min lands near but not exactly on
  // the pointwise fixed-slope envelope min sqrt(c_min^2-4) ~ 3.69; only the
  // envelope max sqrt(c_max^2-4) = sqrt(21) is a generous safe ceiling.
  CHECK(df.d_min > 1.0);
  CHECK(df.d_min < std::sqrt(21.0));
}

TEST_CASE("pair evaluator is deterministic and cached") {
  EngineOptions opts;
  const ParameterFamily fam = peaked_family(2.0, -4.0);
  PairEvaluator ev1(fam, opts, 256);
  PairEvaluator ev2(fam, opts, 256);
  const auto p1 = ev1.eval(0.37);
  const auto p1again = ev1.eval(0.37);
  const auto p2 = ev2.eval(0.37);
  CHECK(p1.r_u == p1again.r_u);
  CHECK(p1.r_s == p1again.r_s);
  CHECK(p1.r_u == p2.r_u);
  CHECK(p1.r_s == p2.r_s);
  CHECK(p1.d == p1.r_u - p1.r_s);

  const auto batch = ev2.eval_batch({0.37, 0.11});
  CHECK(batch[0].r_u == p1.r_u);
}

TEST_CASE("growth ratios telescope") {
  EngineOptions opts;
  const ParameterFamily fam = peaked_family(2.0, -4.0);
  PairEvaluator ev(fam, opts, 256);

  const double theta = 0.123;
  const double direct = growth_ratio(ev, theta, 0, 5);
  double prod = 1.0;
  for (long long m = 0; m < 5; ++m) prod *= growth_ratio(ev, theta, m, m + 1);
  CHECK(direct == doctest::Approx(prod).epsilon(1e-10));

  const double split = growth_ratio(ev, theta, -2, 0) * growth_ratio(ev, theta, 0, 3);
  CHECK(growth_ratio(ev, theta, -2, 3) == doctest::Approx(split).epsilon(1e-10));

  CHECK_THROWS_AS(growth_ratio(ev, theta, 3, 1), DomainError);
}

TEST_CASE("mobius action basics") {
  const Mat2 id = Mat2::identity();
  const Slope s = mobius_apply(id, Slope::finite(2.5));
  CHECK_FALSE(s.infinite);
  CHECK(s.r == 2.5);

  // Rotation by pi/2 sends infinity to 0 and 0 to infinity.
  const Mat2 rot{0.0, -1.0, 1.0, 0.0};
  const Slope a = mobius_apply(rot, Slope::at_infinity());
  CHECK_FALSE(a.infinite);
  CHECK(a.r == 0.0);
  const Slope b = mobius_apply(rot, Slope::finite(0.0));
  CHECK(b.infinite);

  // Fixed point of the free map: r_u -> r_u.
  const double ru = (3.0 + std::sqrt(5.0)) / 2.0;
  const Mat2 fm{3.0, -1.0, 1.0, 0.0};
  CHECK(mobius_apply(fm, Slope::finite(ru)).r == doctest::Approx(ru).epsilon(1e-15));
}
