// Lyapunov exponent and derivative tests against closed forms.
//
// Free family (V = 0) at energy E < -2, c = -E:
//   L(E)    = log((c + sqrt(c^2-4))/2)
//   q-integrals: r_u + r_s = c, r_u r_s = 1, d = sqrt(c^2-4), so
//     h-generator (1,0,0):  dL/dt =  c/d
//     e-generator (0,1,0):  dL/dt =  1/d
//     shear     (0,0,1):    dL/dt = -1/d
//   The shear folds into an energy shift, so dL/dt must also equal dL/dE.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qplab/errors.hpp"
#include "qplab/lyapunov.hpp"

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

double free_le(double c) { return std::log((c + std::sqrt(c * c - 4.0)) / 2.0); }

}  // namespace

TEST_CASE("norm growth reproduces the free-family closed form") {
  EngineOptions opts;
  opts.le_steps = 100000;
  const LyapunovEstimate a = le_norm_growth(free_family(-3.0), opts);
  CHECK(std::fabs(a.value - free_le(3.0)) < 1e-9);
  CHECK(a.error_estimate < 1e-8);

  const LyapunovEstimate b = le_norm_growth(free_family(-2.1), opts);
  CHECK(std::fabs(b.value - free_le(2.1)) < 1e-9);
}

TEST_CASE("norm growth of the identity cocycle is exactly zero") {
  ParameterFamily f;
  f.base = constant_cocycle(Mat2::identity(), Frequency::golden());
  EngineOptions opts;
  opts.le_steps = 5000;
  const LyapunovEstimate est = le_norm_growth(f, opts);
  CHECK(est.value == 0.0);
}

TEST_CASE("bundle integral matches the closed form and the growth route") {
  EngineOptions opts;
  opts.grid_n = 512;
  for (const double c : {3.0, 2.1}) {
    const ParameterFamily fam = free_family(-c);
    const BundlePair bp = compute_bundles(fam, opts.grid_n, opts);
    const DifferenceField df = difference_field(fam, bp, opts);
    const LyapunovEstimate est = le_from_bundle(fam, bp, &df, opts);
    CHECK(std::fabs(est.value - free_le(c)) < 1e-9);
    CHECK(est.value > 0.0);
  }
}

TEST_CASE("two Lyapunov routes agree on a theta-dependent family") {
  EngineOptions opts;
  opts.grid_n = 1024;
  opts.le_steps = 200000;
  const ParameterFamily fam = peaked_family(2.0, -4.0);

  const LyapunovEstimate ng = le_norm_growth(fam, opts);
  const BundlePair bp = compute_bundles(fam, opts.grid_n, opts);
  const DifferenceField df = difference_field(fam, bp, opts);
  const LyapunovEstimate bi = le_from_bundle(fam, bp, &df, opts);

  CHECK(ng.value > 0.5);  // strongly hyperbolic
  CHECK(bi.value > 0.5);
  CHECK(std::fabs(ng.value - bi.value) <
        5.0 * (ng.error_estimate + bi.error_estimate) + 1e-6);
}

TEST_CASE("lemma derivative: all three generators on the free family") {
  EngineOptions opts;
  opts.grid_n = 512;
  const ParameterFamily fam = free_family(-3.0);
  const BundlePair bp = compute_bundles(fam, opts.grid_n, opts);
  const DifferenceField df = difference_field(fam, bp, opts);
  const double d = std::sqrt(5.0);

  const DerivativeEstimate shear =
      derivative_lemma31(fam, bp, df, opts, ShearGenerator{0.0, 0.0, 1.0});
  CHECK(std::fabs(shear.value - (-1.0 / d)) < 1e-9);
  CHECK(shear.cells > 0);

  const DerivativeEstimate hgen =
      derivative_lemma31(fam, bp, df, opts, ShearGenerator{1.0, 0.0, 0.0});
  CHECK(std::fabs(hgen.value - (3.0 / d)) < 1e-9);

  const DerivativeEstimate egen =
      derivative_lemma31(fam, bp, df, opts, ShearGenerator{0.0, 1.0, 0.0});
  CHECK(std::fabs(egen.value - (1.0 / d)) < 1e-9);

  // Linear combination chosen to cancel: (0.9 - 0.2 - 0.7)/d = 0.
  const DerivativeEstimate mix =
      derivative_lemma31(fam, bp, df, opts, ShearGenerator{0.3, -0.2, 0.7});
  CHECK(std::fabs(mix.value) < 1e-9);
}

TEST_CASE("lemma derivative near the edge keeps the closed form") {
  EngineOptions opts;
  opts.grid_n = 512;
  const ParameterFamily fam = free_family(-2.05);
  const BundlePair bp = compute_bundles(fam, opts.grid_n, opts);
  const DifferenceField df = difference_field(fam, bp, opts);
  const DerivativeEstimate est = derivative_lemma31(fam, bp, df, opts);
  // d = sqrt(2.05^2 - 4) = 0.45 exactly.
  CHECK(std::fabs(est.value - (-1.0 / 0.45)) < 1e-8);
}

TEST_CASE("finite difference agrees with the lemma route") {
  EngineOptions opts;
  opts.grid_n = 512;
  const ParameterFamily fam = free_family(-3.0);
  const BundlePair bp = compute_bundles(fam, opts.grid_n, opts);
  const DifferenceField df = difference_field(fam, bp, opts);
  const DerivativeEstimate lem = derivative_lemma31(fam, bp, df, opts);
  const DerivativeEstimate fd = derivative_fd(fam, 1e-4, opts);
  CHECK(std::fabs(fd.value - lem.value) < 1e-6);
  // The shear is an exact energy shift, so dL/dt = dL/dE analytically.
  const double c = 3.0, d = std::sqrt(5.0);
  (void)c;
  CHECK(std::fabs(fd.value - (-1.0 / d)) < 1e-6);
}

TEST_CASE("finite difference respects the edge window") {
  EngineOptions opts;
  opts.grid_n = 512;
  opts.t0_hint = 1.0;  // base E=-3 becomes parabolic at t = 1
  const ParameterFamily fam = free_family(-3.0).with_t(0.9995);
  CHECK_THROWS_AS(derivative_fd(fam, 1e-3, opts), WindowViolation);

  // Default step: gap/100 under the hint, floored at 1e-6, but never more
  // than a quarter of the remaining gap.
  const ParameterFamily mid = free_family(-3.0).with_t(0.9);
  CHECK(fd_default_step(mid, opts) == doctest::Approx(1e-3));
  const ParameterFamily close = free_family(-3.0).with_t(1.0 - 2e-6);
  CHECK(fd_default_step(close, opts) == doctest::Approx(5e-7));
  EngineOptions fixed = opts;
  fixed.fd_step = 2e-5;
  CHECK(fd_default_step(mid, fixed) == 2e-5);
}

TEST_CASE("derivative routes agree on a theta-dependent family") {
  EngineOptions opts;
  opts.grid_n = 1024;
  const ParameterFamily fam = peaked_family(2.0, -4.0);
  const BundlePair bp = compute_bundles(fam, opts.grid_n, opts);
  const DifferenceField df = difference_field(fam, bp, opts);
  const DerivativeEstimate lem = derivative_lemma31(fam, bp, df, opts);
  const DerivativeEstimate fd = derivative_fd(fam, 1e-4, opts);
  CHECK(std::fabs(fd.value - lem.value) <
        3.0 * (fd.error_estimate + lem.error_estimate) + 1e-6);
  // Below the edge the exponent decreases along the shear.
  CHECK(lem.value < 0.0);
}

TEST_CASE("vanishing unstable stretch is a domain error") {
  // Hand-built bundle whose r_u makes lambda_1 = a21 r_u + a22 = 0.
  ParameterFamily f;
  f.base = constant_cocycle(Mat2{0.0, -1.0, 1.0, 0.0}, Frequency::golden());
  BundlePair bp;
  const int n = 16;
  for (int i = 0; i < n; ++i) {
    bp.grid.push_back(static_cast<double>(i) / n);
    bp.r_u.push_back(0.0);  // lambda_1 = 1 * 0 + 0
    bp.r_s.push_back(-1.0);
    bp.n_u.push_back(64);
    bp.n_s.push_back(64);
  }
  EngineOptions opts;
  CHECK_THROWS_AS(le_from_bundle(f, bp, nullptr, opts), DomainError);
}

TEST_CASE("folded families give bitwise-equal exponents") {
  EngineOptions opts;
  opts.le_steps = 20000;
  const LyapunovEstimate a = le_norm_growth(free_family(-3.0).with_t(0.5), opts);
  const LyapunovEstimate b = le_norm_growth(free_family(-2.5), opts);
  CHECK(a.value == b.value);
}
