// Quasi-periodic cocycle maps theta -> A(theta) over a fixed catalog
// (Schrodinger with a catalog potential, constant matrix, trig-polynomial
// entries) and the shear family A_t = A e^{tw}. Families evaluate in folded
// form: the shear is absorbed into the map's coefficients before any matrix
// arithmetic, which makes the composition law with shear_exp exact.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qplab/frequency.hpp"
#include "qplab/mat2.hpp"
#include "qplab/torus.hpp"

namespace qplab {

// c0 + sum_m ccos[m] cos(2 pi m theta) + sum_m csin[m-1] sin(2 pi m theta).
struct TrigPoly {
  std::vector<double> ccos;  // index m = harmonic; ccos[0] is the constant
  std::vector<double> csin;  // csin[m-1] multiplies sin(2 pi m theta)

  static TrigPoly constant(double c) { return {{c}, {}}; }
  double eval(double theta) const;
  bool is_constant() const;
  TrigPoly axpy(double a, const TrigPoly& y) const;  // this + a*y
};

enum class PotentialKind { zero, cosine, peaked, trigpoly };

struct Potential {
  PotentialKind kind = PotentialKind::zero;
  double lambda = 0.0;  // coupling for cosine/peaked
  TrigPoly poly;        // trigpoly only

  static Potential zero() { return {}; }
  static Potential cosine(double lambda);
  static Potential peaked(double lambda);
  static Potential trig(TrigPoly p);

  // cosine: lambda*cos(2 pi theta); peaked: 1/(1 + lambda^2 sin^2(pi theta)).
  double operator()(double theta) const;
  double min_value() const;  // exact for zero/cosine/peaked, sampled for trig
};

enum class CocycleKind { schrodinger, constant_matrix, trigpoly_entries };

struct CocycleMap {
  CocycleKind kind = CocycleKind::constant_matrix;
  Frequency freq;
  // schrodinger
  Potential pot;
  double energy = 0.0;
  // constant_matrix
  Mat2 cmat = Mat2::identity();
  // trigpoly_entries, row-major order e11, e12, e21, e22
  std::array<TrigPoly, 4> entries{};

  Mat2 evaluate(double theta) const;
  // The map theta -> evaluate(theta) * shear_exp(s), folded so no matrix
  // product is performed: Schrodinger shifts energy by s exactly; the other
  // kinds fold column 2 into column 1.
  CocycleMap compose_shear(double s) const;
};

CocycleMap schrodinger_cocycle(const Potential& V, double E,
                               const Frequency& omega);
CocycleMap constant_cocycle(const Mat2& A, const Frequency& omega);
CocycleMap trigpoly_cocycle(const std::array<TrigPoly, 4>& entries,
                            const Frequency& omega);

// A_t = base * e^{tw}, w = [[0,0],[1,0]]. validity_window is the candidate
// (t_lo, t_hi) interval for (t0 - eps, t0); 0 window means unset.
struct ParameterFamily {
  CocycleMap base;
  double t = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;

  double omega() const { return base.freq.value(); }
  CocycleMap folded() const { return base.compose_shear(t); }
  Mat2 at(double theta) const { return folded().evaluate(theta); }
  ParameterFamily with_t(double nt) const {
    ParameterFamily f = *this;
    f.t = nt;
    return f;
  }
};

// Ordered product A_t(theta+(n-1)w) ... A_t(theta); n = 0 is the identity.
Mat2 iterate_product(const ParameterFamily& F, double theta, long long n);

// Overflow-safe variant: product = m * 2^log2_scale with m kept near unit
// magnitude by exact power-of-two renormalization.
struct ScaledMat2 {
  Mat2 m;
  std::int64_t log2_scale = 0;
};
ScaledMat2 iterate_product_scaled(const ParameterFamily& F, double theta,
                                  long long n);

}  // namespace qplab
