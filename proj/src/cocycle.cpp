#include "qplab/cocycle.hpp"

#include <algorithm>
#include <cmath>

#include "qplab/errors.hpp"
#include "qplab/simd_math.hpp"

namespace qplab {

using simd::ScalarVT;

double TrigPoly::eval(double theta) const {
  return simd::trigpoly_eval<ScalarVT>(theta, ccos.data(),
                                       static_cast<int>(ccos.size()),
                                       csin.data(),
                                       static_cast<int>(csin.size()));
}

bool TrigPoly::is_constant() const {
  for (std::size_t m = 1; m < ccos.size(); ++m)
    if (ccos[m] != 0.0) return false;
  for (double s : csin)
    if (s != 0.0) return false;
  return true;
}

TrigPoly TrigPoly::axpy(double a, const TrigPoly& y) const {
  TrigPoly out = *this;
  out.ccos.resize(std::max(ccos.size(), y.ccos.size()), 0.0);
  out.csin.resize(std::max(csin.size(), y.csin.size()), 0.0);
  for (std::size_t m = 0; m < y.ccos.size(); ++m)
    out.ccos[m] += a * y.ccos[m];
  for (std::size_t m = 0; m < y.csin.size(); ++m)
    out.csin[m] += a * y.csin[m];
  return out;
}

Potential Potential::cosine(double lambda) {
  Potential p;
  p.kind = PotentialKind::cosine;
  p.lambda = lambda;
  return p;
}

Potential Potential::peaked(double lambda) {
  Potential p;
  p.kind = PotentialKind::peaked;
  p.lambda = lambda;
  return p;
}

Potential Potential::trig(TrigPoly poly) {
  Potential p;
  p.kind = PotentialKind::trigpoly;
  p.poly = std::move(poly);
  return p;
}

double Potential::operator()(double theta) const {
  switch (kind) {
    case PotentialKind::zero:
      return 0.0;
    case PotentialKind::cosine:
      return lambda * simd::cospi<ScalarVT>(theta + theta);
    case PotentialKind::peaked: {
      double s = simd::sinpi<ScalarVT>(theta);
      double ls = lambda * s;
      return 1.0 / simd::vfma(ls, ls, 1.0);
    }
    case PotentialKind::trigpoly:
      return poly.eval(theta);
  }
  return 0.0;
}

double Potential::min_value() const {
  switch (kind) {
    case PotentialKind::zero:
      return 0.0;
    case PotentialKind::cosine:
      return -std::fabs(lambda);
    case PotentialKind::peaked:
      return 1.0 / (1.0 + lambda * lambda);
    case PotentialKind::trigpoly: {
      // Sampled minimum; callers use it only for safe bracketing.
      double m = poly.eval(0.0);
      for (int i = 1; i < 8192; ++i)
        m = std::fmin(m, poly.eval(i / 8192.0));
      return m;
    }
  }
  return 0.0;
}

Mat2 CocycleMap::evaluate(double theta) const {
  theta = reduce_mod1(theta);
  switch (kind) {
    case CocycleKind::schrodinger:
      return {pot(theta) - energy, -1.0, 1.0, 0.0};
    case CocycleKind::constant_matrix:
      return cmat;
    case CocycleKind::trigpoly_entries:
      return {entries[0].eval(theta), entries[1].eval(theta),
              entries[2].eval(theta), entries[3].eval(theta)};
  }
  return Mat2::identity();
}

CocycleMap CocycleMap::compose_shear(double s) const {
  CocycleMap out = *this;
  switch (kind) {
    case CocycleKind::schrodinger:
      // A_E * e^{sw} has first column (V-E-s, 1): exactly A_{E+s}.
      out.energy = energy + s;
      break;
    case CocycleKind::constant_matrix:
      out.cmat.a11 = cmat.a11 + s * cmat.a12;
      out.cmat.a21 = cmat.a21 + s * cmat.a22;
      break;
    case CocycleKind::trigpoly_entries:
      out.entries[0] = entries[0].axpy(s, entries[1]);
      out.entries[2] = entries[2].axpy(s, entries[3]);
      break;
  }
  return out;
}

CocycleMap schrodinger_cocycle(const Potential& V, double E,
                               const Frequency& omega) {
  CocycleMap m;
  m.kind = CocycleKind::schrodinger;
  m.freq = omega;
  m.pot = V;
  m.energy = E;
  return m;
}

CocycleMap constant_cocycle(const Mat2& A, const Frequency& omega) {
  CocycleMap m;
  m.kind = CocycleKind::constant_matrix;
  m.freq = omega;
  m.cmat = A;
  return m;
}

CocycleMap trigpoly_cocycle(const std::array<TrigPoly, 4>& entries,
                            const Frequency& omega) {
  CocycleMap m;
  m.kind = CocycleKind::trigpoly_entries;
  m.freq = omega;
  m.entries = entries;
  return m;
}

Mat2 iterate_product(const ParameterFamily& F, double theta, long long n) {
  if (n < 0) throw DomainError("iterate_product: n must be >= 0");
  CocycleMap map = F.folded();
  double omega = F.omega();
  Mat2 prod = Mat2::identity();
  double th = reduce_mod1(theta);
  for (long long k = 0; k < n; ++k) {
    prod = map.evaluate(th) * prod;
    th = reduce_mod1(th + omega);
  }
  return prod;
}

ScaledMat2 iterate_product_scaled(const ParameterFamily& F, double theta,
                                  long long n) {
  if (n < 0) throw DomainError("iterate_product: n must be >= 0");
  CocycleMap map = F.folded();
  double omega = F.omega();
  ScaledMat2 out;
  double th = reduce_mod1(theta);
  for (long long k = 0; k < n; ++k) {
    out.m = map.evaluate(th) * out.m;
    double mx = out.m.max_abs();
    if (mx > 0.0 && std::isfinite(mx)) {
      std::int64_t e = 0;
      double scale = simd::ScalarVT::renorm_scale_acc(mx, e);
      out.m.a11 *= scale;
      out.m.a12 *= scale;
      out.m.a21 *= scale;
      out.m.a22 *= scale;
      out.log2_scale += e;
    }
    th = reduce_mod1(th + omega);
  }
  return out;
}

}  // namespace qplab
