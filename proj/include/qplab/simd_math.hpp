// Vector-friendly sin(pi x), cos(pi x) and trig-polynomial evaluation.
// Range reduction y = x - nearest_int(x) keeps |y| <= 1/2 exactly; the Taylor
// tails below truncate at ~5e-21 there, so accuracy is a couple of ulps.
// Both kernel backends and the scalar module code share these templates, so
// potentials evaluate bit-identically everywhere.
#pragma once

#include "qplab/simd.hpp"

namespace qplab::simd {

// sin(pi y) = sum s_k y^(2k+1), coefficients rounded from higher precision.
inline constexpr double kSinPiCoef[12] = {
    0x1.921fb54442d18p+1,   -0x1.4abbce625be53p+2,  0x1.466bc6775aae2p+1,
    -0x1.32d2cce62bd86p-1,  0x1.50783487ee782p-4,   -0x1.e3074fde8871fp-8,
    0x1.e8f434d018d63p-12,  -0x1.6fadb9f155744p-16, 0x1.aaec32af93359p-21,
    -0x1.8a404211f9547p-26, 0x1.2877020d52cf0p-31,  -0x1.7215f879e1ac9p-37};

// cos(pi y) = sum c_k y^(2k).
inline constexpr double kCosPiCoef[13] = {
    0x1.0000000000000p+0,   -0x1.3bd3cc9be45dep+2,  0x1.03c1f081b5ac4p+2,
    -0x1.55d3c7e3cbffap+0,  0x1.e1f506891babbp-3,   -0x1.a6d1f2a204a8cp-6,
    0x1.f9d38a3763cc3p-10,  -0x1.b6e24f44b128fp-14, 0x1.20c62c2f2d7f5p-18,
    -0x1.2a0c591af8314p-23, 0x1.ef6e308d6d1c4p-29,  -0x1.52ae4120fde27p-34,
    0x1.838d8f4321800p-40};

// (-1)^n for integer-valued n, branchless and exact: frac(n/2) is 0 or 1/2.
template <class VT>
inline typename VT::D parity_sign(typename VT::D n) {
  auto half = n * VT::broadcast(0.5);
  auto fr = half - vfloor(half);
  return vfma(fr, VT::broadcast(-4.0), VT::broadcast(1.0));
}

template <class VT>
inline typename VT::D sinpi(typename VT::D x) {
  auto n = vround(x);
  auto y = x - n;
  auto z = y * y;
  auto acc = VT::broadcast(kSinPiCoef[11]);
  for (int k = 10; k >= 0; --k) acc = vfma(acc, z, VT::broadcast(kSinPiCoef[k]));
  return (y * acc) * parity_sign<VT>(n);
}

template <class VT>
inline typename VT::D cospi(typename VT::D x) {
  auto n = vround(x);
  auto y = x - n;
  auto z = y * y;
  auto acc = VT::broadcast(kCosPiCoef[12]);
  for (int k = 11; k >= 0; --k) acc = vfma(acc, z, VT::broadcast(kCosPiCoef[k]));
  return acc * parity_sign<VT>(n);
}

// c0 + sum_m ccos[m] cos(2 pi m theta) + sum_m csin[m-1] sin(2 pi m theta),
// harmonics by the angle-addition recurrence in fixed order.
template <class VT>
inline typename VT::D trigpoly_eval(typename VT::D theta, const double* ccos,
                                    int ncos, const double* csin, int nsin) {
  auto acc = VT::broadcast(ncos > 0 ? ccos[0] : 0.0);
  int maxm = ncos - 1 > nsin ? ncos - 1 : nsin;
  if (maxm < 1) return acc;
  auto c1 = cospi<VT>(theta + theta);
  auto s1 = sinpi<VT>(theta + theta);
  auto cm = c1, sm = s1;
  for (int m = 1; m <= maxm; ++m) {
    if (m > 1) {
      auto cn = vfms(cm, c1, sm * s1);
      auto sn = vfma(sm, c1, cm * s1);
      cm = cn;
      sm = sn;
    }
    if (m < ncos) acc = vfma(VT::broadcast(ccos[m]), cm, acc);
    if (m <= nsin) acc = vfma(VT::broadcast(csin[m - 1]), sm, acc);
  }
  return acc;
}

}  // namespace qplab::simd
