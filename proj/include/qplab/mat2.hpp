// 2x2 real matrices. Everything the engine multiplies is (numerically) in
// SL(2,R), so the inverse is the adjugate divided by the reported det.
#pragma once

#include <cmath>

namespace qplab {

struct Mat2 {
  double a11 = 1.0, a12 = 0.0;
  double a21 = 0.0, a22 = 1.0;

  static Mat2 identity() { return {}; }

  double det() const { return a11 * a22 - a12 * a21; }
  double trace() const { return a11 + a22; }

  Mat2 operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }

  Mat2 inverse() const {
    double d = det();
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }

  double max_abs() const {
    return std::fmax(std::fmax(std::fabs(a11), std::fabs(a12)),
                     std::fmax(std::fabs(a21), std::fabs(a22)));
  }
};

// e^{tw} for the nilpotent shear generator w = [[0,0],[1,0]] (w^2 = 0).
inline Mat2 shear_exp(double t) { return {1.0, 0.0, t, 1.0}; }

}  // namespace qplab
