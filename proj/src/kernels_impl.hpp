// Shared kernel bodies, templated over the lane type VT. Included by exactly
// the backend TUs (scalar, avx2). Numerical contract: identical operation
// sequence per lane in every instantiation, fused ops spelled explicitly,
// renormalization only by exact powers of two, so backends agree bitwise.
#pragma once

#include <cmath>

#include "qplab/kernels.hpp"
#include "qplab/simd_math.hpp"

namespace qplab::kernels {

template <class VT>
struct KernelImpl {
  using D = typename VT::D;
  using I = typename VT::I;
  static constexpr int W = VT::width;

  template <int POT>
  static D pot(const FamilyPod& f, D th) {
    if constexpr (POT == kPotZero) {
      (void)f;
      (void)th;
      return VT::broadcast(0.0);
    } else if constexpr (POT == kPotCosine) {
      return VT::broadcast(f.lambda) * simd::cospi<VT>(th + th);
    } else if constexpr (POT == kPotPeaked) {
      D s = simd::sinpi<VT>(th);
      D ls = VT::broadcast(f.lambda) * s;
      return VT::broadcast(1.0) / simd::vfma(ls, ls, VT::broadcast(1.0));
    } else {
      return simd::trigpoly_eval<VT>(th, f.pot_cos, f.pot_ncos, f.pot_sin,
                                     f.pot_nsin);
    }
  }

  // Four trig-poly entries sharing one harmonic recurrence.
  static void entries4(const FamilyPod& f, D th, D e[4]) {
    int maxm = 0;
    for (int j = 0; j < 4; ++j) {
      if (f.ent_ncos[j] - 1 > maxm) maxm = f.ent_ncos[j] - 1;
      if (f.ent_nsin[j] > maxm) maxm = f.ent_nsin[j];
    }
    for (int j = 0; j < 4; ++j)
      e[j] = VT::broadcast(f.ent_ncos[j] > 0 ? f.ent_cos[j][0] : 0.0);
    if (maxm < 1) return;
    D c1 = simd::cospi<VT>(th + th);
    D s1 = simd::sinpi<VT>(th + th);
    D cm = c1, sm = s1;
    for (int m = 1; m <= maxm; ++m) {
      if (m > 1) {
        D cn = simd::vfms(cm, c1, sm * s1);
        D sn = simd::vfma(sm, c1, cm * s1);
        cm = cn;
        sm = sn;
      }
      for (int j = 0; j < 4; ++j) {
        if (m < f.ent_ncos[j])
          e[j] = simd::vfma(VT::broadcast(f.ent_cos[j][m]), cm, e[j]);
        if (m <= f.ent_nsin[j])
          e[j] = simd::vfma(VT::broadcast(f.ent_sin[j][m - 1]), sm, e[j]);
      }
    }
  }

  // One projective step on homogeneous (u, v). KIND selects the matrix,
  // direction the adjugate (det factors are projectively irrelevant).
  template <int KIND, int POT, bool FWD>
  static void step(const FamilyPod& f, D th, D& u, D& v) {
    if constexpr (KIND == kKindSchrodinger) {
      D c = pot<POT>(f, th) - VT::broadcast(f.energy);
      if constexpr (FWD) {
        // A = [c, -1; 1, 0]
        D nu = simd::vfms(c, u, v);
        v = u;
        u = nu;
      } else {
        // adj(A) = [0, 1; -1, c]
        D nv = simd::vfms(c, v, u);
        u = v;
        v = nv;
      }
    } else {
      D a11, a12, a21, a22;
      if constexpr (KIND == kKindConstant) {
        a11 = VT::broadcast(f.cmat[0]);
        a12 = VT::broadcast(f.cmat[1]);
        a21 = VT::broadcast(f.cmat[2]);
        a22 = VT::broadcast(f.cmat[3]);
      } else {
        D e[4];
        entries4(f, th, e);
        a11 = e[0];
        a12 = e[1];
        a21 = e[2];
        a22 = e[3];
      }
      if constexpr (FWD) {
        D nu = simd::vfma(a11, u, a12 * v);
        D nv = simd::vfma(a21, u, a22 * v);
        u = nu;
        v = nv;
      } else {
        // adj(A) = [a22, -a12; -a21, a11]
        D nu = simd::vfms(a22, u, a12 * v);
        D nv = simd::vfms(a11, v, a21 * u);
        u = nu;
        v = nv;
      }
    }
  }

  static void renorm(D& u, D& v) {
    D m = simd::vmax(simd::vabs(u), simd::vabs(v));
    D s = VT::renorm_scale(m);
    u = u * s;
    v = v * s;
  }

  static void renorm_acc(D& u, D& v, I& e) {
    D m = simd::vmax(simd::vabs(u), simd::vabs(v));
    D s = VT::renorm_scale_acc(m, e);
    u = u * s;
    v = v * s;
  }

  template <int KIND, int POT>
  static void slope_orbit_loop(const FamilyPod& f, const double* theta,
                               int count, long long n, double seed,
                               int direction, double* r_out) {
    D om = VT::broadcast(f.omega);
    for (int base = 0; base < count; base += W) {
      int m = count - base < W ? count - base : W;
      double tbuf[W];
      for (int i = 0; i < W; ++i)
        tbuf[i] = theta[base + (i < m ? i : m - 1)];
      D th_end = VT::load(tbuf);
      D u = VT::broadcast(seed);
      D v = VT::broadcast(1.0);
      D th;
      if (direction == kForward) {
        th = th_end - VT::broadcast(static_cast<double>(n) * f.omega);
        th = th - simd::vfloor(th);
        for (long long k = 0; k < n; ++k) {
          step<KIND, POT, true>(f, th, u, v);
          renorm(u, v);
          th = th + om;
          th = th - simd::vfloor(th);
        }
      } else {
        th = th_end + VT::broadcast(static_cast<double>(n - 1) * f.omega);
        th = th - simd::vfloor(th);
        for (long long k = 0; k < n; ++k) {
          step<KIND, POT, false>(f, th, u, v);
          renorm(u, v);
          th = th - om;
          th = th - simd::vfloor(th);
        }
      }
      double rbuf[W];
      VT::store(rbuf, u / v);
      for (int i = 0; i < m; ++i) r_out[base + i] = rbuf[i];
    }
  }

  template <int KIND, int POT>
  static void norm_growth_loop(const FamilyPod& f, const double* theta0,
                               int count, long long burn_in, long long n,
                               double* le_out) {
    D om = VT::broadcast(f.omega);
    for (int base = 0; base < count; base += W) {
      int m = count - base < W ? count - base : W;
      double tbuf[W];
      for (int i = 0; i < W; ++i)
        tbuf[i] = theta0[base + (i < m ? i : m - 1)];
      D th = VT::load(tbuf);
      th = th - simd::vfloor(th);
      D u = VT::broadcast(1.0);
      D v = VT::broadcast(0.0);
      for (long long k = 0; k < burn_in; ++k) {
        step<KIND, POT, true>(f, th, u, v);
        renorm(u, v);
        th = th + om;
        th = th - simd::vfloor(th);
      }
      I e = VT::izero();
      double n0buf[W], n1buf[W];
      VT::store(n0buf, simd::vsqrt(simd::vfma(u, u, v * v)));
      for (long long k = 0; k < n; ++k) {
        step<KIND, POT, true>(f, th, u, v);
        renorm_acc(u, v, e);
        th = th + om;
        th = th - simd::vfloor(th);
      }
      VT::store(n1buf, simd::vsqrt(simd::vfma(u, u, v * v)));
      std::int64_t ebuf[W];
      VT::istore(ebuf, e);
      for (int i = 0; i < m; ++i) {
        double le = (static_cast<double>(ebuf[i]) * 0x1.62e42fefa39efp-1 +
                     (std::log(n1buf[i]) - std::log(n0buf[i]))) /
                    static_cast<double>(n);
        le_out[base + i] = le;
      }
    }
  }

  template <int POT>
  static void potential_eval_loop(const FamilyPod& f, const double* theta,
                                  int count, double* v_out) {
    for (int base = 0; base < count; base += W) {
      int m = count - base < W ? count - base : W;
      double tbuf[W];
      for (int i = 0; i < W; ++i)
        tbuf[i] = theta[base + (i < m ? i : m - 1)];
      D th = VT::load(tbuf);
      double obuf[W];
      VT::store(obuf, pot<POT>(f, th));
      for (int i = 0; i < m; ++i) v_out[base + i] = obuf[i];
    }
  }

  static void slope_orbit(const FamilyPod& f, const double* theta, int count,
                          long long n, double seed, int direction,
                          double* r_out) {
    if (count <= 0 || n <= 0) return;
    switch (f.kind) {
      case kKindSchrodinger:
        switch (f.pot_kind) {
          case kPotZero:
            return slope_orbit_loop<kKindSchrodinger, kPotZero>(
                f, theta, count, n, seed, direction, r_out);
          case kPotCosine:
            return slope_orbit_loop<kKindSchrodinger, kPotCosine>(
                f, theta, count, n, seed, direction, r_out);
          case kPotPeaked:
            return slope_orbit_loop<kKindSchrodinger, kPotPeaked>(
                f, theta, count, n, seed, direction, r_out);
          default:
            return slope_orbit_loop<kKindSchrodinger, kPotTrigpoly>(
                f, theta, count, n, seed, direction, r_out);
        }
      case kKindConstant:
        return slope_orbit_loop<kKindConstant, kPotZero>(f, theta, count, n,
                                                         seed, direction,
                                                         r_out);
      default:
        return slope_orbit_loop<kKindTrigpoly, kPotZero>(f, theta, count, n,
                                                         seed, direction,
                                                         r_out);
    }
  }

  static void norm_growth(const FamilyPod& f, const double* theta0, int count,
                          long long burn_in, long long n, double* le_out) {
    if (count <= 0 || n <= 0) return;
    switch (f.kind) {
      case kKindSchrodinger:
        switch (f.pot_kind) {
          case kPotZero:
            return norm_growth_loop<kKindSchrodinger, kPotZero>(
                f, theta0, count, burn_in, n, le_out);
          case kPotCosine:
            return norm_growth_loop<kKindSchrodinger, kPotCosine>(
                f, theta0, count, burn_in, n, le_out);
          case kPotPeaked:
            return norm_growth_loop<kKindSchrodinger, kPotPeaked>(
                f, theta0, count, burn_in, n, le_out);
          default:
            return norm_growth_loop<kKindSchrodinger, kPotTrigpoly>(
                f, theta0, count, burn_in, n, le_out);
        }
      case kKindConstant:
        return norm_growth_loop<kKindConstant, kPotZero>(f, theta0, count,
                                                         burn_in, n, le_out);
      default:
        return norm_growth_loop<kKindTrigpoly, kPotZero>(f, theta0, count,
                                                         burn_in, n, le_out);
    }
  }

  static void potential_eval(const FamilyPod& f, const double* theta,
                             int count, double* v_out) {
    if (count <= 0) return;
    switch (f.pot_kind) {
      case kPotZero:
        return potential_eval_loop<kPotZero>(f, theta, count, v_out);
      case kPotCosine:
        return potential_eval_loop<kPotCosine>(f, theta, count, v_out);
      case kPotPeaked:
        return potential_eval_loop<kPotPeaked>(f, theta, count, v_out);
      default:
        return potential_eval_loop<kPotTrigpoly>(f, theta, count, v_out);
    }
  }

  static KernelTable table(const char* name) {
    return {name, &KernelImpl::slope_orbit, &KernelImpl::norm_growth,
            &KernelImpl::potential_eval};
  }
};

}  // namespace qplab::kernels
