// Lane abstraction shared by the scalar reference kernels and the AVX2
// kernels. The same templated kernel body is instantiated once per backend;
// bit-identical results across backends require every operation here to map
// to the same IEEE rounding in both instantiations (fused ops are explicit,
// contraction is disabled project-wide).
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace qplab::simd {

// ---------------------------------------------------------------- scalar ---
inline double vfma(double a, double b, double c) { return std::fma(a, b, c); }
// a*b - c with a single rounding, matching _mm256_fmsub_pd.
inline double vfms(double a, double b, double c) { return std::fma(a, b, -c); }
inline double vround(double x) { return std::nearbyint(x); }
inline double vfloor(double x) { return std::floor(x); }
inline double vabs(double x) { return std::fabs(x); }
inline double vmax(double a, double b) { return std::fmax(a, b); }
inline double vsqrt(double x) { return std::sqrt(x); }

struct ScalarVT {
  static constexpr int width = 1;
  using D = double;
  using I = std::int64_t;

  static D broadcast(double x) { return x; }
  static D load(const double* p) { return *p; }
  static void store(double* p, D x) { *p = x; }
  static I izero() { return 0; }
  static void istore(std::int64_t* p, I x) { *p = x; }

  // Exact power-of-two scale s with m*s in [1,2); requires m > 0 normal.
  static D renorm_scale(D m) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(m);
    std::uint64_t eraw = bits >> 52;
    return std::bit_cast<double>((2046 - eraw) << 52);
  }
  // Same, accumulating the discarded exponent into e.
  static D renorm_scale_acc(D m, I& e) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(m);
    std::int64_t eraw = static_cast<std::int64_t>(bits >> 52);
    e += eraw - 1023;
    return std::bit_cast<double>(
        static_cast<std::uint64_t>(2046 - eraw) << 52);
  }
};

// ----------------------------------------------------------------- avx2 ----
#if defined(__AVX2__) && defined(__FMA__)

inline __m256d vfma(__m256d a, __m256d b, __m256d c) {
  return _mm256_fmadd_pd(a, b, c);
}
inline __m256d vfms(__m256d a, __m256d b, __m256d c) {
  return _mm256_fmsub_pd(a, b, c);
}
inline __m256d vround(__m256d x) {
  return _mm256_round_pd(x, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
}
inline __m256d vfloor(__m256d x) { return _mm256_floor_pd(x); }
inline __m256d vabs(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}
inline __m256d vmax(__m256d a, __m256d b) { return _mm256_max_pd(a, b); }
inline __m256d vsqrt(__m256d x) { return _mm256_sqrt_pd(x); }

struct Avx2VT {
  static constexpr int width = 4;
  using D = __m256d;
  using I = __m256i;

  static D broadcast(double x) { return _mm256_set1_pd(x); }
  static D load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, D x) { _mm256_storeu_pd(p, x); }
  static I izero() { return _mm256_setzero_si256(); }
  static void istore(std::int64_t* p, I x) {
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(p), x);
  }

  static D renorm_scale(D m) {
    __m256i eraw = _mm256_srli_epi64(_mm256_castpd_si256(m), 52);
    __m256i sbits =
        _mm256_slli_epi64(_mm256_sub_epi64(_mm256_set1_epi64x(2046), eraw), 52);
    return _mm256_castsi256_pd(sbits);
  }
  static D renorm_scale_acc(D m, I& e) {
    __m256i eraw = _mm256_srli_epi64(_mm256_castpd_si256(m), 52);
    e = _mm256_add_epi64(e,
                         _mm256_sub_epi64(eraw, _mm256_set1_epi64x(1023)));
    __m256i sbits =
        _mm256_slli_epi64(_mm256_sub_epi64(_mm256_set1_epi64x(2046), eraw), 52);
    return _mm256_castsi256_pd(sbits);
  }
};

#endif  // __AVX2__ && __FMA__

}  // namespace qplab::simd
