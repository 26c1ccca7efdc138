// AVX2 backend. This TU is the only one compiled with -mavx2 -mfma; nothing
// here runs unless the dispatcher verified cpuid support first.
#include "kernels_impl.hpp"

namespace qplab::kernels {

#if defined(__AVX2__) && defined(__FMA__)
const KernelTable* avx2_table_impl() {
  static const KernelTable t = KernelImpl<simd::Avx2VT>::table("avx2");
  return &t;
}
#else
const KernelTable* avx2_table_impl() { return nullptr; }
#endif

}  // namespace qplab::kernels
