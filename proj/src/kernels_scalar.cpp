// Scalar reference backend.
#include "kernels_impl.hpp"

namespace qplab::kernels {

const KernelTable& scalar_table() {
  static const KernelTable t = KernelImpl<simd::ScalarVT>::table("scalar");
  return t;
}

}  // namespace qplab::kernels
