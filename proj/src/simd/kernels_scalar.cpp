#include "blurrast/simd/kernels.hpp"

namespace blurrast::simd::scalar {

void eval_bary_batch(const BaryCoeffs& c, const double* t, std::size_t n, const BaryBatch& out) {
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = t[k];
    const double den = (c.a1 * tk + c.a2) * tk + c.a3;
    const double inv = 1.0 / den;
    out.den[k] = den;
    out.w0[k] = ((c.A1[0] * tk + c.A2[0]) * tk + c.A3[0]) * inv;
    out.w1[k] = ((c.A1[1] * tk + c.A2[1]) * tk + c.A3[1]) * inv;
    out.w2[k] = ((c.A1[2] * tk + c.A2[2]) * tk + c.A3[2]) * inv;
  }
}

}  // namespace blurrast::simd::scalar
