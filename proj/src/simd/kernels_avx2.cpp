#include "blurrast/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define BLURRAST_HAVE_X86 1
#endif

namespace blurrast::simd::avx2 {

#if BLURRAST_HAVE_X86

namespace {

__attribute__((target("avx2"))) inline __m256d horner(__m256d a, __m256d b, __m256d c, __m256d t) {
  return _mm256_add_pd(_mm256_mul_pd(_mm256_add_pd(_mm256_mul_pd(a, t), b), t), c);
}

}  // namespace

__attribute__((target("avx2"))) void eval_bary_batch(const BaryCoeffs& c, const double* t,
                                                      std::size_t n, const BaryBatch& out) {
  const __m256d a1 = _mm256_set1_pd(c.a1), a2 = _mm256_set1_pd(c.a2), a3 = _mm256_set1_pd(c.a3);
  const __m256d p1 = _mm256_set1_pd(c.A1[0]), p2 = _mm256_set1_pd(c.A2[0]), p3 = _mm256_set1_pd(c.A3[0]);
  const __m256d q1 = _mm256_set1_pd(c.A1[1]), q2 = _mm256_set1_pd(c.A2[1]), q3 = _mm256_set1_pd(c.A3[1]);
  const __m256d r1 = _mm256_set1_pd(c.A1[2]), r2 = _mm256_set1_pd(c.A2[2]), r3 = _mm256_set1_pd(c.A3[2]);
  const __m256d one = _mm256_set1_pd(1.0);

  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d tk = _mm256_loadu_pd(t + k);
    const __m256d den = horner(a1, a2, a3, tk);
    const __m256d inv = _mm256_div_pd(one, den);
    _mm256_storeu_pd(out.den + k, den);
    _mm256_storeu_pd(out.w0 + k, _mm256_mul_pd(horner(p1, p2, p3, tk), inv));
    _mm256_storeu_pd(out.w1 + k, _mm256_mul_pd(horner(q1, q2, q3, tk), inv));
    _mm256_storeu_pd(out.w2 + k, _mm256_mul_pd(horner(r1, r2, r3, tk), inv));
  }
  if (k < n) {
    const BaryBatch tail{out.w0 + k, out.w1 + k, out.w2 + k, out.den + k};
    scalar::eval_bary_batch(c, t + k, n - k, tail);
  }
}

#else

void eval_bary_batch(const BaryCoeffs& c, const double* t, std::size_t n, const BaryBatch& out) {
  scalar::eval_bary_batch(c, t, n, out);
}

#endif

}  // namespace blurrast::simd::avx2
