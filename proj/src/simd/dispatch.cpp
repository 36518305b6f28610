#include <atomic>
#include <cstdlib>
#include <string>

#include "blurrast/simd/kernels.hpp"

namespace blurrast::simd {
namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("BLURRAST_ISA"); env && std::string(env) == "scalar") {
    return Isa::kScalar;
  }
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
#if defined(__x86_64__) || defined(_M_X64)
  static const bool has_avx2 = __builtin_cpu_supports("avx2");
  if (has_avx2) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) isa = Isa::kScalar;
  active().store(isa, std::memory_order_relaxed);
  return isa;
}

void eval_bary_batch(const BaryCoeffs& c, const double* t, std::size_t n, const BaryBatch& out) {
  if (active_isa() == Isa::kAvx2) {
    avx2::eval_bary_batch(c, t, n, out);
  } else {
    scalar::eval_bary_batch(c, t, n, out);
  }
}

}  // namespace blurrast::simd
