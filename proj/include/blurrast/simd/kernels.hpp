#pragma once

#include <cstddef>

#include "blurrast/bary.hpp"

// Time-batched evaluation of the rational barycentric form. One BaryCoeffs is
// evaluated at many sample times; that loop is the inner kernel of the fast
// renderer and has a scalar reference plus ISA-specific variants selected at
// runtime. Every variant uses the same operation sequence (Horner, reciprocal,
// multiply; no FMA) so results are bit-identical across ISAs.

namespace blurrast::simd {

enum class Isa { kScalar, kAvx2 };

const char* isa_name(Isa isa);
// Best ISA supported by this CPU and build.
Isa detected_isa();
// ISA used by dispatching calls. Defaults to detected_isa(), unless the
// environment variable BLURRAST_ISA=scalar forces the reference path.
Isa active_isa();
// Requests an ISA; falls back to scalar when unsupported. Returns the ISA set.
Isa set_active_isa(Isa isa);

// For each n: den[n] = a1 t^2 + a2 t + a3 and w_i[n] = N_i(t) / den[n].
// Entries with |den| <= kDegenerateEpsilon hold unspecified values.
struct BaryBatch {
  double* w0;
  double* w1;
  double* w2;
  double* den;
};

void eval_bary_batch(const BaryCoeffs& c, const double* t, std::size_t n, const BaryBatch& out);

namespace scalar {
void eval_bary_batch(const BaryCoeffs& c, const double* t, std::size_t n, const BaryBatch& out);
}
namespace avx2 {
void eval_bary_batch(const BaryCoeffs& c, const double* t, std::size_t n, const BaryBatch& out);
}

}  // namespace blurrast::simd
