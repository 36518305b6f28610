#pragma once

#include <array>
#include <span>

#include "blurrast/types.hpp"

namespace blurrast {

// |det F| at or below this (pixel^2) marks a triangle as degenerate.
inline constexpr double kDegenerateEpsilon = 1e-10;

using Weights = std::array<double, 3>;

// Screen-space triangle; stands for the 3x3 matrix whose columns are
// (x_i, y_i, 1).
struct Triangle2 {
  std::array<double, 3> x{};
  std::array<double, 3> y{};

  Vec2 vertex(int i) const { return {x[i], y[i]}; }
  Vec2 apply(const Weights& w) const {
    return {w[0] * x[0] + w[1] * x[1] + w[2] * x[2], w[0] * y[0] + w[1] * y[1] + w[2] * y[2]};
  }
  Mat3 matrix() const;
};

double determinant(const Triangle2& f);

// Start and end keyframes of one face over one segment.
struct TrianglePair {
  Triangle2 start;
  Triangle2 end;

  Triangle2 at(double t) const;
  const Triangle2& endpoint(int which) const { return which == 0 ? start : end; }
};

// Per (pixel, face, segment) coefficients of
//   w(t) = (A1 t^2 + A2 t + A3) / (a1 t^2 + a2 t + a3).
// a_k is the componentwise sum of A_k, so the weights sum to one for every t.
struct BaryCoeffs {
  std::array<double, 3> A1{}, A2{}, A3{};
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;

  double denominator(double t) const { return (a1 * t + a2) * t + a3; }
  double numerator(int i, double t) const { return (A1[i] * t + A2[i]) * t + A3[i]; }
};

// Solves F w = p directly. Throws DegenerateError when |det F| <= epsilon.
Weights naive_bary(const Triangle2& f, const Vec2& p);
// Non-throwing form used in hot loops; returns false for degenerate triangles.
bool try_naive_bary(const Triangle2& f, double u, double v, Weights& w);

BaryCoeffs precompute_coeffs(const TrianglePair& pair, const Vec2& p);
void precompute_coeffs(const TrianglePair& pair, double u, double v, BaryCoeffs& c);

// Throws DegenerateError when the interpolated triangle has (near) zero area at t.
Weights eval_bary(const BaryCoeffs& c, double t);
bool try_eval_bary(const BaryCoeffs& c, double t, Weights& w);

inline bool inside(const Weights& w) { return w[0] >= 0.0 && w[1] >= 0.0 && w[2] >= 0.0; }

// Result of projecting F w onto the closed triangle. `edge` is the index of the
// first vertex of the winning edge (edges are 0-1, 1-2, 2-0); `param` is the
// edge parameter before clamping. `clamped` is set when the closest point is a
// vertex, `interior` when w already lay in [0,1]^3.
struct ClosestPoint {
  Weights w{};
  int edge = -1;
  double param = 0.0;
  bool clamped = false;
  bool interior = false;
};

ClosestPoint closest_point(const Triangle2& f, const Weights& w);
// Weights of the point of F closest to F w. Throws DegenerateError on |det F| <= epsilon.
Weights closest_weights(const Triangle2& f, const Weights& w);

// Keyframe used to approximate F(t) in the closest-point search: 0 iff t <= 0.5.
inline int endpoint_select(double t) { return t <= 0.5 ? 0 : 1; }

}  // namespace blurrast
