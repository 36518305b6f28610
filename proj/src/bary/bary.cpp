#include "blurrast/bary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace blurrast {
namespace {

inline double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

}  // namespace

Mat3 Triangle2::matrix() const {
  Mat3 m;
  m << x[0], x[1], x[2],  //
      y[0], y[1], y[2],   //
      1.0, 1.0, 1.0;
  return m;
}

double determinant(const Triangle2& f) {
  return f.x[0] * (f.y[1] - f.y[2]) - f.x[1] * (f.y[0] - f.y[2]) + f.x[2] * (f.y[0] - f.y[1]);
}

Triangle2 TrianglePair::at(double t) const {
  Triangle2 f;
  for (int i = 0; i < 3; ++i) {
    f.x[i] = start.x[i] + t * (end.x[i] - start.x[i]);
    f.y[i] = start.y[i] + t * (end.y[i] - start.y[i]);
  }
  return f;
}

bool try_naive_bary(const Triangle2& f, double u, double v, Weights& w) {
  const double det = determinant(f);
  if (!(std::abs(det) > kDegenerateEpsilon)) return false;
  // adj(F) p / det(F), one adjugate row per weight.
  const double inv = 1.0 / det;
  w[0] = ((f.y[1] - f.y[2]) * u + (f.x[2] - f.x[1]) * v + (f.x[1] * f.y[2] - f.x[2] * f.y[1])) * inv;
  w[1] = ((f.y[2] - f.y[0]) * u + (f.x[0] - f.x[2]) * v + (f.x[2] * f.y[0] - f.x[0] * f.y[2])) * inv;
  w[2] = ((f.y[0] - f.y[1]) * u + (f.x[1] - f.x[0]) * v + (f.x[0] * f.y[1] - f.x[1] * f.y[0])) * inv;
  return true;
}

Weights naive_bary(const Triangle2& f, const Vec2& p) {
  Weights w;
  if (!try_naive_bary(f, p.x(), p.y(), w)) {
    throw DegenerateError("degenerate triangle: |det| = " + std::to_string(std::abs(determinant(f))));
  }
  return w;
}

void precompute_coeffs(const TrianglePair& pair, double u, double v, BaryCoeffs& c) {
  // Weight i is twice the signed area of (p, v_j, v_k) over det F. With
  // a = v_j(0) - p, b = v_k(0) - p and per-segment displacements da, db:
  //   cross(a + t da, b + t db) = cross(a,b) + t (cross(a,db) + cross(da,b)) + t^2 cross(da,db).
  const Triangle2& s = pair.start;
  const Triangle2& e = pair.end;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    const double ax = s.x[j] - u, ay = s.y[j] - v;
    const double bx = s.x[k] - u, by = s.y[k] - v;
    const double dax = e.x[j] - s.x[j], day = e.y[j] - s.y[j];
    const double dbx = e.x[k] - s.x[k], dby = e.y[k] - s.y[k];
    c.A3[i] = cross(ax, ay, bx, by);
    c.A2[i] = cross(ax, ay, dbx, dby) + cross(dax, day, bx, by);
    c.A1[i] = cross(dax, day, dbx, dby);
  }
  c.a1 = c.A1[0] + c.A1[1] + c.A1[2];
  c.a2 = c.A2[0] + c.A2[1] + c.A2[2];
  c.a3 = c.A3[0] + c.A3[1] + c.A3[2];
}

BaryCoeffs precompute_coeffs(const TrianglePair& pair, const Vec2& p) {
  BaryCoeffs c;
  precompute_coeffs(pair, p.x(), p.y(), c);
  return c;
}

bool try_eval_bary(const BaryCoeffs& c, double t, Weights& w) {
  const double den = (c.a1 * t + c.a2) * t + c.a3;
  if (!(std::abs(den) > kDegenerateEpsilon)) return false;
  const double inv = 1.0 / den;
  for (int i = 0; i < 3; ++i) w[i] = ((c.A1[i] * t + c.A2[i]) * t + c.A3[i]) * inv;
  return true;
}

Weights eval_bary(const BaryCoeffs& c, double t) {
  Weights w;
  if (!try_eval_bary(c, t, w)) {
    throw DegenerateError("triangle degenerate at t = " + std::to_string(t) +
                          ": |det| = " + std::to_string(std::abs(c.denominator(t))));
  }
  return w;
}

ClosestPoint closest_point(const Triangle2& f, const Weights& w) {
  ClosestPoint best;
  if (w[0] >= 0.0 && w[1] >= 0.0 && w[2] >= 0.0 && w[0] <= 1.0 && w[1] <= 1.0 && w[2] <= 1.0) {
    best.w = w;
    best.interior = true;
    return best;
  }
  const Vec2 p = f.apply(w);
  double best_d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const double ex = f.x[j] - f.x[i], ey = f.y[j] - f.y[i];
    const double len2 = ex * ex + ey * ey;
    const double s = len2 > 0.0 ? ((p.x() - f.x[i]) * ex + (p.y() - f.y[i]) * ey) / len2 : 0.0;
    const double sc = std::clamp(s, 0.0, 1.0);
    const double dx = p.x() - (f.x[i] + sc * ex);
    const double dy = p.y() - (f.y[i] + sc * ey);
    const double d2 = dx * dx + dy * dy;
    if (best.edge < 0 || d2 < best_d2) {
      best_d2 = d2;
      best.edge = i;
      best.param = s;
      best.clamped = s <= 0.0 || s >= 1.0;
      best.w = {0.0, 0.0, 0.0};
      best.w[i] = 1.0 - sc;
      best.w[j] = sc;
    }
  }
  return best;
}

Weights closest_weights(const Triangle2& f, const Weights& w) {
  if (!(std::abs(determinant(f)) > kDegenerateEpsilon)) {
    throw DegenerateError("closest_weights on a degenerate triangle");
  }
  return closest_point(f, w).w;
}

}  // namespace blurrast
