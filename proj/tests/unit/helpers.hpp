#pragma once

#include <cmath>
#include <random>

#include "blurrast/bary.hpp"
#include "blurrast/geometry.hpp"
#include "blurrast/raster.hpp"

namespace blurrast::test {

inline Triangle2 random_triangle(std::mt19937_64& rng, double lo = 0.0, double hi = 64.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Triangle2 f;
  do {
    for (int i = 0; i < 3; ++i) {
      f.x[i] = u(rng);
      f.y[i] = u(rng);
    }
  } while (std::abs(determinant(f)) < 1.0);
  return f;
}

// End keyframe = start moved by a random rigid-ish offset plus per-vertex jitter.
inline TrianglePair random_pair(std::mt19937_64& rng, double motion = 8.0) {
  std::uniform_real_distribution<double> m(-motion, motion);
  TrianglePair p;
  p.start = random_triangle(rng);
  const double dx = m(rng), dy = m(rng);
  for (int i = 0; i < 3; ++i) {
    p.end.x[i] = p.start.x[i] + dx + 0.25 * m(rng);
    p.end.y[i] = p.start.y[i] + dy + 0.25 * m(rng);
  }
  return p;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Lone screen-space triangle packaged as a static one-face mesh and motion.
struct FlatScene {
  Mesh mesh;
  SegmentedMotion motion;
};

inline FlatScene flat_scene(const std::vector<std::array<double, 2>>& start,
                            const std::vector<std::array<double, 2>>& end, const std::vector<Face>& faces,
                            int width, int height, int samples = 1, double depth = 2.0) {
  FlatScene s;
  const int n = static_cast<int>(start.size());
  s.mesh.vertices.assign(n, Vec3::Zero());
  s.mesh.colors.assign(n, Vec3(0.7, 0.7, 0.7));
  s.mesh.faces = faces;
  s.motion.width = width;
  s.motion.height = height;
  s.motion.samples_per_segment = samples;
  s.motion.keyframes.resize(2);
  for (int i = 0; i < n; ++i) {
    s.motion.keyframes[0].push_back({start[i][0], start[i][1], depth});
    s.motion.keyframes[1].push_back({end[i][0], end[i][1], depth});
  }
  return s;
}

}  // namespace blurrast::test
