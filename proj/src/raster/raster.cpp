#include "blurrast/raster.hpp"

#include <algorithm>
#include <cmath>

#include "engine.hpp"

namespace blurrast {

void RasterConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("delta must be positive and finite");
  if (threads < 0) throw InputError("thread count must be >= 0");
}

double RasterConfig::delta_pixels(int width) const {
  const double half = 0.5 * width;
  return delta * half * half;
}

double RasterConfig::cutoff_pixels(int width) const {
  if (!cutoff_enabled) return std::numeric_limits<double>::infinity();
  return std::sqrt(delta_pixels(width) * std::log(1.0 / kCutoffKernelFloor));
}

FrameSample render_sample(const SegmentedMotion& motion, int seg, double t, const Mesh& mesh,
                          const RasterConfig& config) {
  mesh.validate();
  detail::Engine engine(motion, mesh.faces, mesh.colors, config);
  return engine.render_sample(seg, t);
}

BlurFrame render_blur(const SegmentedMotion& motion, const Mesh& mesh, const RasterConfig& config,
                      bool record) {
  mesh.validate();
  detail::Engine engine(motion, mesh.faces, mesh.colors, config);
  BlurFrame frame = engine.render_blur();
  if (record) {
    auto rec = std::make_shared<ForwardRecord>();
    rec->motion = motion;
    rec->faces = mesh.faces;
    rec->colors = mesh.colors;
    rec->config = config;
    frame.record = std::move(rec);
  }
  return frame;
}

BlurFrame render_static(const Mesh& mesh, const Camera& camera, const RasterConfig& config) {
  const std::vector<ScreenVertex> screen = project(mesh, camera);
  return render_blur(static_motion(screen, camera.width, camera.height), mesh, config);
}

double coverage_prob(const TrianglePair& pair, const Vec2& p, const Weights& w_t, double t, double delta_px) {
  const ClosestPoint cp = closest_point(pair.endpoint(endpoint_select(t)), w_t);
  double x = 0.0, y = 0.0;
  for (int m = 0; m < 3; ++m) {
    if (cp.w[m] == 0.0) continue;
    x += cp.w[m] * (pair.start.x[m] + t * (pair.end.x[m] - pair.start.x[m]));
    y += cp.w[m] * (pair.start.y[m] + t * (pair.end.y[m] - pair.start.y[m]));
  }
  const double dx = p.x() - x, dy = p.y() - y;
  return std::exp(-(dx * dx + dy * dy) / delta_px);
}

double coverage_prob_exact(const Triangle2& f, const Vec2& p, double delta_px) {
  const Weights w = naive_bary(f, p);
  const Vec2 q = f.apply(closest_point(f, w).w);
  return std::exp(-(p - q).squaredNorm() / delta_px);
}

int zbuffer_select(std::span<const ZCandidate> candidates) {
  int best = -1;
  double zbest = std::numeric_limits<double>::infinity();
  for (const ZCandidate& c : candidates) {
    const double z = c.w[0] * c.depth[0] + c.w[1] * c.depth[1] + c.w[2] * c.depth[2];
    if (z < zbest || (z == zbest && c.face < best)) {
      zbest = z;
      best = c.face;
    }
  }
  return best;
}

std::vector<int> candidate_faces(std::span<const TrianglePair> pairs, const Vec2& p, double cutoff) {
  if (cutoff < 0.0) throw InputError("cutoff must be >= 0");
  std::vector<int> out;
  for (std::size_t f = 0; f < pairs.size(); ++f) {
    const TrianglePair& pr = pairs[f];
    double xmin = pr.start.x[0], xmax = xmin, ymin = pr.start.y[0], ymax = ymin;
    for (int i = 0; i < 3; ++i) {
      xmin = std::min({xmin, pr.start.x[i], pr.end.x[i]});
      xmax = std::max({xmax, pr.start.x[i], pr.end.x[i]});
      ymin = std::min({ymin, pr.start.y[i], pr.end.y[i]});
      ymax = std::max({ymax, pr.start.y[i], pr.end.y[i]});
    }
    if (p.x() >= xmin - cutoff && p.x() <= xmax + cutoff && p.y() >= ymin - cutoff && p.y() <= ymax + cutoff) {
      out.push_back(static_cast<int>(f));
    }
  }
  return out;
}

std::vector<TrianglePair> face_pairs(const SegmentedMotion& motion, int seg, std::span<const Face> faces) {
  const auto a = motion.segment_start(seg);
  const auto b = motion.segment_end(seg);
  std::vector<TrianglePair> out(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int i = 0; i < 3; ++i) {
      out[f].start.x[i] = a[faces[f][i]].x;
      out[f].start.y[i] = a[faces[f][i]].y;
      out[f].end.x[i] = b[faces[f][i]].x;
      out[f].end.y[i] = b[faces[f][i]].y;
    }
  }
  return out;
}

double pairwise_sum(const double* values, std::size_t n, std::size_t stride) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = values[0];
    for (std::size_t i = 1; i < n; ++i) s += values[i * stride];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half, stride) + pairwise_sum(values + half * stride, n - half, stride);
}

}  // namespace blurrast
