#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "blurrast/bary.hpp"
#include "blurrast/geometry.hpp"

namespace blurrast {

enum class Solver {
  kFast,   // per (pixel, face, segment) rational coefficients, evaluated per sample
  kNaive,  // re-solve F(t) w = p for every sample, exact closest point on F(t)
};

struct RasterConfig {
  // Soft-coverage bandwidth in normalized screen units ([-1, 1] across the width).
  double delta = 1e-4;
  // Faces further than sqrt(delta ln 1e7) from a background pixel are ignored.
  bool cutoff_enabled = true;
  Solver solver = Solver::kFast;
  // Fast path only: restrict each (pixel, face) pair to the sample range where
  // the pixel can lie within the cutoff, found from the quadratic numerators.
  bool time_windows = true;
  int threads = 0;  // 0: BLURRAST_THREADS or hardware concurrency

  void validate() const;
  // delta converted to squared pixels for an image `width` pixels wide.
  double delta_pixels(int width) const;
  // Culling radius in pixels, +inf when the cutoff is disabled.
  double cutoff_pixels(int width) const;
};

inline constexpr double kCutoffKernelFloor = 1e-7;

// One instantaneous render. Pixel (x, y) lives at index y * width + x.
struct FrameSample {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;   // 3 per pixel
  std::vector<double> alpha;
  std::vector<int> zchosen;  // winning face, -1 for background
};

struct BlurMeta {
  int n_segments = 0;
  int samples_per_segment = 0;
  int total_samples = 0;
};

// Everything the reverse pass needs to recompute the forward pass.
struct ForwardRecord {
  SegmentedMotion motion;
  std::vector<Face> faces;
  std::vector<Vec3> colors;
  RasterConfig config;
};

// Motion-blurred RGBA image: the mean over all segments and samples. Background
// rgb is black, so rgb is effectively premultiplied by coverage.
struct BlurFrame {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;
  std::vector<double> alpha;
  BlurMeta meta;
  std::shared_ptr<const ForwardRecord> record;

  int num_pixels() const { return width * height; }
};

FrameSample render_sample(const SegmentedMotion& motion, int seg, double t, const Mesh& mesh,
                          const RasterConfig& config);

BlurFrame render_blur(const SegmentedMotion& motion, const Mesh& mesh, const RasterConfig& config,
                      bool record = false);

// Convenience: one static frame of `mesh` seen by `camera`, rendered as a
// single-sample blur.
BlurFrame render_static(const Mesh& mesh, const Camera& camera, const RasterConfig& config);

// Soft coverage of a pixel outside the face at time t: closest-point weights on
// the nearer keyframe, squared distance measured on the interpolated triangle.
double coverage_prob(const TrianglePair& pair, const Vec2& p, const Weights& w_t, double t,
                     double delta_px);
// Reference kernel with the exact closest point on F(t).
double coverage_prob_exact(const Triangle2& f, const Vec2& p, double delta_px);

struct ZCandidate {
  int face = -1;
  Weights w{};
  std::array<double, 3> depth{};
};
// Smallest interpolated depth wins, ties go to the lower face index.
int zbuffer_select(std::span<const ZCandidate> candidates);

// Faces whose swept (start and end keyframe) bounding box, grown by `cutoff`,
// contains p. Indices ascending.
std::vector<int> candidate_faces(std::span<const TrianglePair> pairs, const Vec2& p, double cutoff);

std::vector<TrianglePair> face_pairs(const SegmentedMotion& motion, int seg, std::span<const Face> faces);

// Pairwise (tree) summation; the fixed association order makes blur means
// reproducible independent of how pixels are scheduled.
double pairwise_sum(const double* values, std::size_t n, std::size_t stride = 1);

}  // namespace blurrast
