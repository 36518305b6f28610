#pragma once

#include <span>
#include <vector>

#include "blurrast/grad.hpp"
#include "blurrast/raster.hpp"

namespace blurrast::detail {

// Per-segment face data shared by every pixel.
struct SegmentSetup {
  std::vector<TrianglePair> pairs;
  std::vector<std::array<double, 3>> z0, z1;
  std::vector<std::array<double, 4>> bbox;  // xmin, xmax, ymin, ymax, grown by the cutoff
  std::vector<std::array<double, 3>> edge_len;  // max over keyframes of |edge opposite vertex i|
  std::vector<int> tile_offset;  // CSR over tiles
  std::vector<int> tile_faces;
};

// Per (pixel, candidate) gradient accumulators of the fast path.
struct CandidateGrad {
  // d/d(A1_i + a1), d/d(A2_i + a2), d/d(A3_i + a3): coefficient adjoints with the
  // denominator share folded in (a_k is the sum of A_k).
  double coef[3][3];
  double vert[2][3][2];  // direct keyframe-vertex adjoints, [start/end][vertex][x/y]
  double color_w[3];     // sum of foreground weights for the color adjoint
};

struct Scratch;

class Engine {
 public:
  Engine(const SegmentedMotion& motion, std::span<const Face> faces, std::span<const Vec3> colors,
         const RasterConfig& config);
  ~Engine();

  const SegmentedMotion& motion() const { return motion_; }

  BlurFrame render_blur() const;
  FrameSample render_sample(int seg, double t) const;
  // Screen and color adjoints; world-space chaining is done by the caller.
  void backward(const PixelAdjoint& adjoint, std::vector<std::vector<Vec2>>& d_screen,
                std::vector<Vec3>& d_colors) const;

 private:
  struct Sink;

  void build_segment(int seg, SegmentSetup& setup) const;
  void gather(const SegmentSetup& setup, double u, double v, std::vector<int>& out) const;

  // Renders samples `ts` of segment `seg` at pixel (u, v) into out[k * 4 + {r,g,b,a}].
  // With `grad` non-null the same computation is differentiated with upstream
  // per-sample adjoint grad[0..3] and accumulated into `sink`.
  void shade_fast(int seg, double u, double v, std::span<const double> ts, Scratch& sc, double* out,
                  const double* grad, Sink* sink, std::vector<int>* zchosen) const;
  void shade_naive(int seg, double u, double v, std::span<const double> ts, Scratch& sc, double* out,
                   const double* grad, Sink* sink, std::vector<int>* zchosen) const;
  void shade(int seg, double u, double v, std::span<const double> ts, Scratch& sc, double* out,
             const double* grad, Sink* sink, std::vector<int>* zchosen) const;

  const SegmentedMotion& motion_;
  std::span<const Face> faces_;
  std::span<const Vec3> colors_;
  RasterConfig config_;
  int width_, height_;
  int tiles_x_, tiles_y_;
  double delta_px_;
  double cutoff_;
  double cutoff2_;
  int threads_;
  std::vector<SegmentSetup> segments_;
};

// Window of local times in [0, 1] where the pixel can be within `cutoff` of
// the face; false when provably never. Conservative (superset).
bool time_window(const BaryCoeffs& c, const std::array<double, 3>& edge_len, double cutoff, double& lo,
                 double& hi);

}  // namespace blurrast::detail
