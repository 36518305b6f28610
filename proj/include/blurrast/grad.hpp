#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "blurrast/raster.hpp"

namespace blurrast {

// Upstream gradient dL/d(blurred pixel), same layout as BlurFrame.
struct PixelAdjoint {
  int width = 0;
  int height = 0;
  std::vector<double> d_rgb;    // 3 per pixel
  std::vector<double> d_alpha;  // 1 per pixel

  static PixelAdjoint zeros(int width, int height);
};

struct AdjointState {
  // dL / d(template-space vertex position); empty when the motion carries no
  // projection Jacobians (e.g. screen-space-only motions built by hand).
  std::vector<Vec3> d_vertices;
  std::vector<Vec3> d_colors;
  // dL / d(keyframe screen position), [keyframe][vertex].
  std::vector<std::vector<Vec2>> d_screen;
};

// Reverse pass of render_blur. The forward is recomputed per pixel from the
// record (no tape). Z-buffer winners are held fixed; the closest-point
// selection is differentiated within its current edge/vertex region.
// Throws InputError when `frame` was rendered without recording.
AdjointState backward_blur(const BlurFrame& frame, const PixelAdjoint& adjoint);

// Scene = everything needed to re-render after perturbing the template mesh.
struct Scene {
  Mesh mesh;
  Camera camera;
  MotionTrajectory trajectory;
  int n_segments = 1;
  int samples_per_segment = 1;
  RasterConfig raster;

  BlurFrame render(bool record = false) const;
};

// Scalar loss on a rendered frame; fills `adjoint` with dL/d(pixel) when non-null.
using PixelLoss = std::function<double(const BlurFrame&, PixelAdjoint*)>;

PixelLoss mean_alpha_loss();
PixelLoss mean_rgb_loss();

struct FdReport {
  double max_rel_err = 0.0;
  int worst_index = -1;  // coordinate index: vertex * 3 + axis (colors offset by 3V)
  int n_checked = 0;
  int n_skipped = 0;
  int n_total = 0;  // coordinates visited, including those below min_grad
  std::string to_json() const;
};

enum class FdTarget { kVertices, kColors, kBoth };

struct FdOptions {
  double h = 1e-3;
  // Coordinates whose analytic and numeric gradients are both below this are
  // not counted.
  double min_grad = 1e-6;
  // Forward and backward one-sided differences disagreeing by more than this
  // fraction flag a non-differentiable point; such coordinates are skipped.
  double disagreement = 0.5;
  FdTarget target = FdTarget::kVertices;
};

// Central differences for every selected coordinate against backward_blur.
// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
FdReport finite_diff_check(const Scene& scene, const PixelLoss& loss, const FdOptions& options = {});

enum class GradAxis { kX = 0, kY = 1, kZ = 2 };

struct GradImage {
  int width = 0;
  int height = 0;
  std::vector<double> value;   // signed gradient splat per pixel
  std::vector<double> weight;  // coverage of the splat (blurred alpha)
  std::vector<std::uint8_t> rgba;  // color-mapped visualization
};

// Per-vertex gradient of the summed pixel values selected by `loss` with
// respect to one world axis, rendered back through the same blurred motion as a
// vertex attribute and color-mapped with the viridis LUT.
GradImage grad_image(const Scene& scene, const PixelLoss& loss, GradAxis axis = GradAxis::kX);

}  // namespace blurrast
