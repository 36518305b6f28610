#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "blurrast/grad.hpp"

namespace blurrast {

struct LossWeights {
  double lambda_s = 3e-2;  // smoothness
  double lambda_l = 3e-4;  // Laplacian
  void validate() const;
};

// Mean L1 over the 3N rgb values plus mean L1 over the N alpha values.
// sign(0) = 0 in the adjoint. Throws InputError on a size mismatch.
double image_loss(const BlurFrame& rendered, const BlurFrame& target, PixelAdjoint* adjoint = nullptr);

// Connectivity-derived regularizers on a fixed template. Built once; the
// Laplacian works on displacements from the template positions.
class MeshRegularizer {
 public:
  explicit MeshRegularizer(const Mesh& template_mesh);

  // sum_v |d_v - mean_{n in N(v)} d_n|^2 with d = vertices - template.
  double laplacian(std::span<const Vec3> vertices, std::vector<Vec3>* grad = nullptr) const;
  // sum over interior edges of (cos theta + 1)^2, theta measured between the
  // perpendiculars dropped from the two opposite vertices onto the edge.
  double smoothness(std::span<const Vec3> vertices, std::vector<Vec3>* grad = nullptr) const;

  int num_interior_edges() const { return static_cast<int>(edges_.size()); }
  // Problems found at construction (isolated vertices, non-manifold edges).
  const std::vector<std::string>& warnings() const { return warnings_; }
  // Edges dropped by the last smoothness() call because a face was degenerate.
  int last_skipped_edges() const { return last_skipped_; }

 private:
  struct Edge {
    int v0, v1;  // shared edge
    int a, b;    // opposite vertices of the two incident faces
  };
  std::vector<Vec3> template_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<Edge> edges_;
  std::vector<std::string> warnings_;
  mutable int last_skipped_ = 0;
};

struct AdamState {
  double alpha = 0.01;
  double beta1 = 0.5;
  double beta2 = 0.99;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m, v;

  void validate() const;
};

// One bias-corrected Adam update in place. Throws NumericalError naming the
// first non-finite gradient entry.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct RecoveryView {
  Camera camera;
  BlurFrame target;
};

enum class VertexParam {
  kDirect,   // Adam on vertex positions
  kBounded,  // SoftRas deformation: v = sigmoid(logit|v0| + d) sign(v0), recentred on tanh(c)
};

struct RecoveryProblem {
  std::vector<RecoveryView> views;
  MotionTrajectory trajectory;
  int n_segments = 1;
  int samples_per_segment = 8;
  RasterConfig raster;
  Mesh template_mesh;
  int iterations = 500;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double learning_rate = 0.01;
  double beta1 = 0.5;
  double beta2 = 0.99;
  VertexParam vertex_param = VertexParam::kDirect;

  // kBounded needs every template coordinate strictly inside (-1, 1).
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double l_img = 0.0;
  double l_s = 0.0;
  double l_l = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;
};

struct RecoveryResult {
  Mesh mesh;
  std::vector<IterationRecord> history;
};

// Called after every iteration with the record and current mesh.
using RecoveryCallback = std::function<void(const IterationRecord&, const Mesh&)>;

RecoveryResult recover_translation(const RecoveryProblem& problem, const LossWeights& weights,
                                   const RecoveryCallback& callback = {});

// Renders `mesh` as every view of `problem` would (targets are ignored).
std::vector<BlurFrame> render_views(const RecoveryProblem& problem, const Mesh& mesh);

// Occupancy IoU on a res^3 grid over the shared bounding cube. Inside/outside by
// +x parity ray casts from voxel centers. Throws InputError on an empty union.
double voxel_iou(const Mesh& a, const Mesh& b, int resolution = 32);
// Occupancy grid used by voxel_iou, x fastest, over the cube [lo, lo + size]^3.
std::vector<std::uint8_t> voxelize(const Mesh& mesh, const Vec3& lo, double size, int resolution);

// 10 log10(1 / MSE); +inf for identical inputs.
double psnr(std::span<const double> a, std::span<const double> b);
// Over all rgb and alpha values of two frames.
double psnr(const BlurFrame& a, const BlurFrame& b);

}  // namespace blurrast
