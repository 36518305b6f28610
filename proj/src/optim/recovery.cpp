#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "blurrast/optim.hpp"

namespace blurrast {

void RecoveryProblem::validate() const {
  if (views.empty()) throw InputError("recovery problem needs at least one view");
  if (n_segments < 1 || samples_per_segment < 1) throw InputError("segments and samples must be >= 1");
  if (iterations < 0) throw InputError("iterations must be >= 0");
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  raster.validate();
  template_mesh.validate();
  if (vertex_param == VertexParam::kBounded) {
    for (const Vec3& v : template_mesh.vertices) {
      if (!(v.cwiseAbs().maxCoeff() < 1.0)) throw InputError("bounded vertex parametrization needs |v| < 1");
    }
  }
  for (const RecoveryView& v : views) {
    v.camera.validate();
    if (v.target.width != v.camera.width || v.target.height != v.camera.height) {
      throw InputError("target image size does not match its camera");
    }
  }
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Maps optimizer parameters to vertex positions and pulls vertex gradients back.
// Direct: params are the positions. Bounded: 3V displacements then 3 centre logits.
class VertexMap {
 public:
  VertexMap(const std::vector<Vec3>& base, VertexParam kind) : kind_(kind) {
    if (kind_ == VertexParam::kDirect) {
      for (const Vec3& v : base) params_.insert(params_.end(), {v.x(), v.y(), v.z()});
      return;
    }
    for (const Vec3& v : base) {
      for (int c = 0; c < 3; ++c) {
        const double a = std::max(std::abs(v[c]), 1e-6);
        logit_.push_back(std::log(a / (1.0 - a)));
        sign_.push_back(v[c] < 0.0 ? -1.0 : 1.0);
      }
    }
    params_.assign(base.size() * 3 + 3, 0.0);
    // Cancel the rounding of sigmoid(logit(a)) so the initial parameters reproduce the template.
    std::vector<Vec3> start(base.size());
    offset_.assign(logit_.size(), 0.0);
    vertices(start);
    for (std::size_t i = 0; i < offset_.size(); ++i) offset_[i] = base[i / 3][i % 3] - start[i / 3][i % 3];
  }

  std::vector<double>& params() { return params_; }

  void vertices(std::vector<Vec3>& out) const {
    if (kind_ == VertexParam::kDirect) {
      for (std::size_t v = 0; v < out.size(); ++v) out[v] = Vec3(params_[3 * v], params_[3 * v + 1], params_[3 * v + 2]);
      return;
    }
    const std::size_t n = logit_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::tanh(params_[n + i % 3]);
      const double u = sigmoid(logit_[i] + params_[i]) * sign_[i];
      out[i / 3][i % 3] = (u > 0.0 ? u * (1.0 - c) + c : u * (1.0 + c) + c) + offset_[i];
    }
  }

  void pull_back(const std::vector<double>& d_vertices, std::vector<double>& d_params) const {
    if (kind_ == VertexParam::kDirect) {
      d_params = d_vertices;
      return;
    }
    const std::size_t n = logit_.size();
    d_params.assign(n + 3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::tanh(params_[n + i % 3]);
      const double s = sigmoid(logit_[i] + params_[i]);
      const double u = s * sign_[i];
      d_params[i] = d_vertices[i] * (u > 0.0 ? 1.0 - c : 1.0 + c) * sign_[i] * s * (1.0 - s);
      d_params[n + i % 3] += d_vertices[i] * (1.0 - std::abs(u)) * (1.0 - c * c);
    }
  }

 private:
  VertexParam kind_;
  std::vector<double> params_, logit_, sign_, offset_;
};

}  // namespace

std::vector<BlurFrame> render_views(const RecoveryProblem& problem, const Mesh& mesh) {
  std::vector<BlurFrame> out;
  out.reserve(problem.views.size());
  for (const RecoveryView& v : problem.views) {
    const SegmentedMotion motion =
        segment(problem.trajectory, mesh, v.camera, problem.n_segments, problem.samples_per_segment);
    out.push_back(render_blur(motion, mesh, problem.raster));
  }
  return out;
}

RecoveryResult recover_translation(const RecoveryProblem& problem, const LossWeights& weights,
                                   const RecoveryCallback& callback) {
  problem.validate();
  weights.validate();
  const MeshRegularizer reg(problem.template_mesh);

  Mesh mesh = problem.template_mesh;
  const int V = mesh.num_vertices();
  const int n_views = static_cast<int>(problem.views.size());
  const int batch = std::min(problem.batch_size, n_views);

  AdamState adam;
  adam.alpha = problem.learning_rate;
  adam.beta1 = problem.beta1;
  adam.beta2 = problem.beta2;
  adam.validate();

  std::mt19937_64 rng(problem.seed);
  std::vector<int> order(n_views);
  std::iota(order.begin(), order.end(), 0);
  int cursor = n_views;

  VertexMap vmap(mesh.vertices, problem.vertex_param);
  AdamState color_adam = adam;
  std::vector<double> colors(3 * static_cast<std::size_t>(V));
  for (int v = 0; v < V; ++v) {
    for (int c = 0; c < 3; ++c) colors[v * 3 + c] = mesh.colors[v][c];
  }
  std::vector<double> grads(3 * static_cast<std::size_t>(V)), color_grads(grads.size()), param_grads;
  std::vector<Vec3> g_s, g_l;

  RecoveryResult result;
  result.history.reserve(problem.iterations);
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < problem.iterations; ++it) {
    std::fill(grads.begin(), grads.end(), 0.0);
    std::fill(color_grads.begin(), color_grads.end(), 0.0);
    double l_img = 0.0;
    for (int b = 0; b < batch; ++b) {
      if (cursor == n_views) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const RecoveryView& view = problem.views[order[cursor++]];
      const SegmentedMotion motion =
          segment(problem.trajectory, mesh, view.camera, problem.n_segments, problem.samples_per_segment);
      const BlurFrame frame = render_blur(motion, mesh, problem.raster, true);
      PixelAdjoint adj;
      l_img += image_loss(frame, view.target, &adj) / batch;
      const AdjointState st = backward_blur(frame, adj);
      for (int v = 0; v < V; ++v) {
        for (int c = 0; c < 3; ++c) {
          grads[v * 3 + c] += st.d_vertices[v][c] / batch;
          color_grads[v * 3 + c] += st.d_colors[v][c] / batch;
        }
      }
    }
    const double l_s = reg.smoothness(mesh.vertices, &g_s);
    const double l_l = reg.laplacian(mesh.vertices, &g_l);
    const double total = l_img + weights.lambda_s * l_s + weights.lambda_l * l_l;
    if (!std::isfinite(total)) {
      throw NumericalError("non-finite loss at iteration " + std::to_string(it) + " (L_img " +
                           std::to_string(l_img) + ", L_s " + std::to_string(l_s) + ", L_L " +
                           std::to_string(l_l) + ")");
    }
    for (int v = 0; v < V; ++v) {
      for (int c = 0; c < 3; ++c) grads[v * 3 + c] += weights.lambda_s * g_s[v][c] + weights.lambda_l * g_l[v][c];
    }

    IterationRecord rec;
    rec.iter = it;
    rec.l_img = l_img;
    rec.l_s = l_s;
    rec.l_l = l_l;
    rec.total = total;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (callback) callback(rec, mesh);

    vmap.pull_back(grads, param_grads);
    adam_step(adam, vmap.params(), param_grads);
    adam_step(color_adam, colors, color_grads);
    vmap.vertices(mesh.vertices);
    for (int v = 0; v < V; ++v) {
      for (int c = 0; c < 3; ++c) {
        colors[v * 3 + c] = std::clamp(colors[v * 3 + c], 0.0, 1.0);
        mesh.colors[v][c] = colors[v * 3 + c];
      }
    }
  }
  result.mesh = std::move(mesh);
  return result;
}

}  // namespace blurrast
