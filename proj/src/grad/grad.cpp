#include "blurrast/grad.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "../raster/engine.hpp"
#include "colormap.hpp"

namespace blurrast {

PixelAdjoint PixelAdjoint::zeros(int width, int height) {
  PixelAdjoint a;
  a.width = width;
  a.height = height;
  a.d_rgb.assign(static_cast<std::size_t>(width) * height * 3, 0.0);
  a.d_alpha.assign(static_cast<std::size_t>(width) * height, 0.0);
  return a;
}

AdjointState backward_blur(const BlurFrame& frame, const PixelAdjoint& adjoint) {
  if (!frame.record) throw InputError("backward_blur needs a frame rendered with record = true");
  const ForwardRecord& rec = *frame.record;
  if (adjoint.d_rgb.size() != static_cast<std::size_t>(frame.num_pixels()) * 3 ||
      adjoint.d_alpha.size() != static_cast<std::size_t>(frame.num_pixels())) {
    throw InputError("pixel adjoint size does not match the frame");
  }
  detail::Engine engine(rec.motion, rec.faces, rec.colors, rec.config);
  AdjointState out;
  engine.backward(adjoint, out.d_screen, out.d_colors);

  if (!rec.motion.jacobians.empty()) {
    const int V = rec.motion.num_vertices();
    out.d_vertices.assign(V, Vec3::Zero());
    for (std::size_t b = 0; b < out.d_screen.size(); ++b) {
      for (int v = 0; v < V; ++v) out.d_vertices[v] += rec.motion.jacobians[b][v].transpose() * out.d_screen[b][v];
    }
  }
  return out;
}

BlurFrame Scene::render(bool record) const {
  const SegmentedMotion motion = segment(trajectory, mesh, camera, n_segments, samples_per_segment);
  return render_blur(motion, mesh, raster, record);
}

PixelLoss mean_alpha_loss() {
  return [](const BlurFrame& f, PixelAdjoint* adj) {
    const double n = f.num_pixels();
    if (adj) {
      *adj = PixelAdjoint::zeros(f.width, f.height);
      std::fill(adj->d_alpha.begin(), adj->d_alpha.end(), 1.0 / n);
    }
    return pairwise_sum(f.alpha.data(), f.alpha.size()) / n;
  };
}

PixelLoss mean_rgb_loss() {
  return [](const BlurFrame& f, PixelAdjoint* adj) {
    const double n = 3.0 * f.num_pixels();
    if (adj) {
      *adj = PixelAdjoint::zeros(f.width, f.height);
      std::fill(adj->d_rgb.begin(), adj->d_rgb.end(), 1.0 / n);
    }
    return pairwise_sum(f.rgb.data(), f.rgb.size()) / n;
  };
}

std::string FdReport::to_json() const {
  nlohmann::json j;
  j["max_rel_err"] = max_rel_err;
  j["worst_index"] = worst_index;
  j["n_checked"] = n_checked;
  j["n_skipped"] = n_skipped;
  j["n_total"] = n_total;
  return j.dump(2);
}

FdReport finite_diff_check(const Scene& scene, const PixelLoss& loss, const FdOptions& options) {
  if (!(options.h > 0.0)) throw InputError("finite-difference step must be positive");
  const BlurFrame frame = scene.render(true);
  PixelAdjoint adj;
  const double l0 = loss(frame, &adj);
  const AdjointState grad = backward_blur(frame, adj);

  const int V = scene.mesh.num_vertices();
  const bool do_vertices = options.target != FdTarget::kColors;
  const bool do_colors = options.target != FdTarget::kVertices;

  FdReport report;
  auto check = [&](int index, double analytic, auto&& perturb) {
    ++report.n_total;
    Scene s = scene;
    perturb(s, options.h);
    const double lp = loss(s.render(false), nullptr);
    s = scene;
    perturb(s, -options.h);
    const double lm = loss(s.render(false), nullptr);
    const double numeric = (lp - lm) / (2.0 * options.h);
    const double fwd = (lp - l0) / options.h;
    const double bwd = (l0 - lm) / options.h;
    if (std::max(std::abs(analytic), std::abs(numeric)) < options.min_grad) return;
    const double one_sided = std::max(std::abs(fwd), std::abs(bwd));
    if (std::abs(fwd - bwd) > options.disagreement * one_sided) {
      ++report.n_skipped;
      return;
    }
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    ++report.n_checked;
    if (rel > report.max_rel_err || report.worst_index < 0) {
      report.max_rel_err = rel;
      report.worst_index = index;
    }
  };

  for (int v = 0; v < V && do_vertices; ++v) {
    for (int a = 0; a < 3; ++a) {
      check(v * 3 + a, grad.d_vertices[v][a], [&](Scene& s, double d) { s.mesh.vertices[v][a] += d; });
    }
  }
  for (int v = 0; v < V && do_colors; ++v) {
    for (int a = 0; a < 3; ++a) {
      check(3 * V + v * 3 + a, grad.d_colors[v][a], [&](Scene& s, double d) { s.mesh.colors[v][a] += d; });
    }
  }
  return report;
}

GradImage grad_image(const Scene& scene, const PixelLoss& loss, GradAxis axis) {
  const BlurFrame frame = scene.render(true);
  PixelAdjoint adj;
  loss(frame, &adj);
  const AdjointState grad = backward_blur(frame, adj);

  // Splat the per-vertex scalar as a color attribute through the same motion.
  Scene splat = scene;
  const int ax = static_cast<int>(axis);
  for (int v = 0; v < splat.mesh.num_vertices(); ++v) splat.mesh.colors[v] = Vec3(grad.d_vertices[v][ax], 0.0, 0.0);
  const BlurFrame img = splat.render(false);

  GradImage out;
  out.width = img.width;
  out.height = img.height;
  const int n = img.num_pixels();
  out.value.resize(n);
  out.weight = img.alpha;
  double scale = 0.0;
  for (int p = 0; p < n; ++p) {
    out.value[p] = img.rgb[p * 3];
    scale = std::max(scale, std::abs(out.value[p]));
  }
  out.rgba.resize(static_cast<std::size_t>(n) * 4);
  for (int p = 0; p < n; ++p) {
    const double s = scale > 0.0 ? 0.5 + 0.5 * out.value[p] / scale : 0.5;
    const int idx = std::clamp(static_cast<int>(std::lround(s * 255.0)), 0, 255);
    const auto& c = detail::kViridis[idx];
    out.rgba[p * 4 + 0] = c[0];
    out.rgba[p * 4 + 1] = c[1];
    out.rgba[p * 4 + 2] = c[2];
    out.rgba[p * 4 + 3] = static_cast<std::uint8_t>(std::lround(std::clamp(out.weight[p], 0.0, 1.0) * 255.0));
  }
  return out;
}

}  // namespace blurrast
