#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include "blurrast/optim.hpp"

namespace blurrast {
namespace {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

using Grad12 = Eigen::Matrix<double, 12, 1>;
using AD = Eigen::AutoDiffScalar<Grad12>;
using ADVec = Eigen::Matrix<AD, 3, 1>;

// (cos + 1)^2 between the perpendiculars from a and b onto the line v0 v1.
template <class T, class V>
T flatten_term(const V& v0, const V& v1, const V& a, const V& b) {
  const V e = v1 - v0;
  const V p = a - v0;
  const V q = b - v0;
  const T ee = e.dot(e);
  const V cp = p - e * (e.dot(p) / ee);
  const V cq = q - e * (e.dot(q) / ee);
  using std::sqrt;
  const T c = cp.dot(cq) / sqrt(cp.dot(cp) * cq.dot(cq));
  return (c + 1.0) * (c + 1.0);
}

bool degenerate_edge(const Vec3& v0, const Vec3& v1, const Vec3& a, const Vec3& b) {
  const Vec3 e = v1 - v0;
  const double ee = e.squaredNorm();
  if (!(ee > 1e-24)) return true;
  const Vec3 cp = (a - v0) - e * (e.dot(a - v0) / ee);
  const Vec3 cq = (b - v0) - e * (e.dot(b - v0) / ee);
  return !(cp.squaredNorm() > 1e-20 * ee) || !(cq.squaredNorm() > 1e-20 * ee);
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_s >= 0.0) || !(lambda_l >= 0.0)) throw InputError("loss weights must be nonnegative");
}

double image_loss(const BlurFrame& rendered, const BlurFrame& target, PixelAdjoint* adjoint) {
  if (rendered.width != target.width || rendered.height != target.height ||
      rendered.rgb.size() != target.rgb.size() || rendered.alpha.size() != target.alpha.size()) {
    throw InputError("image_loss: rendered " + std::to_string(rendered.width) + "x" +
                     std::to_string(rendered.height) + " vs target " + std::to_string(target.width) + "x" +
                     std::to_string(target.height));
  }
  const double n_rgb = static_cast<double>(rendered.rgb.size());
  const double n_a = static_cast<double>(rendered.alpha.size());
  if (adjoint) *adjoint = PixelAdjoint::zeros(rendered.width, rendered.height);
  double l_rgb = 0.0, l_a = 0.0;
  for (std::size_t i = 0; i < rendered.rgb.size(); ++i) {
    const double d = rendered.rgb[i] - target.rgb[i];
    l_rgb += std::abs(d);
    if (adjoint) adjoint->d_rgb[i] = sign(d) / n_rgb;
  }
  for (std::size_t i = 0; i < rendered.alpha.size(); ++i) {
    const double d = rendered.alpha[i] - target.alpha[i];
    l_a += std::abs(d);
    if (adjoint) adjoint->d_alpha[i] = sign(d) / n_a;
  }
  return (n_rgb > 0 ? l_rgb / n_rgb : 0.0) + (n_a > 0 ? l_a / n_a : 0.0);
}

MeshRegularizer::MeshRegularizer(const Mesh& mesh) : template_(mesh.vertices) {
  mesh.validate();
  const int V = mesh.num_vertices();
  neighbors_.resize(V);
  // Edge (lo, hi) -> opposite vertex of each incident face, in face order.
  std::map<std::pair<int, int>, std::vector<std::array<int, 3>>> incident;
  for (const Face& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      const int a = f[i], b = f[(i + 1) % 3], c = f[(i + 2) % 3];
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
      incident[{std::min(a, b), std::max(a, b)}].push_back({a, b, c});
    }
  }
  for (int v = 0; v < V; ++v) {
    auto& n = neighbors_[v];
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    if (n.empty()) warnings_.push_back("vertex " + std::to_string(v) + " has no neighbors");
  }
  int non_manifold = 0;
  for (const auto& [key, list] : incident) {
    if (list.size() == 2) {
      edges_.push_back({list[0][0], list[0][1], list[0][2], list[1][2]});
    } else if (list.size() > 2) {
      ++non_manifold;
    }
  }
  if (non_manifold > 0) {
    warnings_.push_back(std::to_string(non_manifold) + " edges with more than two faces are ignored");
  }
}

double MeshRegularizer::laplacian(std::span<const Vec3> vertices, std::vector<Vec3>* grad) const {
  const std::size_t V = template_.size();
  if (vertices.size() != V) throw InputError("laplacian: vertex count differs from the template");
  std::vector<Vec3> r(V, Vec3::Zero());
  double loss = 0.0;
  for (std::size_t v = 0; v < V; ++v) {
    const auto& nb = neighbors_[v];
    if (nb.empty()) continue;
    Vec3 mean = Vec3::Zero();
    for (int n : nb) mean += vertices[n] - template_[n];
    mean /= static_cast<double>(nb.size());
    r[v] = (vertices[v] - template_[v]) - mean;
    loss += r[v].squaredNorm();
  }
  if (grad) {
    grad->assign(V, Vec3::Zero());
    for (std::size_t v = 0; v < V; ++v) {
      const auto& nb = neighbors_[v];
      if (nb.empty()) continue;
      (*grad)[v] += 2.0 * r[v];
      const Vec3 share = 2.0 * r[v] / static_cast<double>(nb.size());
      for (int n : nb) (*grad)[n] -= share;
    }
  }
  return loss;
}

double MeshRegularizer::smoothness(std::span<const Vec3> vertices, std::vector<Vec3>* grad) const {
  if (vertices.size() != template_.size()) throw InputError("smoothness: vertex count differs from the template");
  if (grad) grad->assign(vertices.size(), Vec3::Zero());
  double loss = 0.0;
  int skipped = 0;
  for (const Edge& e : edges_) {
    const Vec3& v0 = vertices[e.v0];
    const Vec3& v1 = vertices[e.v1];
    const Vec3& a = vertices[e.a];
    const Vec3& b = vertices[e.b];
    if (degenerate_edge(v0, v1, a, b)) {
      ++skipped;
      continue;
    }
    if (!grad) {
      loss += flatten_term<double>(v0, v1, a, b);
      continue;
    }
    ADVec x[4];
    const Vec3* src[4] = {&v0, &v1, &a, &b};
    for (int k = 0; k < 4; ++k) {
      for (int c = 0; c < 3; ++c) x[k][c] = AD((*src[k])[c], 12, k * 3 + c);
    }
    const AD term = flatten_term<AD>(x[0], x[1], x[2], x[3]);
    loss += term.value();
    const int ids[4] = {e.v0, e.v1, e.a, e.b};
    for (int k = 0; k < 4; ++k) (*grad)[ids[k]] += term.derivatives().segment<3>(k * 3);
  }
  last_skipped_ = skipped;
  return loss;
}

}  // namespace blurrast
