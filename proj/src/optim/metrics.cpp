#include <algorithm>
#include <cmath>
#include <limits>

#include "blurrast/optim.hpp"

namespace blurrast {
namespace {

// x coordinates where the line {(y, z)} crosses the mesh. Returns false when
// the line grazes an edge or vertex within `tol`.
bool crossings(const Mesh& mesh, double y, double z, double tol, std::vector<double>& xs) {
  xs.clear();
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const double e0 = (b.y() - a.y()) * (z - a.z()) - (b.z() - a.z()) * (y - a.y());
    const double e1 = (c.y() - b.y()) * (z - b.z()) - (c.z() - b.z()) * (y - b.y());
    const double e2 = (a.y() - c.y()) * (z - c.z()) - (a.z() - c.z()) * (y - c.y());
    const bool pos = e0 > 0.0 && e1 > 0.0 && e2 > 0.0;
    const bool neg = e0 < 0.0 && e1 < 0.0 && e2 < 0.0;
    const double sum = e0 + e1 + e2;
    if (std::abs(sum) <= tol) continue;  // face seen edge-on
    if (pos || neg) {
      if (std::abs(e0) <= tol || std::abs(e1) <= tol || std::abs(e2) <= tol) return false;
      xs.push_back((e1 * a.x() + e2 * b.x() + e0 * c.x()) / sum);
    } else if ((std::abs(e0) <= tol && (e1 * e2 >= 0.0)) || (std::abs(e1) <= tol && (e0 * e2 >= 0.0)) ||
               (std::abs(e2) <= tol && (e0 * e1 >= 0.0))) {
      return false;
    }
  }
  std::sort(xs.begin(), xs.end());
  return true;
}

}  // namespace

std::vector<std::uint8_t> voxelize(const Mesh& mesh, const Vec3& lo, double size, int res) {
  if (res < 2) throw InputError("voxel resolution must be >= 2");
  const double h = size / res;
  const double tol = 1e-12 * size * size;
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(res) * res * res, 0);
  std::vector<double> xs;
  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      double y = lo.y() + (j + 0.5) * h;
      double z = lo.z() + (k + 0.5) * h;
      int attempt = 0;
      while (!crossings(mesh, y, z, tol, xs)) {
        ++attempt;
        y += 1e-7 * h * attempt;
        z += 0.7e-7 * h * attempt;
        if (attempt > 64) throw NumericalError("voxelize: ray keeps grazing mesh edges");
      }
      for (int i = 0; i < res; ++i) {
        const double x = lo.x() + (i + 0.5) * h;
        const auto after = xs.end() - std::upper_bound(xs.begin(), xs.end(), x);
        occ[(static_cast<std::size_t>(k) * res + j) * res + i] = after % 2 == 1;
      }
    }
  }
  return occ;
}

double voxel_iou(const Mesh& a, const Mesh& b, int resolution) {
  if (resolution < 2) throw InputError("voxel resolution must be >= 2");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Mesh* m : {&a, &b}) {
    for (const Vec3& v : m->vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  if (!(hi.x() >= lo.x())) throw InputError("voxel_iou: both meshes are empty");
  const double size = (hi - lo).maxCoeff();
  if (!(size > 0.0)) throw InputError("voxel_iou: meshes have zero extent");
  const Vec3 corner = 0.5 * (lo + hi) - Vec3::Constant(0.5 * size);
  const auto va = voxelize(a, corner, size, resolution);
  const auto vb = voxelize(b, corner, size, resolution);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    inter += va[i] && vb[i];
    uni += va[i] || vb[i];
  }
  if (uni == 0) throw InputError("voxel_iou: union of occupancies is empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double psnr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw InputError("psnr: inputs must be non-empty and equal in size");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const BlurFrame& a, const BlurFrame& b) {
  if (a.width != b.width || a.height != b.height) throw InputError("psnr: frame sizes differ");
  std::vector<double> x(a.rgb), y(b.rgb);
  x.insert(x.end(), a.alpha.begin(), a.alpha.end());
  y.insert(y.end(), b.alpha.begin(), b.alpha.end());
  return psnr(x, y);
}

}  // namespace blurrast
