#include "blurrast/mesh_gen.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <string>

namespace blurrast {
namespace {

void fill_gray(Mesh& m) { m.colors.assign(m.vertices.size(), Vec3::Constant(kDefaultGray)); }

// Flip faces whose winding points inward (normal . centroid < 0). Valid for
// star-shaped meshes around the origin, which is all we generate.
void orient_outward(Mesh& m) {
  for (Face& f : m.faces) {
    const Vec3& a = m.vertices[f[0]];
    const Vec3& b = m.vertices[f[1]];
    const Vec3& c = m.vertices[f[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(f[1], f[2]);
  }
}

}  // namespace

Mesh make_icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  m.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  orient_outward(m);
  m.colors.resize(m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    m.colors[i] = (m.vertices[i] * 0.5 + Vec3::Constant(0.5)).cwiseMax(0.0).cwiseMin(1.0);
  }
  return m;
}

Mesh make_icosphere(int level) {
  if (level < 0) throw InputError("icosphere level must be >= 0");
  Mesh m = make_icosahedron();
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const int idx = m.num_vertices() - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  fill_gray(m);
  return m;
}

Mesh make_uv_sphere(int slices, int stacks) {
  if (slices < 3 || stacks < 2) throw InputError("uv sphere needs slices >= 3 and stacks >= 2");
  Mesh m;
  m.vertices.emplace_back(0.0, 1.0, 0.0);
  for (int i = 1; i < stacks; ++i) {
    const double theta = kPi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double phi = 2.0 * kPi * j / slices;
      m.vertices.emplace_back(std::sin(theta) * std::cos(phi), std::cos(theta),
                              std::sin(theta) * std::sin(phi));
    }
  }
  m.vertices.emplace_back(0.0, -1.0, 0.0);
  const int south = m.num_vertices() - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * slices + (j % slices); };
  for (int j = 0; j < slices; ++j) m.faces.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      m.faces.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j)});
      m.faces.push_back({ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  }
  for (int j = 0; j < slices; ++j) m.faces.push_back({south, ring(stacks - 1, j), ring(stacks - 1, j + 1)});
  orient_outward(m);
  fill_gray(m);
  return m;
}

Mesh make_cube(double h) {
  Mesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h);
  }
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  orient_outward(m);
  m.colors.resize(8);
  for (int i = 0; i < 8; ++i) {
    m.colors[i] = Vec3((i & 1) ? 0.9 : 0.2, (i & 2) ? 0.8 : 0.3, (i & 4) ? 0.7 : 0.25);
  }
  return m;
}

Mesh make_cow_proxy(int level) {
  Mesh m = make_icosphere(level);
  const Vec3 head = Vec3(1.0, 0.45, 0.0).normalized();
  const Vec3 legs[4] = {Vec3(0.55, -1.0, 0.45).normalized(), Vec3(0.55, -1.0, -0.45).normalized(),
                        Vec3(-0.55, -1.0, 0.45).normalized(), Vec3(-0.55, -1.0, -0.45).normalized()};
  const Vec3 tail = Vec3(-1.0, 0.25, 0.0).normalized();
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    const Vec3 d = m.vertices[i];
    const double body = 1.0 / std::sqrt(d.x() * d.x() / (1.0 * 1.0) + d.y() * d.y() / (0.55 * 0.55) +
                                        d.z() * d.z() / (0.5 * 0.5));
    double r = body + 0.35 * std::exp(-(d - head).squaredNorm() / 0.06) +
               0.2 * std::exp(-(d - tail).squaredNorm() / 0.01);
    for (const Vec3& l : legs) r += 0.55 * std::exp(-(d - l).squaredNorm() / 0.03);
    m.vertices[i] = d * r;

    // Patchy black-and-white coat with a pink muzzle.
    const double patch = std::sin(5.0 * d.x() + 1.3) * std::cos(4.0 * d.z() - 0.7) + 0.4 * d.y();
    Vec3 c = patch > 0.25 ? Vec3(0.12, 0.1, 0.1) : Vec3(0.92, 0.9, 0.88);
    if ((d - head).squaredNorm() < 0.03) c = Vec3(0.95, 0.6, 0.65);
    m.colors[i] = c;
  }
  normalize_max_norm(m, 1.0);
  return m;
}

namespace {

int parse_count(const std::string& source, const std::string& text) {
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw InputError("bad number '" + text + "' in mesh source '" + source + "'");
  }
  return value;
}

}  // namespace

Mesh load_mesh_source(const std::string& source) {
  auto after = [&](const std::string& prefix) { return parse_count(source, source.substr(prefix.size())); };
  if (source == "icosahedron") return make_icosahedron();
  if (source == "cube") return make_cube();
  if (source == "cow") return make_cow_proxy();
  if (source.rfind("cow:", 0) == 0) return make_cow_proxy(after("cow:"));
  if (source.rfind("icosphere:", 0) == 0) return make_icosphere(after("icosphere:"));
  if (source.rfind("uvsphere:", 0) == 0) {
    const std::string dims = source.substr(std::string("uvsphere:").size());
    const auto x = dims.find('x');
    if (x == std::string::npos) throw InputError("uvsphere source must look like uvsphere:<slices>x<stacks>");
    return make_uv_sphere(parse_count(source, dims.substr(0, x)), parse_count(source, dims.substr(x + 1)));
  }
  return load_obj(source);
}

void normalize_max_norm(Mesh& mesh, double radius) {
  double max_norm = 0.0;
  for (const Vec3& v : mesh.vertices) max_norm = std::max(max_norm, v.norm());
  if (max_norm <= 0.0) return;
  const double s = radius / max_norm;
  for (Vec3& v : mesh.vertices) v *= s;
}

void rotate_x(Mesh& mesh, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  for (Vec3& v : mesh.vertices) v = Vec3(v.x(), c * v.y() - s * v.z(), s * v.y() + c * v.z());
}

void set_uniform_color(Mesh& mesh, const Vec3& color) { mesh.colors.assign(mesh.vertices.size(), color); }

}  // namespace blurrast
