#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "blurrast/geometry.hpp"

namespace blurrast {
namespace {

double parse_double(std::string_view tok, int line) {
  double value = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("invalid number '" + std::string(tok) + "'", line);
  }
  return value;
}

// "7", "7/1", "7//3", "7/1/3"; negative indices count back from the end.
int parse_index(std::string_view tok, int n_vertices, int line) {
  const auto slash = tok.find('/');
  if (slash != std::string_view::npos) tok = tok.substr(0, slash);
  int value = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw ParseError("invalid face index '" + std::string(tok) + "'", line);
  }
  return value > 0 ? value - 1 : n_vertices + value;
}

}  // namespace

Mesh parse_obj(const std::string& text) {
  Mesh mesh;
  std::vector<int> face_lines;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::string tag;
    if (!(ls >> tag)) continue;

    std::vector<std::string> toks;
    for (std::string tok; ls >> tok;) toks.push_back(tok);

    if (tag == "v") {
      if (toks.size() != 3 && toks.size() != 4 && toks.size() != 6 && toks.size() != 7) {
        throw ParseError("vertex needs 3 coordinates (optionally followed by r g b)", line);
      }
      mesh.vertices.emplace_back(parse_double(toks[0], line), parse_double(toks[1], line),
                                 parse_double(toks[2], line));
      if (toks.size() >= 6) {
        const std::size_t o = toks.size() == 7 ? 4 : 3;
        mesh.colors.emplace_back(parse_double(toks[o], line), parse_double(toks[o + 1], line),
                                 parse_double(toks[o + 2], line));
      } else {
        mesh.colors.emplace_back(kDefaultGray, kDefaultGray, kDefaultGray);
      }
    } else if (tag == "f") {
      if (toks.size() < 3) throw ParseError("face needs at least 3 vertices", line);
      std::vector<int> idx;
      idx.reserve(toks.size());
      for (const auto& tok : toks) idx.push_back(parse_index(tok, mesh.num_vertices(), line));
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
        face_lines.push_back(line);
      }
    }
    // vt, vn, o, g, s, usemtl, mtllib: not needed for rendering.
  }

  const int n = mesh.num_vertices();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int i : mesh.faces[f]) {
      if (i < 0 || i >= n) {
        throw IndexError("face index " + std::to_string(i + 1) + " out of range for " +
                         std::to_string(n) + " vertices (line " + std::to_string(face_lines[f]) + ")");
      }
    }
  }
  mesh.validate();
  return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open OBJ file '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_obj(buf.str());
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write OBJ file '" + path.string() + "'");
  f << std::setprecision(17);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const Vec3& c = mesh.colors[i];
    f << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << ' ' << c.x() << ' ' << c.y() << ' '
      << c.z() << '\n';
  }
  for (const Face& face : mesh.faces) {
    f << "f " << face[0] + 1 << ' ' << face[1] + 1 << ' ' << face[2] + 1 << '\n';
  }
}

}  // namespace blurrast
