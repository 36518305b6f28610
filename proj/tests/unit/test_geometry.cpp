#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "blurrast/geometry.hpp"
#include "blurrast/mesh_gen.hpp"
#include "helpers.hpp"

using namespace blurrast;

namespace {

const char* kCubeObj = R"(# unit cube
v -0.5 -0.5 -0.5
v  0.5 -0.5 -0.5
v  0.5  0.5 -0.5
v -0.5  0.5 -0.5
v -0.5 -0.5  0.5
v  0.5 -0.5  0.5
v  0.5  0.5  0.5
v -0.5  0.5  0.5
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 4 8 7
f 4 7 3
f 1 5 8
f 1 8 4
f 2 3 7
f 2 7 6
)";

}  // namespace

TEST_CASE("load_obj: cube") {
  const Mesh m = parse_obj(kCubeObj);
  CHECK(m.num_vertices() == 8);
  CHECK(m.num_faces() == 12);
  CHECK(m.faces[0] == Face{0, 2, 1});
  for (const Vec3& c : m.colors) CHECK(c == Vec3(kDefaultGray, kDefaultGray, kDefaultGray));
}

TEST_CASE("load_obj: vertex colors and polygons") {
  const Mesh m = parse_obj("v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 1 1 0 0 0 1\nv 0 1 0 1 1 1\nf 1/1/1 2/2/2 3/3/3 4/4/4\n");
  CHECK(m.num_faces() == 2);
  CHECK(m.colors[1] == Vec3(0, 1, 0));
  const Mesh neg = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  CHECK(neg.faces[0] == Face{0, 1, 2});
}

TEST_CASE("load_obj: errors") {
  std::string bad = std::string(kCubeObj) + "f 1 2 9\n";
  CHECK_THROWS_AS(parse_obj(bad), IndexError);
  try {
    parse_obj("v 0 0 0\nv 1 x 0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_obj("v 0 0\n"), ParseError);
  CHECK_THROWS_AS(load_obj("/nonexistent/mesh.obj"), InputError);
}

TEST_CASE("load_obj: 1352-vertex sphere template") {
  const Mesh m = load_obj(std::filesystem::path(BLURRAST_TEST_DATA) / "sphere_1352.obj");
  CHECK(m.num_vertices() == 1352);
  CHECK(m.num_faces() == 2700);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("save_obj round trip keeps colors") {
  Mesh m = make_cow_proxy(1);
  m.colors[3] = Vec3(0.25, 0.5, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "blurrast_roundtrip.obj";
  save_obj(m, path);
  const Mesh r = load_obj(path);
  std::filesystem::remove(path);
  REQUIRE(r.num_vertices() == m.num_vertices());
  CHECK(r.faces == m.faces);
  for (int i = 0; i < m.num_vertices(); ++i) {
    CHECK((r.vertices[i] - m.vertices[i]).norm() < 1e-12);
    CHECK((r.colors[i] - m.colors[i]).norm() < 1e-12);
  }
}

TEST_CASE("mesh validation") {
  Mesh m = make_cube();
  CHECK_NOTHROW(m.validate());
  m.faces.push_back({0, 0, 1});
  CHECK_THROWS_AS(m.validate(), InputError);
  m = make_cube();
  m.colors.pop_back();
  CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("procedural meshes") {
  CHECK(make_icosahedron().num_faces() == 20);
  CHECK(make_icosphere(3).num_faces() == 1280);
  CHECK(make_icosphere(4).num_faces() == 5120);
  const Mesh uv = make_uv_sphere(25, 11);
  CHECK(uv.num_faces() == 500);
  CHECK(uv.num_vertices() == 25 * 10 + 2);
  // Closed and consistently oriented: every directed edge appears once and its
  // reverse appears once.
  for (const Mesh& m : {make_icosphere(2), make_cube(), make_cow_proxy(2), uv}) {
    std::map<std::pair<int, int>, int> count;
    for (const Face& f : m.faces) {
      for (int i = 0; i < 3; ++i) ++count[{f[i], f[(i + 1) % 3]}];
    }
    for (const auto& [e, n] : count) {
      CHECK(n == 1);
      CHECK(count.count({e.second, e.first}) == 1);
    }
  }
}

TEST_CASE("project: optical axis and border") {
  const Camera cam = Camera::from_spherical(2.232, 0.0, 0.0, 30.0, 128, 96);
  const std::vector<Vec3> origin{Vec3::Zero()};
  const ScreenVertex c = project(origin, cam)[0];
  CHECK(c.x == doctest::Approx(64.0).epsilon(1e-12));
  CHECK(c.y == doctest::Approx(48.0).epsilon(1e-12));
  CHECK(c.z == doctest::Approx(2.232).epsilon(1e-12));

  // View space (tan a, 0, 1) relative to the eye lands on the right border.
  const double tan_a = std::tan(cam.half_fov);
  const std::vector<Vec3> border{cam.eye + Vec3(tan_a, 0.0, 1.0)};
  const ScreenVertex b = project(border, cam)[0];
  CHECK(b.x == doctest::Approx(128.0).epsilon(1e-12));
  CHECK(b.y == doctest::Approx(48.0).epsilon(1e-12));
}

TEST_CASE("project: unit-norm object framed at d = 2.232") {
  const Camera cam = Camera::from_spherical(2.232, 0.0, 0.0);
  const auto sv = project(make_icosphere(3), cam);
  for (const ScreenVertex& v : sv) {
    CHECK(v.x > 0.0);
    CHECK(v.x < 128.0);
    CHECK(v.y > 0.0);
    CHECK(v.y < 128.0);
  }
}

TEST_CASE("project: behind camera") {
  const Camera cam = Camera::from_spherical(2.0, 0.0, 0.0);
  const std::vector<Vec3> pts{Vec3::Zero(), Vec3(0, 0, -3), Vec3(0, 0, -2)};
  try {
    project(pts, cam);
    FAIL("expected BehindCameraError");
  } catch (const BehindCameraError& e) {
    CHECK(e.vertices() == std::vector<int>{1, 2});
  }
}

TEST_CASE("projection_jacobian matches central differences") {
  const Camera cam = Camera::from_spherical(2.5, 20.0, 35.0, 25.0, 64, 48);
  const Vec3 p(0.3, -0.2, 0.4);
  const auto J = projection_jacobian(p, cam);
  const double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    Vec3 dp = Vec3::Zero();
    dp[a] = h;
    const std::vector<Vec3> pts{p + dp, p - dp};
    const auto sv = project(pts, cam);
    CHECK(J(0, a) == doctest::Approx((sv[0].x - sv[1].x) / (2 * h)).epsilon(1e-6));
    CHECK(J(1, a) == doctest::Approx((sv[0].y - sv[1].y) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("camera validation") {
  CHECK_THROWS_AS(Camera::from_spherical(2.0, 0.0, 0.0, 90.0), InputError);
  CHECK_THROWS_AS(Camera::from_spherical(2.0, 90.0, 0.0), InputError);
}

TEST_CASE("pose_at examples") {
  const Mesh m = make_icosahedron();
  const auto mid = pose_at(MotionTrajectory::translation_x(), m, 0.5);
  for (int i = 0; i < m.num_vertices(); ++i) CHECK((mid[i] - m.vertices[i]).norm() == 0.0);

  const auto r0 = pose_at(MotionTrajectory::rotation_y(), m, 0.0);
  const auto r1 = pose_at(MotionTrajectory::rotation_y(), m, 1.0);
  for (int i = 0; i < m.num_vertices(); ++i) CHECK((r0[i] - r1[i]).norm() < 1e-12);

  // Parabolic at t = 0.5: quarter turn about y plus lift (0, 0.5, 0).
  const Pose p = MotionTrajectory::parabolic().pose(0.5);
  const Vec3 x = p.apply(Vec3(1, 0, 0));
  CHECK((x - Vec3(0.0, 0.5, -1.0)).norm() < 1e-12);
  CHECK((p.apply(Vec3::Zero()) - Vec3(0.0, 0.5, 0.0)).norm() < 1e-15);
}

TEST_CASE("segment: keyframes") {
  const Mesh m = make_icosahedron();
  const Camera cam = Camera::from_spherical(2.232, 0.0, 0.0);

  const SegmentedMotion rot = segment(MotionTrajectory::rotation_y(), m, cam, 12, 3);
  CHECK(rot.keyframes.size() == 13);
  for (int b = 0; b <= 12; ++b) {
    const auto exact = project(pose_at(MotionTrajectory::rotation_y(), m, b / 12.0), cam);
    for (int i = 0; i < m.num_vertices(); ++i) {
      CHECK(rot.keyframes[b][i].x == doctest::Approx(exact[i].x).epsilon(1e-12));
    }
  }
  // 30 degree steps: a vertex on the +x axis ends up at 30 degrees.
  const Pose p1 = MotionTrajectory::rotation_y().pose(1.0 / 12.0);
  const Vec3 x1 = p1.apply(Vec3(1, 0, 0));
  CHECK(std::acos(x1.x()) == doctest::Approx(kPi / 6).epsilon(1e-12));

  const SegmentedMotion st = segment(MotionTrajectory::stationary(), m, cam, 4, 2);
  for (int b = 1; b <= 4; ++b) {
    for (int i = 0; i < m.num_vertices(); ++i) {
      CHECK(st.keyframes[b][i].x == st.keyframes[0][i].x);
      CHECK(st.keyframes[b][i].y == st.keyframes[0][i].y);
    }
  }
  CHECK_THROWS_AS(segment(MotionTrajectory::stationary(), m, cam, 0, 1), InputError);
}

TEST_CASE("segment: sample times") {
  SegmentedMotion s;
  s.samples_per_segment = 1;
  CHECK(s.sample_time(0) == 0.5);
  s.samples_per_segment = 5;
  CHECK(s.sample_times() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("segment: translation is exactly linear between keyframes") {
  const Mesh m = make_icosahedron();
  const Camera cam = Camera::from_spherical(3.0, 10.0, 0.0);
  const MotionTrajectory tr = MotionTrajectory::translation_x(0.6);
  const SegmentedMotion sm = segment(tr, m, cam, 1, 5);
  // Translation along world x seen from a camera on the z axis keeps depth
  // fixed, so screen motion is linear in t.
  for (double t : {0.1, 0.37, 0.5, 0.81}) {
    const auto exact = project(pose_at(tr, m, t), cam);
    for (int i = 0; i < m.num_vertices(); ++i) {
      const double x = sm.keyframes[0][i].x + t * (sm.keyframes[1][i].x - sm.keyframes[0][i].x);
      const double y = sm.keyframes[0][i].y + t * (sm.keyframes[1][i].y - sm.keyframes[0][i].y);
      CHECK(std::abs(x - exact[i].x) < 1e-9);
      CHECK(std::abs(y - exact[i].y) < 1e-9);
    }
  }
}

TEST_CASE("segment: rotation chord deviation within r(1 - cos(pi/S))") {
  const Mesh m = make_icosphere(1);
  const MotionTrajectory tr = MotionTrajectory::rotation_y();
  const int S = 12;
  for (const Vec3& v0 : m.vertices) {
    const double r = std::hypot(v0.x(), v0.z());
    const double bound = r * (1.0 - std::cos(kPi / S));
    double worst = 0.0;
    for (int s = 0; s < S; ++s) {
      const Vec3 a = tr.pose(double(s) / S).apply(v0);
      const Vec3 b = tr.pose(double(s + 1) / S).apply(v0);
      for (int k = 0; k <= 50; ++k) {
        const double u = k / 50.0;
        const Vec3 chord = a + u * (b - a);
        const Vec3 arc = tr.pose((s + u) / S).apply(v0);
        worst = std::max(worst, (chord - arc).norm());
      }
    }
    CHECK(worst <= bound + 1e-12);
    CHECK(worst >= 0.99 * bound);
  }
}

TEST_CASE("normalize and rotate helpers") {
  Mesh m = make_cow_proxy(1);
  normalize_max_norm(m, 1.0);
  double mx = 0.0;
  for (const Vec3& v : m.vertices) mx = std::max(mx, v.norm());
  CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(load_mesh_source("icosphere:x"), InputError);
}
