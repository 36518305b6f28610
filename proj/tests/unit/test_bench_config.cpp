#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "blurrast/config.hpp"
#include "blurrast/mesh_gen.hpp"

using namespace blurrast;
namespace fs = std::filesystem;

TEST_CASE("bench scenario validation") {
  BenchScenario s;
  CHECK_NOTHROW(s.validate());
  s.repetitions = 1;
  CHECK_THROWS_AS(s.validate(), InputError);
  s = BenchScenario{};
  s.sample_counts = {1, 10, 10};
  CHECK_THROWS_AS(s.validate(), InputError);
  s.sample_counts = {1, 10};
  CHECK_THROWS_AS(s.validate(), InputError);
  s.sample_counts = {0, 10, 20};
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("random_rotate_scene: seeded, normalized, both signs") {
  const Mesh m = make_cow_proxy(1);
  const BenchScene a = random_rotate_scene(m, 9), b = random_rotate_scene(m, 9);
  CHECK(a.angle_deg == b.angle_deg);
  CHECK(a.mesh.vertices == b.mesh.vertices);
  double max_norm = 0.0;
  for (const Vec3& v : a.mesh.vertices) max_norm = std::max(max_norm, v.norm());
  CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-6));
  int pos = 0, neg = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double ang = random_rotate_scene(m, seed).angle_deg;
    CHECK(std::abs(ang) <= 90.0);
    (ang > 0 ? pos : neg)++;
  }
  CHECK(pos > 0);
  CHECK(neg > 0);
}

TEST_CASE("ls_slope") {
  CHECK(ls_slope({1, 2, 3, 4}, {3, 5, 7, 9}) == doctest::Approx(2.0));
  CHECK(ls_slope({0, 1, 2}, {1, 0, 2}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ls_slope({1}, {1}), InputError);
  CHECK_THROWS_AS(ls_slope({2, 2}, {1, 3}), InputError);
}

TEST_CASE("run_bench: small scenario") {
  BenchScenario s;
  s.mesh_source = "icosphere:1";
  s.sample_counts = {1, 16, 64};
  s.width = s.height = 24;
  s.repetitions = 3;
  s.warmup = 1;
  s.mode = BenchMode::kForward;
  const BenchResult r = run_bench(s);
  CHECK(r.points.size() == 6);
  CHECK(r.faces == 80);
  for (Solver solver : {Solver::kFast, Solver::kNaive}) {
    CHECK(r.at(solver, 1).median_ms < r.at(solver, 64).median_ms);
    CHECK(r.at(solver, 64).min_ms <= r.at(solver, 64).median_ms);
  }
  CHECK(r.naive_slope > 0.0);
  CHECK(r.to_csv().rfind("solver,samples,median_ms,min_ms,reps,threads\n", 0) == 0);
  const std::string json = r.to_json();
  CHECK(json.find("\"speedup_by_samples\"") != std::string::npos);
  CHECK(json.find("\"slope_ratio\"") != std::string::npos);
  CHECK_THROWS_AS(r.at(Solver::kFast, 2), InputError);
}

TEST_CASE("config: bench files") {
  const BenchScenario q = load_bench(fs::path(BLURRAST_REPO_DATA) / "bench" / "quick.json");
  CHECK(q.mesh_source == "icosphere:2");
  CHECK(q.mode == BenchMode::kForward);
  CHECK_THROWS_AS(parse_bench(R"({"schema_version": 1, "repetitions": 1})"), InputError);
  CHECK_THROWS_AS(parse_bench(R"({"schema_version": 1, "mode": "sideways"})"), InputError);
  CHECK_THROWS_AS(parse_bench(R"({"schema_version": 1, "reps": 5})"), InputError);
}

TEST_CASE("config: scene parse errors") {
  CHECK_NOTHROW(parse_scene(R"({"schema_version": 1, "mesh": "cube"})"));
  CHECK_THROWS_AS(parse_scene(R"({"mesh": "cube"})"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 2, "mesh": "cube"})"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 1, "mesh": "cube", "colour": [1, 0, 0]})"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 1, "raster": {"solver": "slow"}})"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 1, "n_segments": 0})"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 1, "mesh": "cube", "color": [1, 0]})"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 1, )"), InputError);
  CHECK_THROWS_AS(parse_scene(R"({"schema_version": 1, "camera": {"width": "wide"}})"), InputError);
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), InputError);
}

TEST_CASE("config: scene values and relative mesh paths") {
  const fs::path dir = fs::temp_directory_path() / "blurrast_unit_config";
  fs::create_directories(dir / "meshes");
  {
    std::ofstream(dir / "meshes" / "tri.obj") << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    std::ofstream(dir / "scene.json") << R"({"schema_version": 1, "mesh": "meshes/tri.obj",
      "color": [0.2, 0.4, 0.6], "samples_per_segment": 7,
      "trajectory": {"kind": "rotation-y", "angle_deg": 90},
      "raster": {"delta": 0.001, "solver": "naive", "threads": 2}})";
  }
  const SceneConfig c = load_scene(dir / "scene.json");
  CHECK(c.scene.mesh.num_faces() == 1);
  CHECK(c.scene.mesh.colors[0].isApprox(Vec3(0.2, 0.4, 0.6)));
  CHECK(c.scene.samples_per_segment == 7);
  CHECK(c.scene.trajectory.rotation_angle == doctest::Approx(kPi / 2));
  CHECK(c.scene.raster.solver == Solver::kNaive);
  CHECK(c.scene.raster.delta == 1e-3);
  CHECK(c.scene.raster.threads == 2);
}

TEST_CASE("config: bundled files load") {
  const fs::path d(BLURRAST_REPO_DATA);
  for (const char* name : {"icosahedron_rotation", "gradcheck_icosahedron", "static_cube", "translation_sphere",
                           "cow_parabolic"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_scene(d / "scenes" / (std::string(name) + ".json")));
  }
  CHECK_NOTHROW(load_bench(d / "bench" / "default.json"));
}

TEST_CASE("config: problem parse errors") {
  CHECK_THROWS_AS(parse_problem(R"({"schema_version": 1, "template": "icosphere:1"})"), InputError);
  CHECK_THROWS_AS(parse_problem(R"({"schema_version": 1, "template": "icosphere:1", "target_mesh": "cube",
                                    "camera_ring": {"count": 0}})"),
                  InputError);
}
