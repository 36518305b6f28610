#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "blurrast/mesh_gen.hpp"
#include "blurrast/optim.hpp"

using namespace blurrast;

namespace {

RecoveryProblem self_target_problem(int iterations) {
  RecoveryProblem p;
  p.template_mesh = make_icosphere(1);
  normalize_max_norm(p.template_mesh, 0.8);
  p.trajectory = MotionTrajectory::translation_x(0.5);
  p.samples_per_segment = 4;
  p.raster.threads = 1;
  p.iterations = iterations;
  p.batch_size = 2;
  p.seed = 7;
  for (double az : {0.0, 120.0, 240.0}) {
    p.views.push_back({Camera::from_spherical(2.232, 20.0, az, 30.0, 24, 24), {}});
  }
  const auto frames = render_views(p, p.template_mesh);
  for (std::size_t i = 0; i < frames.size(); ++i) p.views[i].target = frames[i];
  return p;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  AdamState s;
  std::vector<double> x{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  adam_step(s, x, g);
  adam_step(s, x, g);
  CHECK(x == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: scalar hand trace") {
  AdamState s;  // alpha 0.01, beta1 0.5, beta2 0.99, eps 1e-8
  std::vector<double> x{1.0};
  adam_step(s, x, std::vector<double>{0.4});
  // m = 0.2, v = 0.0016; mhat = 0.4, vhat = 0.16, step = 0.01 * 0.4 / (0.4 + 1e-8).
  CHECK(x[0] == doctest::Approx(1.0 - 0.01 * 0.4 / (0.4 + 1e-8)).epsilon(1e-15));

  adam_step(s, x, std::vector<double>{0.4});
  // m = 0.3, v = 0.003184; mhat = 0.3 / 0.75 = 0.4, vhat = 0.003184 / 0.0199 = 0.16.
  const double m = 0.5 * 0.2 + 0.5 * 0.4, v = 0.99 * 0.0016 + 0.01 * 0.16;
  const double mhat = m / (1 - 0.25), vhat = v / (1 - 0.99 * 0.99);
  CHECK(mhat == doctest::Approx(0.4));
  CHECK(vhat == doctest::Approx(0.16));
  const double expect = 1.0 - 2 * 0.01 * 0.4 / (0.4 + 1e-8);
  CHECK(x[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(s.step == 2);
}

TEST_CASE("adam: non-finite gradient aborts, buffers checked") {
  AdamState s;
  std::vector<double> x{1.0, 2.0};
  CHECK_THROWS_AS(adam_step(s, x, std::vector<double>{0.0, std::nan("")}), NumericalError);
  CHECK(x == std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(adam_step(s, x, std::vector<double>{0.0}), InputError);
  AdamState bad;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("voxel_iou: identical, disjoint, symmetric") {
  const Mesh a = make_icosphere(2);
  CHECK(voxel_iou(a, a) == 1.0);
  Mesh b = a;
  for (Vec3& v : b.vertices) v.x() += 3.0;
  CHECK(voxel_iou(a, b) == 0.0);
  Mesh c = make_cow_proxy(2);
  CHECK(voxel_iou(a, c) == voxel_iou(c, a));
  CHECK_THROWS_AS(voxel_iou(Mesh{}, Mesh{}), InputError);
  CHECK_THROWS_AS(voxel_iou(a, a, 1), InputError);
}

TEST_CASE("voxel_iou: cube versus half-scale cube") {
  const Mesh big = make_cube(0.5);
  const Mesh small = make_cube(0.25);
  CHECK(std::abs(voxel_iou(big, small, 32) - 0.125) <= 0.02);
  CHECK(std::abs(voxel_iou(big, small, 128) - 0.125) <= 0.005);
}

TEST_CASE("voxelize: grazing rays through shared edges") {
  // Cube faces meet along edges through voxel-center rows when the grid is aligned.
  const Mesh cube = make_cube(0.5);
  const auto occ = voxelize(cube, Vec3(-1, -1, -1), 2.0, 4);
  int n = 0;
  for (auto o : occ) n += o;
  CHECK(n == 8);
}

TEST_CASE("psnr") {
  const std::vector<double> a{0.1, 0.5, 0.9, 0.3};
  CHECK(std::isinf(psnr(a, a)));
  std::vector<double> b = a;
  for (double& v : b) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(500), y(500);
  double mse = 0.0;
  for (int i = 0; i < 500; ++i) {
    x[i] = u(rng);
    y[i] = u(rng);
    mse += (x[i] - y[i]) * (x[i] - y[i]);
  }
  CHECK(psnr(x, y) == doctest::Approx(-10.0 * std::log10(mse / 500)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(x, a), InputError);
}

TEST_CASE("recover_translation: fixed point") {
  // Without regularizers the template is a stationary point: every adjoint is sign(0) = 0.
  const RecoveryProblem p = self_target_problem(60);
  const RecoveryResult r = recover_translation(p, LossWeights{0.0, 0.0});
  REQUIRE(r.history.size() == 60);
  for (const IterationRecord& rec : r.history) CHECK(rec.total == 0.0);
  std::vector<double> smooth;
  for (std::size_t i = 19; i < r.history.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = i - 19; k <= i; ++k) s += r.history[k].total;
    smooth.push_back(s / 20.0);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] <= smooth[i - 1]);
  CHECK(r.mesh.vertices == p.template_mesh.vertices);
  CHECK(voxel_iou(r.mesh, p.template_mesh) == 1.0);
}

TEST_CASE("recover_translation: regularized run starts at zero image loss") {
  const RecoveryProblem p = self_target_problem(20);
  const RecoveryResult r = recover_translation(p, LossWeights{});
  CHECK(r.history[0].l_img == 0.0);
  CHECK(r.history[0].l_l == 0.0);
  CHECK(r.history[0].total == doctest::Approx(LossWeights{}.lambda_s * r.history[0].l_s));
  CHECK(voxel_iou(r.mesh, p.template_mesh) >= 0.9);
}

TEST_CASE("recover_translation: same seed, same history") {
  const RecoveryProblem p = self_target_problem(6);
  const RecoveryResult a = recover_translation(p, LossWeights{});
  const RecoveryResult b = recover_translation(p, LossWeights{});
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].total == b.history[i].total);
    CHECK(a.history[i].l_img == b.history[i].l_img);
  }
  CHECK(a.mesh.vertices == b.mesh.vertices);
}

TEST_CASE("recover_translation: loss decreases toward a different target") {
  RecoveryProblem p = self_target_problem(25);
  Mesh target = make_cube(0.45);
  const auto frames = render_views(p, target);
  for (std::size_t i = 0; i < frames.size(); ++i) p.views[i].target = frames[i];
  int calls = 0;
  const RecoveryResult r = recover_translation(p, LossWeights{}, [&](const IterationRecord&, const Mesh&) { ++calls; });
  CHECK(calls == 25);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 5; ++i) {
    first += r.history[i].l_img;
    last += r.history[20 + i].l_img;
  }
  CHECK(last < first);
  for (const Vec3& c : r.mesh.colors) {
    CHECK(c.minCoeff() >= 0.0);
    CHECK(c.maxCoeff() <= 1.0);
  }
}

TEST_CASE("RecoveryProblem validation") {
  RecoveryProblem p = self_target_problem(1);
  p.views.clear();
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("recover_translation: bounded vertex parametrization") {
  RecoveryProblem p = self_target_problem(25);
  p.vertex_param = VertexParam::kBounded;
  const RecoveryResult still = recover_translation(p, LossWeights{0.0, 0.0});
  for (std::size_t v = 0; v < p.template_mesh.vertices.size(); ++v) {
    CHECK((still.mesh.vertices[v] - p.template_mesh.vertices[v]).norm() < 1e-12);
  }

  const auto frames = render_views(p, make_cube(0.45));
  for (std::size_t i = 0; i < frames.size(); ++i) p.views[i].target = frames[i];
  const RecoveryResult r = recover_translation(p, LossWeights{});
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 5; ++i) {
    first += r.history[i].l_img;
    last += r.history[20 + i].l_img;
  }
  CHECK(last < first);
  for (const Vec3& v : r.mesh.vertices) CHECK(v.cwiseAbs().maxCoeff() < 1.0);

  p.template_mesh = make_cube(1.0);
  CHECK_THROWS_AS(p.validate(), InputError);
}
