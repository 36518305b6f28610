#include "blurrast/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blurrast/image_io.hpp"
#include "blurrast/mesh_gen.hpp"

namespace blurrast {
namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InputError(where + ": unknown key '" + key + "'");
  }
}

void check_version(const json& j, const std::string& where) {
  if (!j.contains("schema_version")) throw InputError(where + ": missing schema_version");
  if (j["schema_version"] != kSchemaVersion) {
    throw InputError(where + ": unsupported schema_version " + j["schema_version"].dump());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("key '") + key + "': " + e.what());
  }
}

std::string resolve(const std::string& source, const std::filesystem::path& base) {
  // Built-in generator names pass through; anything path-like is made relative to base.
  const bool builtin = source.rfind("icosahedron", 0) == 0 || source.rfind("icosphere:", 0) == 0 ||
                       source.rfind("uvsphere:", 0) == 0 || source == "cube" || source.rfind("cow", 0) == 0;
  if (builtin) return source;
  const std::filesystem::path p(source);
  return p.is_absolute() ? source : (base / p).string();
}

Camera parse_camera(const json& j) {
  check_keys(j, {"distance", "elevation_deg", "azimuth_deg", "half_fov_deg", "width", "height"}, "camera");
  return Camera::from_spherical(get_or(j, "distance", 2.232), get_or(j, "elevation_deg", 0.0),
                                get_or(j, "azimuth_deg", 0.0), get_or(j, "half_fov_deg", 30.0),
                                get_or(j, "width", 128), get_or(j, "height", 128));
}

MotionTrajectory parse_trajectory(const json& j) {
  check_keys(j, {"kind", "angle_deg", "span"}, "trajectory");
  MotionTrajectory t;
  t.kind = trajectory_kind_from_string(get_or<std::string>(j, "kind", "static"));
  const double default_angle = t.kind == TrajectoryKind::kParabolic ? 180.0 : 360.0;
  t.rotation_angle = get_or(j, "angle_deg", default_angle) * kPi / 180.0;
  t.translation_span = get_or(j, "span", 1.0);
  return t;
}

RasterConfig parse_raster(const json& j) {
  check_keys(j, {"delta", "solver", "cutoff", "time_windows", "threads"}, "raster");
  RasterConfig rc;
  rc.delta = get_or(j, "delta", rc.delta);
  const std::string solver = get_or<std::string>(j, "solver", "fast");
  if (solver == "fast") {
    rc.solver = Solver::kFast;
  } else if (solver == "naive") {
    rc.solver = Solver::kNaive;
  } else {
    throw InputError("raster: unknown solver '" + solver + "'");
  }
  rc.cutoff_enabled = get_or(j, "cutoff", true);
  rc.time_windows = get_or(j, "time_windows", true);
  rc.threads = get_or(j, "threads", 0);
  rc.validate();
  return rc;
}

Mesh colored_mesh(const json& j, const std::string& source) {
  Mesh m = load_mesh_source(source);
  if (j.contains("color")) {
    const auto c = get_or<std::vector<double>>(j, "color", {});
    if (c.size() != 3) throw InputError("color must have three components");
    set_uniform_color(m, Vec3(c[0], c[1], c[2]));
  }
  return m;
}

}  // namespace

Camera camera_from_json_text(const std::string& text) { return parse_camera(parse_json(text, "camera")); }

void apply_rotation(SceneConfig& config) {
  if (!config.rotation_seed) return;
  Mesh base = load_mesh_source(config.mesh_source);
  base.colors = config.scene.mesh.colors;
  config.scene.mesh = random_rotate_scene(base, *config.rotation_seed).mesh;
}

SceneConfig parse_scene(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "scene");
  check_keys(j, {"schema_version", "mesh", "color", "rotation_seed", "camera", "trajectory", "n_segments",
                 "samples_per_segment", "raster"},
             "scene");
  check_version(j, "scene");
  SceneConfig cfg;
  cfg.mesh_source = resolve(get_or<std::string>(j, "mesh", "icosahedron"), base_dir);
  cfg.scene.mesh = colored_mesh(j, cfg.mesh_source);
  if (j.contains("rotation_seed")) cfg.rotation_seed = get_or<std::uint64_t>(j, "rotation_seed", 0);
  cfg.scene.camera = parse_camera(j.value("camera", json::object()));
  cfg.scene.trajectory = parse_trajectory(j.value("trajectory", json::object()));
  cfg.scene.n_segments = get_or(j, "n_segments", 1);
  cfg.scene.samples_per_segment = get_or(j, "samples_per_segment", 1);
  cfg.scene.raster = parse_raster(j.value("raster", json::object()));
  if (cfg.scene.n_segments < 1 || cfg.scene.samples_per_segment < 1) {
    throw InputError("scene: n_segments and samples_per_segment must be >= 1");
  }
  apply_rotation(cfg);
  return cfg;
}

SceneConfig load_scene(const std::filesystem::path& path) {
  return parse_scene(read_text(path), path.parent_path());
}

ProblemConfig parse_problem(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "problem");
  check_keys(j,
             {"schema_version", "template", "template_radius", "template_color", "target_mesh", "target_color",
              "views", "camera_ring", "trajectory", "n_segments", "samples_per_segment", "raster", "iterations",
              "batch_size", "seed", "learning_rate", "beta1", "beta2", "lambda_s", "lambda_l", "checkpoint_every",
              "vertex_param"},
             "problem");
  check_version(j, "problem");
  ProblemConfig cfg;
  RecoveryProblem& p = cfg.problem;
  cfg.template_source = resolve(get_or<std::string>(j, "template", "icosphere:3"), base_dir);
  p.template_mesh = load_mesh_source(cfg.template_source);
  if (j.contains("template_radius")) normalize_max_norm(p.template_mesh, get_or(j, "template_radius", 1.0));
  if (j.contains("template_color")) {
    const auto c = get_or<std::vector<double>>(j, "template_color", {});
    if (c.size() != 3) throw InputError("template_color must have three components");
    set_uniform_color(p.template_mesh, Vec3(c[0], c[1], c[2]));
  }
  p.trajectory = parse_trajectory(j.value("trajectory", json::object()));
  p.n_segments = get_or(j, "n_segments", 1);
  p.samples_per_segment = get_or(j, "samples_per_segment", 8);
  p.raster = parse_raster(j.value("raster", json::object()));
  p.iterations = get_or(j, "iterations", 500);
  p.batch_size = get_or(j, "batch_size", 16);
  p.seed = get_or<std::uint64_t>(j, "seed", 0);
  p.learning_rate = get_or(j, "learning_rate", 0.01);
  p.beta1 = get_or(j, "beta1", 0.5);
  p.beta2 = get_or(j, "beta2", 0.99);
  cfg.weights.lambda_s = get_or(j, "lambda_s", 3e-2);
  cfg.weights.lambda_l = get_or(j, "lambda_l", 3e-4);
  cfg.checkpoint_every = get_or(j, "checkpoint_every", 100);
  const std::string vp = get_or<std::string>(j, "vertex_param", "direct");
  if (vp == "direct") {
    p.vertex_param = VertexParam::kDirect;
  } else if (vp == "bounded") {
    p.vertex_param = VertexParam::kBounded;
  } else {
    throw InputError("problem: unknown vertex_param '" + vp + "'");
  }

  if (j.contains("target_mesh")) {
    cfg.target_source = resolve(get_or<std::string>(j, "target_mesh", ""), base_dir);
    Mesh target = load_mesh_source(cfg.target_source);
    normalize_max_norm(target, 1.0);
    if (j.contains("target_color")) {
      const auto c = get_or<std::vector<double>>(j, "target_color", {});
      if (c.size() != 3) throw InputError("target_color must have three components");
      set_uniform_color(target, Vec3(c[0], c[1], c[2]));
    }
    cfg.target_mesh = std::move(target);
  }

  std::vector<std::pair<Camera, std::string>> views;
  if (j.contains("camera_ring")) {
    const json& r = j["camera_ring"];
    check_keys(r, {"count", "distance", "elevations_deg", "half_fov_deg", "width", "height"}, "camera_ring");
    const int count = get_or(r, "count", 8);
    const auto elev = get_or<std::vector<double>>(r, "elevations_deg", {30.0, -30.0});
    if (count < 1 || elev.empty()) throw InputError("camera_ring needs count >= 1 and at least one elevation");
    for (int i = 0; i < count; ++i) {
      views.emplace_back(Camera::from_spherical(get_or(r, "distance", 2.232), elev[i % elev.size()],
                                                360.0 * i / count, get_or(r, "half_fov_deg", 30.0),
                                                get_or(r, "width", 64), get_or(r, "height", 64)),
                         "");
    }
  }
  if (j.contains("views")) {
    for (const json& v : j["views"]) {
      check_keys(v, {"camera", "image"}, "view");
      std::string image = get_or<std::string>(v, "image", "");
      if (!image.empty()) image = resolve(image, base_dir);
      views.emplace_back(parse_camera(v.value("camera", json::object())), image);
    }
  }
  if (views.empty()) throw InputError("problem: no views (give 'views' or 'camera_ring')");
  for (auto& [cam, image] : views) {
    RecoveryView rv;
    rv.camera = cam;
    if (!image.empty()) {
      rv.target = load_image(image);
    } else if (cfg.target_mesh) {
      const SegmentedMotion m = segment(p.trajectory, *cfg.target_mesh, cam, p.n_segments, p.samples_per_segment);
      rv.target = render_blur(m, *cfg.target_mesh, p.raster);
    } else {
      throw InputError("problem: view without image and no target_mesh to render it from");
    }
    p.views.push_back(std::move(rv));
  }
  p.validate();
  cfg.weights.validate();
  if (cfg.checkpoint_every < 0) throw InputError("checkpoint_every must be >= 0");
  return cfg;
}

ProblemConfig load_problem(const std::filesystem::path& path) {
  return parse_problem(read_text(path), path.parent_path());
}

BenchScenario parse_bench(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "bench");
  check_keys(j, {"schema_version", "mesh", "sample_counts", "width", "height", "repetitions", "warmup", "mode",
                 "seed", "threads", "delta"},
             "bench");
  check_version(j, "bench");
  BenchScenario s;
  s.mesh_source = resolve(get_or<std::string>(j, "mesh", s.mesh_source), base_dir);
  s.sample_counts = get_or(j, "sample_counts", s.sample_counts);
  s.width = get_or(j, "width", s.width);
  s.height = get_or(j, "height", s.height);
  s.repetitions = get_or(j, "repetitions", s.repetitions);
  s.warmup = get_or(j, "warmup", s.warmup);
  const std::string mode = get_or<std::string>(j, "mode", "forward+backward");
  if (mode == "forward") {
    s.mode = BenchMode::kForward;
  } else if (mode == "forward+backward") {
    s.mode = BenchMode::kForwardBackward;
  } else {
    throw InputError("bench: unknown mode '" + mode + "'");
  }
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.threads = get_or(j, "threads", s.threads);
  s.delta = get_or(j, "delta", s.delta);
  s.validate();
  return s;
}

BenchScenario load_bench(const std::filesystem::path& path) { return parse_bench(read_text(path), path.parent_path()); }

}  // namespace blurrast
