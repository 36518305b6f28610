// blurrast: render, optimize, bench and gradcheck front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "blurrast/config.hpp"
#include "blurrast/image_io.hpp"
#include "blurrast/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blurrast;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> samples;
  std::optional<int> segments;
  std::optional<double> delta;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw InputError("'" + p.string() + "': invalid JSON: " + e.what());
  }
}

// Flags win over file values; they are written into the JSON before parsing so
// that derived data (e.g. rendered targets) sees them too.
void apply_overrides(json& j, const Overrides& o, const char* seed_key, bool raster_nested) {
  if (o.seed) j[seed_key] = *o.seed;
  if (o.samples) j["samples_per_segment"] = *o.samples;
  if (o.segments) j["n_segments"] = *o.segments;
  if (raster_nested) {
    if (o.threads) j["raster"]["threads"] = *o.threads;
    if (o.delta) j["raster"]["delta"] = *o.delta;
  } else {
    if (o.threads) j["threads"] = *o.threads;
    if (o.delta) j["delta"] = *o.delta;
  }
}

fs::path ensure_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw InputError("cannot create output directory '" + dir + "'");
  return p;
}

void emit(const fs::path& p) { std::cout << p.string() << '\n'; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << text;
}

int cmd_render(const std::string& file, const std::string& out_dir, const Overrides& o, bool grad) {
  json j = load_json(file);
  apply_overrides(j, o, "rotation_seed", true);
  const SceneConfig cfg = parse_scene(j.dump(), fs::path(file).parent_path());
  const fs::path out = ensure_dir(out_dir);
  const BlurFrame frame = cfg.scene.render(false);
  write_png(out / "render.png", frame);
  write_rfi(out / "render.rfi", to_rfi(frame));
  emit(out / "render.png");
  emit(out / "render.rfi");
  if (grad) {
    const GradImage g = grad_image(cfg.scene, mean_alpha_loss(), GradAxis::kX);
    write_png_rgba8(out / "grad_x.png", g.width, g.height, g.rgba);
    RfiImage raw;
    raw.width = g.width;
    raw.height = g.height;
    raw.channels = 1;
    raw.data.assign(g.value.begin(), g.value.end());
    write_rfi(out / "grad_x.rfi", raw);
    emit(out / "grad_x.png");
    emit(out / "grad_x.rfi");
  }
  return 0;
}

int cmd_optimize(const std::string& file, const std::string& out_dir, const Overrides& o,
                 std::optional<int> iterations) {
  json j = load_json(file);
  apply_overrides(j, o, "seed", true);
  if (iterations) j["iterations"] = *iterations;
  const ProblemConfig cfg = parse_problem(j.dump(), fs::path(file).parent_path());
  const fs::path out = ensure_dir(out_dir);
  for (const std::string& w : MeshRegularizer(cfg.problem.template_mesh).warnings()) {
    std::cerr << "warning: " << w << '\n';
  }

  std::vector<fs::path> checkpoints;
  const RecoveryResult res = recover_translation(
      cfg.problem, cfg.weights, [&](const IterationRecord& r, const Mesh& mesh) {
        if (r.iter % 10 == 0) {
          std::printf("iter %d  loss %.6f  wall %.0f ms\n", r.iter, r.total, r.wall_ms);
          std::fflush(stdout);
        }
        if (cfg.checkpoint_every > 0 && r.iter > 0 && r.iter % cfg.checkpoint_every == 0) {
          char name[64];
          std::snprintf(name, sizeof(name), "checkpoint_%05d.obj", r.iter);
          save_obj(mesh, out / name);
          checkpoints.push_back(out / name);
        }
      });

  save_obj(res.mesh, out / "mesh_final.obj");
  std::ostringstream csv;
  csv << "iter,L_img,L_s,L_L,total,wall_ms\n";
  csv.precision(10);
  for (const IterationRecord& r : res.history) {
    csv << r.iter << ',' << r.l_img << ',' << r.l_s << ',' << r.l_l << ',' << r.total << ',' << r.wall_ms << '\n';
  }
  write_text(out / "loss_history.csv", csv.str());

  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["iterations"] = cfg.problem.iterations;
  if (!res.history.empty()) {
    summary["initial_total"] = res.history.front().total;
    summary["final_total"] = res.history.back().total;
  }
  const std::vector<BlurFrame> finals = render_views(cfg.problem, res.mesh);
  double mean_psnr = 0.0;
  for (std::size_t v = 0; v < finals.size(); ++v) mean_psnr += psnr(finals[v], cfg.problem.views[v].target);
  mean_psnr /= static_cast<double>(finals.size());
  summary["mean_psnr_db"] = std::isfinite(mean_psnr) ? json(mean_psnr) : json("inf");
  if (cfg.target_mesh) summary["voxel_iou_32"] = voxel_iou(res.mesh, *cfg.target_mesh, 32);
  write_text(out / "summary.json", summary.dump(2) + "\n");

  for (const fs::path& p : checkpoints) emit(p);
  emit(out / "mesh_final.obj");
  emit(out / "loss_history.csv");
  emit(out / "summary.json");
  return 0;
}

int cmd_bench(const std::string& file, const std::string& out_dir, const Overrides& o) {
  json j = load_json(file);
  apply_overrides(j, o, "seed", false);
  j.erase("samples_per_segment");
  j.erase("n_segments");
  if (o.samples || o.segments) throw InputError("bench takes sample counts from its file, not --samples/--segments");
  const BenchScenario s = parse_bench(j.dump(), fs::path(file).parent_path());
  const fs::path out = ensure_dir(out_dir);
  std::cerr << "bench: isa " << simd::isa_name(simd::active_isa()) << '\n';
  const BenchResult r = run_bench(s);
  write_text(out / "bench.csv", r.to_csv());
  write_text(out / "bench_summary.json", r.to_json() + "\n");
  emit(out / "bench.csv");
  emit(out / "bench_summary.json");
  return 0;
}

int cmd_gradcheck(const std::string& file, const std::string& out_dir, const Overrides& o, double threshold,
                  double h) {
  json j = load_json(file);
  apply_overrides(j, o, "rotation_seed", true);
  const SceneConfig cfg = parse_scene(j.dump(), fs::path(file).parent_path());
  FdOptions opt;
  opt.h = h;
  const FdReport rep = finite_diff_check(cfg.scene, mean_alpha_loss(), opt);
  std::cout << rep.to_json() << '\n';
  if (!out_dir.empty()) {
    const fs::path out = ensure_dir(out_dir);
    write_text(out / "gradcheck.json", rep.to_json() + "\n");
    emit(out / "gradcheck.json");
  }
  if (!(rep.max_rel_err <= threshold)) {
    std::cerr << "gradcheck: max relative error " << rep.max_rel_err << " exceeds " << threshold << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable motion-blur soft rasterizer"};
  app.require_subcommand(1);

  Overrides o;
  std::string out_dir = "out";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--threads", o.threads, "Worker threads (default: BLURRAST_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--samples", o.samples, "Samples per segment")->check(CLI::PositiveNumber);
    sub->add_option("--segments", o.segments, "Keyframe segments")->check(CLI::PositiveNumber);
    sub->add_option("--delta", o.delta, "Soft-coverage bandwidth (normalized units)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory");
  };

  std::string file;
  bool grad = false;
  auto* render = app.add_subcommand("render", "Render a motion-blurred image from a scene file");
  render->add_option("scene", file, "Scene JSON")->required();
  render->add_flag("--grad", grad, "Also write the x-gradient visualization");
  add_common(render);

  std::optional<int> iterations;
  auto* optimize = app.add_subcommand("optimize", "Recover shape and color from blurred targets");
  optimize->add_option("problem", file, "Problem JSON")->required();
  optimize->add_option("--iterations", iterations, "Override the iteration budget")->check(CLI::NonNegativeNumber);
  add_common(optimize);

  auto* bench = app.add_subcommand("bench", "Time the fast and naive solvers");
  bench->add_option("bench", file, "Bench JSON")->required();
  add_common(bench);

  double threshold = 1e-3;
  double h = 1e-3;
  std::string gc_out;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  gradcheck->add_option("scene", file, "Scene JSON")->required();
  gradcheck->add_option("--fd-threshold", threshold, "Maximum accepted relative error");
  gradcheck->add_option("--step", h, "Finite-difference step (world units)")->check(CLI::PositiveNumber);
  add_common(gradcheck);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*render) return cmd_render(file, out_dir, o, grad);
    if (*optimize) return cmd_optimize(file, out_dir, o, iterations);
    if (*bench) return cmd_bench(file, out_dir, o);
    if (*gradcheck) return cmd_gradcheck(file, gradcheck->count("--out") ? out_dir : "", o, threshold, h);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
