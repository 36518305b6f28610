#include "blurrast/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "blurrast/grad.hpp"
#include "blurrast/mesh_gen.hpp"
#include "blurrast/parallel.hpp"

namespace blurrast {
namespace {

constexpr double kForegroundTol = 1e-6;
constexpr double kAlphaTol = 1e-2;

SegmentedMotion bench_motion(const Mesh& mesh, const BenchScenario& s, int samples) {
  const Camera cam = Camera::from_spherical(2.232, 0.0, 0.0, 30.0, s.width, s.height);
  return segment(MotionTrajectory::translation_x(), mesh, cam, 1, samples);
}

// Background pixels differ by the endpoint approximation, so alpha is held to a
// mean bound; rgb is zero off the foreground and must match to kForegroundTol.
void check_outputs(const BlurFrame& fast, const BlurFrame& naive, int samples) {
  double d_rgb = 0.0, d_alpha = 0.0;
  for (std::size_t i = 0; i < fast.rgb.size(); ++i) d_rgb = std::max(d_rgb, std::abs(fast.rgb[i] - naive.rgb[i]));
  for (std::size_t i = 0; i < fast.alpha.size(); ++i) d_alpha += std::abs(fast.alpha[i] - naive.alpha[i]);
  d_alpha /= static_cast<double>(fast.alpha.size());
  if (!(d_rgb < kForegroundTol) || !(d_alpha < kAlphaTol)) {
    std::ostringstream msg;
    msg << "solver outputs disagree at K = " << samples << ": max |drgb| " << d_rgb << ", mean |dalpha| " << d_alpha;
    throw NumericalError(msg.str());
  }
}

double time_once(const SegmentedMotion& motion, const Mesh& mesh, const RasterConfig& rc, BenchMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  const BlurFrame frame = render_blur(motion, mesh, rc, mode == BenchMode::kForwardBackward);
  if (mode == BenchMode::kForwardBackward) {
    PixelAdjoint adj = PixelAdjoint::zeros(frame.width, frame.height);
    const double inv = 1.0 / (4.0 * frame.num_pixels());
    std::fill(adj.d_rgb.begin(), adj.d_rgb.end(), inv);
    std::fill(adj.d_alpha.begin(), adj.d_alpha.end(), inv);
    const AdjointState st = backward_blur(frame, adj);
    if (st.d_colors.empty()) throw NumericalError("empty adjoint state");
  }
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void BenchScenario::validate() const {
  if (repetitions < 3) throw InputError("bench repetitions must be >= 3 (got " + std::to_string(repetitions) + ")");
  if (warmup < 0) throw InputError("bench warmup must be >= 0");
  if (sample_counts.size() < 3) throw InputError("bench needs at least three sample counts for a slope");
  for (std::size_t i = 0; i < sample_counts.size(); ++i) {
    if (sample_counts[i] < 1) throw InputError("bench sample counts must be >= 1");
    if (i > 0 && sample_counts[i] <= sample_counts[i - 1]) {
      throw InputError("bench sample counts must be strictly increasing");
    }
  }
  if (width <= 0 || height <= 0) throw InputError("bench image size must be positive");
  if (threads < 0) throw InputError("bench thread count must be >= 0");
  if (!(delta > 0.0)) throw InputError("bench delta must be positive");
}

BenchScene random_rotate_scene(const Mesh& mesh, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-90.0, 90.0);
  BenchScene s;
  s.mesh = mesh;
  normalize_max_norm(s.mesh, 1.0);
  s.angle_deg = angle(rng);
  rotate_x(s.mesh, s.angle_deg * kPi / 180.0);
  return s;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw InputError("slope needs distinct x values");
  return sxy / sxx;
}

const BenchPoint& BenchResult::at(Solver solver, int samples) const {
  for (const BenchPoint& p : points) {
    if (p.solver == solver && p.samples == samples) return p;
  }
  throw InputError("no bench point for K = " + std::to_string(samples));
}

std::string BenchResult::to_csv() const {
  std::ostringstream out;
  out << "solver,samples,median_ms,min_ms,reps,threads\n";
  for (const BenchPoint& p : points) {
    out << (p.solver == Solver::kFast ? "fast" : "naive") << ',' << p.samples << ',' << p.median_ms << ','
        << p.min_ms << ',' << p.reps << ',' << p.threads << '\n';
  }
  return out.str();
}

std::string BenchResult::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["faces"] = faces;
  j["rotation_deg"] = angle_deg;
  j["fast_slope_ms_per_sample"] = fast_slope;
  j["naive_slope_ms_per_sample"] = naive_slope;
  nlohmann::json speedups = nlohmann::json::object();
  for (const BenchPoint& p : points) {
    if (p.solver != Solver::kFast) continue;
    speedups[std::to_string(p.samples)] = at(Solver::kNaive, p.samples).median_ms / p.median_ms;
  }
  j["speedup_by_samples"] = speedups;
  j["slope_ratio"] = fast_slope > 0.0 ? naive_slope / fast_slope : 0.0;
  return j.dump(2);
}

BenchResult run_bench(const BenchScenario& s) {
  s.validate();
  const BenchScene scene = random_rotate_scene(load_mesh_source(s.mesh_source), s.seed);
  RasterConfig fast, naive;
  fast.delta = naive.delta = s.delta;
  fast.threads = naive.threads = resolve_threads(s.threads);
  naive.solver = Solver::kNaive;

  BenchResult result;
  result.angle_deg = scene.angle_deg;
  result.faces = scene.mesh.num_faces();
  for (int k : s.sample_counts) {
    const SegmentedMotion motion = bench_motion(scene.mesh, s, k);
    check_outputs(render_blur(motion, scene.mesh, fast), render_blur(motion, scene.mesh, naive), k);
  }

  std::vector<double> ks;
  std::vector<double> med_fast, med_naive;
  for (int k : s.sample_counts) {
    const SegmentedMotion motion = bench_motion(scene.mesh, s, k);
    ks.push_back(k);
    for (const RasterConfig* rc : {&fast, &naive}) {
      for (int w = 0; w < s.warmup; ++w) time_once(motion, scene.mesh, *rc, s.mode);
      std::vector<double> times;
      for (int r = 0; r < s.repetitions; ++r) times.push_back(time_once(motion, scene.mesh, *rc, s.mode));
      std::sort(times.begin(), times.end());
      const std::size_t n = times.size();
      BenchPoint p;
      p.solver = rc->solver;
      p.samples = k;
      p.median_ms = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
      p.min_ms = times.front();
      p.reps = s.repetitions;
      p.threads = rc->threads;
      result.points.push_back(p);
      (rc->solver == Solver::kFast ? med_fast : med_naive).push_back(p.median_ms);
    }
  }
  if (ks.size() >= 2) {
    result.fast_slope = ls_slope(ks, med_fast);
    result.naive_slope = ls_slope(ks, med_naive);
  }
  return result;
}

}  // namespace blurrast
