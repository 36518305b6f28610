#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blurrast/raster.hpp"

namespace blurrast {

enum class BenchMode { kForward, kForwardBackward };

struct BenchScenario {
  std::string mesh_source = "icosphere:4";
  std::vector<int> sample_counts{1, 10, 25, 50, 100};
  int width = 128;
  int height = 128;
  int repetitions = 5;
  int warmup = 2;
  BenchMode mode = BenchMode::kForwardBackward;
  std::uint64_t seed = 0;
  int threads = 1;
  double delta = 1e-4;

  // repetitions >= 3; at least three sample counts, strictly increasing, >= 1.
  void validate() const;
};

// Unit-max-norm mesh rotated about its local x axis by U[-90, 90] degrees.
struct BenchScene {
  Mesh mesh;
  double angle_deg = 0.0;
};
BenchScene random_rotate_scene(const Mesh& mesh, std::uint64_t seed);

struct BenchPoint {
  Solver solver = Solver::kFast;
  int samples = 0;
  double median_ms = 0.0;
  double min_ms = 0.0;
  int reps = 0;
  int threads = 0;
};

struct BenchResult {
  std::vector<BenchPoint> points;
  double fast_slope = 0.0;   // ms per sample, least squares over sample counts
  double naive_slope = 0.0;
  double angle_deg = 0.0;
  int faces = 0;

  const BenchPoint& at(Solver solver, int samples) const;
  std::string to_csv() const;
  std::string to_json() const;
};

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

// Outputs of both solvers are compared before any timing; a mismatch throws
// NumericalError.
BenchResult run_bench(const BenchScenario& scenario);

}  // namespace blurrast
