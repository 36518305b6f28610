#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "blurrast/bench.hpp"
#include "blurrast/grad.hpp"
#include "blurrast/optim.hpp"

namespace blurrast {

// JSON configuration files. Every file carries "schema_version": 1; unknown
// keys are rejected. Relative paths resolve against the file's directory.

inline constexpr int kSchemaVersion = 1;

struct SceneConfig {
  Scene scene;
  std::string mesh_source;
  // When set, the mesh is normalized and given the bench's random x rotation.
  std::optional<std::uint64_t> rotation_seed;
};

struct ProblemConfig {
  RecoveryProblem problem;
  LossWeights weights;
  int checkpoint_every = 100;
  std::string template_source;
  // Targets rendered from this mesh when views carry no image.
  std::optional<Mesh> target_mesh;
  std::string target_source;
};

SceneConfig parse_scene(const std::string& text, const std::filesystem::path& base_dir = ".");
SceneConfig load_scene(const std::filesystem::path& path);

// Targets are loaded (or rendered) here, so the result is ready to optimize.
ProblemConfig parse_problem(const std::string& text, const std::filesystem::path& base_dir = ".");
ProblemConfig load_problem(const std::filesystem::path& path);

BenchScenario parse_bench(const std::string& text, const std::filesystem::path& base_dir = ".");
BenchScenario load_bench(const std::filesystem::path& path);

// Re-applies the scene's rotation seed after an override.
void apply_rotation(SceneConfig& config);

Camera camera_from_json_text(const std::string& text);

}  // namespace blurrast
