#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "blurrast/types.hpp"

namespace blurrast {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultGray = 0.7;

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> colors;  // per-vertex RGB in [0,1]

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }

  // Throws IndexError/InputError when a structural invariant is broken.
  void validate() const;
};

Mesh load_obj(const std::filesystem::path& path);
Mesh parse_obj(const std::string& text);
// Writes `v x y z r g b` lines so colors survive a round trip.
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

// Pinhole camera looking at `target` with a fixed half field of view.
// Camera space is left-handed: +z forward, +x right, +y up.
struct Camera {
  Vec3 eye{0.0, 0.0, -2.232};
  Vec3 target{0.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double half_fov = 30.0 * kPi / 180.0;  // radians
  int width = 128;
  int height = 128;

  // Spherical placement around the origin, angles in degrees.
  // eye = d * (cos(el) sin(az), sin(el), -cos(el) cos(az)).
  static Camera from_spherical(double distance, double elevation_deg, double azimuth_deg,
                               double half_fov_deg = 30.0, int width = 128, int height = 128);

  void validate() const;
  // Rows are the camera x, y, z axes expressed in world coordinates.
  Mat3 world_to_view() const;
};

// Screen-space vertex: x, y in pixels (origin top-left, pixel centers at +0.5),
// z is view-space depth.
struct ScreenVertex {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline constexpr double kNearEpsilon = 1e-6;

std::vector<ScreenVertex> project(std::span<const Vec3> points, const Camera& camera);
std::vector<ScreenVertex> project(const Mesh& mesh, const Camera& camera);

// d(x_px, y_px)/d(world point), 2x3 row-major, evaluated at `point`.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& point, const Camera& camera);

// Affine rigid map world <- template: p(t) = rotation * p0 + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

enum class TrajectoryKind { kStatic, kTranslationX, kRotationY, kParabolic };

struct MotionTrajectory {
  TrajectoryKind kind = TrajectoryKind::kStatic;
  double translation_span = 1.0;     // world units travelled along -x over the exposure
  double rotation_angle = 2.0 * kPi;  // total angle about +y, radians

  static MotionTrajectory stationary() { return {}; }
  static MotionTrajectory translation_x(double span = 1.0) {
    return {TrajectoryKind::kTranslationX, span, 2.0 * kPi};
  }
  static MotionTrajectory rotation_y(double angle = 2.0 * kPi) {
    return {TrajectoryKind::kRotationY, 1.0, angle};
  }
  static MotionTrajectory parabolic() { return {TrajectoryKind::kParabolic, 1.0, kPi}; }

  Pose pose(double t) const;
};

std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& name);

std::vector<Vec3> pose_at(const MotionTrajectory& trajectory, const Mesh& mesh, double t);

// Linear keyframe decomposition of a trajectory, in screen space.
//
// Keyframe b sits at global time b / n_segments; segment i spans keyframes i and
// i + 1, so consecutive segments share endpoints by construction. The projection
// Jacobians (screen wrt template-space vertex) are kept for the reverse pass.
struct SegmentedMotion {
  int width = 0;
  int height = 0;
  int samples_per_segment = 1;
  std::vector<std::vector<ScreenVertex>> keyframes;                 // n_segments + 1
  std::vector<std::vector<Eigen::Matrix<double, 2, 3>>> jacobians;  // same shape, may be empty

  int num_segments() const { return static_cast<int>(keyframes.size()) - 1; }
  int num_vertices() const { return keyframes.empty() ? 0 : static_cast<int>(keyframes[0].size()); }
  int total_samples() const { return num_segments() * samples_per_segment; }

  std::span<const ScreenVertex> segment_start(int i) const { return keyframes.at(i); }
  std::span<const ScreenVertex> segment_end(int i) const { return keyframes.at(i + 1); }

  // Local time of sample k inside a segment: 0.5 for K = 1, k / (K - 1) otherwise.
  double sample_time(int k) const;
  std::vector<double> sample_times() const;
};

SegmentedMotion segment(const MotionTrajectory& trajectory, const Mesh& mesh, const Camera& camera,
                        int n_segments, int samples_per_segment);

// A single static frame packaged as a one-segment motion with equal keyframes.
SegmentedMotion static_motion(std::span<const ScreenVertex> screen, int width, int height);

}  // namespace blurrast
