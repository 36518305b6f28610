#include "blurrast/geometry.hpp"

#include <cmath>
#include <sstream>

namespace blurrast {

void Mesh::validate() const {
  const int n = num_vertices();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (int idx : face) {
      if (idx < 0 || idx >= n) {
        throw IndexError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                         " but mesh has " + std::to_string(n) + " vertices");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw InputError("face " + std::to_string(f) + " repeats a vertex index");
    }
  }
  if (colors.size() != vertices.size()) {
    throw InputError("mesh has " + std::to_string(colors.size()) + " colors for " +
                     std::to_string(vertices.size()) + " vertices");
  }
}

Camera Camera::from_spherical(double distance, double elevation_deg, double azimuth_deg,
                              double half_fov_deg, int width, int height) {
  const double el = elevation_deg * kPi / 180.0;
  const double az = azimuth_deg * kPi / 180.0;
  Camera cam;
  cam.eye = Vec3(distance * std::cos(el) * std::sin(az), distance * std::sin(el),
                 -distance * std::cos(el) * std::cos(az));
  cam.target = Vec3::Zero();
  cam.up = Vec3(0.0, 1.0, 0.0);
  cam.half_fov = half_fov_deg * kPi / 180.0;
  cam.width = width;
  cam.height = height;
  cam.validate();
  return cam;
}

void Camera::validate() const {
  if (!(half_fov > 0.0 && half_fov < kPi / 2.0)) {
    throw InputError("camera half field of view must lie in (0, pi/2)");
  }
  if (width <= 0 || height <= 0) {
    throw InputError("camera image size must be positive");
  }
  const Vec3 forward = target - eye;
  if (forward.norm() <= 0.0) {
    throw InputError("camera eye coincides with its target");
  }
  if (forward.normalized().cross(up).norm() < 1e-9) {
    throw InputError("camera up vector is parallel to the view direction");
  }
}

Mat3 Camera::world_to_view() const {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 m;
  m.row(0) = x.transpose();
  m.row(1) = y.transpose();
  m.row(2) = z.transpose();
  return m;
}

std::vector<ScreenVertex> project(std::span<const Vec3> points, const Camera& camera) {
  const Mat3 view = camera.world_to_view();
  const double tan_a = std::tan(camera.half_fov);
  const double hw = 0.5 * camera.width;
  const double hh = 0.5 * camera.height;

  std::vector<ScreenVertex> out(points.size());
  std::vector<int> behind;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 c = view * (points[i] - camera.eye);
    if (!(c.z() > kNearEpsilon)) {
      behind.push_back(static_cast<int>(i));
      continue;
    }
    const double xn = c.x() / (c.z() * tan_a);
    const double yn = c.y() / (c.z() * tan_a);
    out[i] = {(xn + 1.0) * hw, (1.0 - yn) * hh, c.z()};
  }
  if (!behind.empty()) {
    std::ostringstream msg;
    msg << behind.size() << " vertices behind the camera:";
    for (std::size_t k = 0; k < behind.size() && k < 16; ++k) msg << ' ' << behind[k];
    if (behind.size() > 16) msg << " ...";
    throw BehindCameraError(msg.str(), std::move(behind));
  }
  return out;
}

std::vector<ScreenVertex> project(const Mesh& mesh, const Camera& camera) {
  return project(std::span<const Vec3>(mesh.vertices), camera);
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& point, const Camera& camera) {
  const Mat3 view = camera.world_to_view();
  const Vec3 c = view * (point - camera.eye);
  const double tan_a = std::tan(camera.half_fov);
  const double hw = 0.5 * camera.width;
  const double hh = 0.5 * camera.height;
  const double inv = 1.0 / (c.z() * tan_a);

  Eigen::Matrix<double, 2, 3> d_cam;
  d_cam << hw * inv, 0.0, -hw * c.x() * inv / c.z(),  //
      0.0, -hh * inv, hh * c.y() * inv / c.z();
  return d_cam * view;
}

Pose MotionTrajectory::pose(double t) const {
  Pose p;
  switch (kind) {
    case TrajectoryKind::kStatic:
      break;
    case TrajectoryKind::kTranslationX:
      p.translation = Vec3(translation_span * (0.5 - t), 0.0, 0.0);
      break;
    case TrajectoryKind::kRotationY: {
      const double a = rotation_angle * t;
      const double c = std::cos(a), s = std::sin(a);
      p.rotation << c, 0.0, -s,  //
          0.0, 1.0, 0.0,         //
          s, 0.0, c;
      break;
    }
    case TrajectoryKind::kParabolic: {
      const double a = rotation_angle * t;
      const double c = std::cos(a), s = std::sin(a);
      p.rotation << c, 0.0, s,  //
          0.0, 1.0, 0.0,        //
          -s, 0.0, c;
      const double u = translation_span * (0.5 - t);
      p.translation = Vec3(u, -4.0 * u * u + 0.5, u);
      break;
    }
  }
  return p;
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kStatic:
      return "static";
    case TrajectoryKind::kTranslationX:
      return "translation-x";
    case TrajectoryKind::kRotationY:
      return "rotation-y";
    case TrajectoryKind::kParabolic:
      return "parabolic-composite";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "static") return TrajectoryKind::kStatic;
  if (name == "translation-x") return TrajectoryKind::kTranslationX;
  if (name == "rotation-y") return TrajectoryKind::kRotationY;
  if (name == "parabolic-composite") return TrajectoryKind::kParabolic;
  throw InputError("unknown trajectory kind '" + name + "'");
}

std::vector<Vec3> pose_at(const MotionTrajectory& trajectory, const Mesh& mesh, double t) {
  const Pose p = trajectory.pose(t);
  std::vector<Vec3> out;
  out.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) out.push_back(p.apply(v));
  return out;
}

double SegmentedMotion::sample_time(int k) const {
  if (samples_per_segment == 1) return 0.5;
  return static_cast<double>(k) / static_cast<double>(samples_per_segment - 1);
}

std::vector<double> SegmentedMotion::sample_times() const {
  std::vector<double> ts(samples_per_segment);
  for (int k = 0; k < samples_per_segment; ++k) ts[k] = sample_time(k);
  return ts;
}

SegmentedMotion segment(const MotionTrajectory& trajectory, const Mesh& mesh, const Camera& camera,
                        int n_segments, int samples_per_segment) {
  if (n_segments < 1) throw InputError("n_segments must be >= 1");
  if (samples_per_segment < 1) throw InputError("samples_per_segment must be >= 1");
  camera.validate();

  SegmentedMotion sm;
  sm.width = camera.width;
  sm.height = camera.height;
  sm.samples_per_segment = samples_per_segment;
  sm.keyframes.reserve(n_segments + 1);
  sm.jacobians.reserve(n_segments + 1);
  for (int b = 0; b <= n_segments; ++b) {
    const double t = static_cast<double>(b) / n_segments;
    const Pose pose = trajectory.pose(t);
    std::vector<Vec3> world;
    world.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) world.push_back(pose.apply(v));
    sm.keyframes.push_back(project(std::span<const Vec3>(world), camera));

    std::vector<Eigen::Matrix<double, 2, 3>> jac;
    jac.reserve(world.size());
    for (const Vec3& w : world) jac.push_back(projection_jacobian(w, camera) * pose.rotation);
    sm.jacobians.push_back(std::move(jac));
  }
  return sm;
}

SegmentedMotion static_motion(std::span<const ScreenVertex> screen, int width, int height) {
  SegmentedMotion sm;
  sm.width = width;
  sm.height = height;
  sm.samples_per_segment = 1;
  sm.keyframes.emplace_back(screen.begin(), screen.end());
  sm.keyframes.emplace_back(screen.begin(), screen.end());
  return sm;
}

}  // namespace blurrast
