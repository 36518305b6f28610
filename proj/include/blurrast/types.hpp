#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace blurrast {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int, 3>;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map it onto an exit code without inspecting messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: files, JSON, argument validation.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, int line)
      : InputError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IndexError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical failures: degenerate solves, NaN gradients, points behind the camera.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BehindCameraError : public NumericalError {
 public:
  BehindCameraError(const std::string& what, std::vector<int> vertices)
      : NumericalError(what), vertices_(std::move(vertices)) {}
  const std::vector<int>& vertices() const { return vertices_; }

 private:
  std::vector<int> vertices_;
};

}  // namespace blurrast
