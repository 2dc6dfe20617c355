// Test-only reference computations, kept independent of the library paths
// they are used to check.
#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "monorange/geometry.hpp"
#include "monorange/ranging.hpp"

namespace monorange::test {

/// Central-difference Jacobian of f: R^n -> R^m.
inline Eigen::MatrixXd numericalJacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, int output_dim,
                                         double step = 1e-6) {
  Eigen::MatrixXd jacobian(output_dim, x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd forward = x;
    Eigen::VectorXd backward = x;
    forward(j) += step;
    backward(j) -= step;
    jacobian.col(j) = (f(forward) - f(backward)) / (2.0 * step);
  }
  return jacobian;
}

/// Infinity-norm error of an analytic Jacobian against a numeric one,
/// relative to max(1, |analytic|).
inline double jacobianError(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

/// Quaternion (w,x,y,z) to rotation matrix by the explicit closed form,
/// written out independently of Eigen's converter.
inline Eigen::Matrix3d referenceRotationMatrix(double w, double x, double y, double z) {
  Eigen::Matrix3d r;
  r(0, 0) = 1.0 - 2.0 * (y * y + z * z);
  r(0, 1) = 2.0 * (x * y - w * z);
  r(0, 2) = 2.0 * (x * z + w * y);
  r(1, 0) = 2.0 * (x * y + w * z);
  r(1, 1) = 1.0 - 2.0 * (x * x + z * z);
  r(1, 2) = 2.0 * (y * z - w * x);
  r(2, 0) = 2.0 * (x * z - w * y);
  r(2, 1) = 2.0 * (y * z + w * x);
  r(2, 2) = 1.0 - 2.0 * (x * x + y * y);
  return r;
}

/// Pixel prediction computed with scalar arithmetic only (no Pose3 methods):
/// camera point = R^T (p - t), pixel = (fx X/Z + cx, fy Y/Z + cy).
inline Eigen::Vector2d referenceProject(const CameraIntrinsicsd& intrinsics, const Pose3d& pose,
                                        const Eigen::Vector3d& point) {
  const auto& q = pose.rotation();
  const Eigen::Matrix3d r = referenceRotationMatrix(q.w(), q.x(), q.y(), q.z());
  const Eigen::Vector3d d = point - pose.translation();
  const double xc = r(0, 0) * d.x() + r(1, 0) * d.y() + r(2, 0) * d.z();
  const double yc = r(0, 1) * d.x() + r(1, 1) * d.y() + r(2, 1) * d.z();
  const double zc = r(0, 2) * d.x() + r(1, 2) * d.y() + r(2, 2) * d.z();
  return {intrinsics.fx * xc / zc + intrinsics.cx, intrinsics.fy * yc / zc + intrinsics.cy};
}

/// Tag-anchor distance via componentwise arithmetic (no Eigen norm call).
inline double referenceRange(const Pose3d& pose, double scale,
                             const RangingExtrinsicsd& extrinsics) {
  const auto& q = pose.rotation();
  const Eigen::Matrix3d r = referenceRotationMatrix(q.w(), q.x(), q.y(), q.z());
  const Eigen::Vector3d lever = r * extrinsics.tag_lever_arm;
  const double dx = -extrinsics.anchor_position.x() + scale * pose.translation().x() + lever.x();
  const double dy = -extrinsics.anchor_position.y() + scale * pose.translation().y() + lever.y();
  const double dz = -extrinsics.anchor_position.z() + scale * pose.translation().z() + lever.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Deterministic sampling helpers for seeded test cases.
class TestRng {
 public:
  explicit TestRng(unsigned seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double gaussian(double sigma = 1.0) {
    return sigma * std::normal_distribution<double>(0.0, 1.0)(engine_);
  }

  Eigen::Vector3d vector3(double lo, double hi) {
    return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
  }

  Eigen::Quaterniond rotation() {
    // uniform-ish random rotation from a random axis-angle
    const Eigen::Vector3d axis = vector3(-1.0, 1.0).normalized();
    const double angle = uniform(-M_PI, M_PI);
    return Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis));
  }

  Pose3d pose(double translation_range = 5.0) {
    return Pose3d(rotation(), vector3(-translation_range, translation_range));
  }

 private:
  std::mt19937 engine_;
};

}  // namespace monorange::test
