#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "monorange/core.hpp"

namespace monorange {

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew(const Eigen::Matrix<Scalar, 3, 1>& v) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0), -v.z(), v.y(),  //
      v.z(), Scalar(0), -v.x(),   //
      -v.y(), v.x(), Scalar(0);
  return m;
}

/// Quaternion exponential of a rotation vector (axis * angle, radians).
template <typename Scalar>
Eigen::Quaternion<Scalar> expSo3(const Eigen::Matrix<Scalar, 3, 1>& omega) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar theta_sq = omega.squaredNorm();
  const Scalar theta = sqrt(theta_sq);
  // sin(theta/2)/theta, series expansion near zero
  Scalar half_sinc;
  if (theta < Scalar(1e-8)) {
    half_sinc = Scalar(0.5) - theta_sq / Scalar(48);
  } else {
    half_sinc = sin(theta / Scalar(2)) / theta;
  }
  return Eigen::Quaternion<Scalar>(cos(theta / Scalar(2)), half_sinc * omega.x(),
                                   half_sinc * omega.y(), half_sinc * omega.z());
}

/// Rotation vector of a unit quaternion; inverse of expSo3.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> logSo3(const Eigen::Quaternion<Scalar>& q) {
  Eigen::AngleAxis<Scalar> aa(q);
  return aa.angle() * aa.axis();
}

/// Rigid camera-to-world transform: x_world = R * x_camera + t.
///
/// Rotation is stored as a unit quaternion and renormalized after every
/// update, translation is the camera origin expressed in the world frame.
template <typename Scalar>
class Pose3 {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Vector6 = Eigen::Matrix<Scalar, 6, 1>;

  Pose3() : rotation_(Quaternion::Identity()), translation_(Vector3::Zero()) {}
  /// rotation is taken as-is and must be unit norm; retract() renormalizes
  /// after every update, file readers normalize on input.
  Pose3(const Quaternion& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose3 Identity() { return Pose3(); }

  const Quaternion& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  void setTranslation(const Vector3& t) { translation_ = t; }

  Eigen::Matrix<Scalar, 3, 3> rotationMatrix() const { return rotation_.toRotationMatrix(); }

  /// Camera-frame point to world frame.
  template <typename Derived>
  Vector3 apply(const Eigen::MatrixBase<Derived>& x_camera) const {
    return rotation_ * x_camera + translation_;
  }

  /// World-frame point to camera frame.
  template <typename Derived>
  Vector3 worldToCamera(const Eigen::MatrixBase<Derived>& x_world) const {
    return rotation_.conjugate() * (x_world - translation_);
  }

  Pose3 inverse() const {
    const Quaternion qi = rotation_.conjugate();
    return Pose3(qi, -(qi * translation_));
  }

  Pose3 operator*(const Pose3& other) const {
    return Pose3(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }

  /// Local update used by the optimizer. delta = [rotation (rad); translation (m)];
  /// the rotation increment multiplies on the right (body frame), the
  /// translation increment adds in the world frame.
  Pose3 retract(const Vector6& delta) const {
    const Quaternion dq = expSo3<Scalar>(delta.template head<3>());
    return Pose3((rotation_ * dq).normalized(), translation_ + delta.template tail<3>());
  }

  template <typename OtherScalar>
  Pose3<OtherScalar> cast() const {
    return Pose3<OtherScalar>(rotation_.template cast<OtherScalar>(),
                              translation_.template cast<OtherScalar>());
  }

 private:
  Quaternion rotation_;
  Vector3 translation_;
};

using Pose3d = Pose3<double>;
using Pose3f = Pose3<float>;

/// Trajectory sample: camera-to-world pose at a timestamp.
struct TimedPose {
  double timestamp = 0.0;
  Pose3d pose;
};

/// Pinhole camera, no distortion. Pixel origin at the top-left corner,
/// u along +x_camera, v along +y_camera, optical axis +z_camera.
template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx{};
  Scalar fy{};
  Scalar cx{};
  Scalar cy{};
  int width = 0;
  int height = 0;

  bool isValid() const {
    return fx > Scalar(0) && fy > Scalar(0) && cx > Scalar(0) && cy > Scalar(0) &&
           cx < Scalar(width) && cy < Scalar(height);
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;

/// Default standard deviation of a pixel observation [px].
inline constexpr double kDefaultPixelSigma = 1.0;

template <typename Scalar>
bool pixelInImage(const CameraIntrinsics<Scalar>& intrinsics,
                  const Eigen::Matrix<Scalar, 2, 1>& pixel) {
  return pixel.x() >= Scalar(0) && pixel.x() <= Scalar(intrinsics.width) &&
         pixel.y() >= Scalar(0) && pixel.y() <= Scalar(intrinsics.height);
}

/// Projects a world-frame point into the image. Returns nullopt when the
/// point lies behind the camera (depth <= kDepthEpsilon); bounds are not
/// checked here.
template <typename Scalar, typename Derived>
std::optional<Eigen::Matrix<Scalar, 2, 1>> projectPoint(
    const CameraIntrinsics<Scalar>& intrinsics, const Pose3<Scalar>& pose,
    const Eigen::MatrixBase<Derived>& point_world) {
  const Eigen::Matrix<Scalar, 3, 1> p_camera = pose.worldToCamera(point_world);
  if (p_camera.z() <= Scalar(kDepthEpsilon)) {
    return std::nullopt;
  }
  return Eigen::Matrix<Scalar, 2, 1>(
      intrinsics.fx * p_camera.x() / p_camera.z() + intrinsics.cx,
      intrinsics.fy * p_camera.y() / p_camera.z() + intrinsics.cy);
}

template <typename Scalar>
struct ProjectionJacobians {
  Eigen::Matrix<Scalar, 2, 1> pixel;
  /// d(pixel)/d(pose retract delta), columns ordered [rotation, translation].
  Eigen::Matrix<Scalar, 2, 6> j_pose;
  /// d(pixel)/d(world point).
  Eigen::Matrix<Scalar, 2, 3> j_point;
};

/// Projection with analytic derivatives w.r.t. the Pose3 retract
/// parameterization and the world point. Returns nullopt behind the camera.
template <typename Scalar, typename Derived>
std::optional<ProjectionJacobians<Scalar>> projectionJacobians(
    const CameraIntrinsics<Scalar>& intrinsics, const Pose3<Scalar>& pose,
    const Eigen::MatrixBase<Derived>& point_world) {
  const Eigen::Matrix<Scalar, 3, 1> p_camera = pose.worldToCamera(point_world);
  if (p_camera.z() <= Scalar(kDepthEpsilon)) {
    return std::nullopt;
  }
  const Scalar inv_z = Scalar(1) / p_camera.z();

  ProjectionJacobians<Scalar> out;
  out.pixel = Eigen::Matrix<Scalar, 2, 1>(intrinsics.fx * p_camera.x() * inv_z + intrinsics.cx,
                                          intrinsics.fy * p_camera.y() * inv_z + intrinsics.cy);

  Eigen::Matrix<Scalar, 2, 3> j_projection;
  j_projection << intrinsics.fx * inv_z, Scalar(0), -intrinsics.fx * p_camera.x() * inv_z * inv_z,
      Scalar(0), intrinsics.fy * inv_z, -intrinsics.fy * p_camera.y() * inv_z * inv_z;

  // p_camera(delta) = Exp(-d_rot) * (R^T (x - t) - R^T d_trans) to first order:
  //   d p_camera / d d_rot   = [p_camera]_x
  //   d p_camera / d d_trans = -R^T
  const Eigen::Matrix<Scalar, 3, 3> rot_t = pose.rotationMatrix().transpose();
  out.j_pose.template leftCols<3>() = j_projection * skew(p_camera);
  out.j_pose.template rightCols<3>() = -j_projection * rot_t;
  out.j_point = j_projection * rot_t;
  return out;
}

/// Midpoint triangulation: least-squares point minimizing the summed squared
/// distance to all viewing rays. Returns nullopt when rays are near-parallel
/// or fewer than two views are given.
template <typename Scalar>
std::optional<Eigen::Matrix<Scalar, 3, 1>> triangulateMidpoint(
    const CameraIntrinsics<Scalar>& intrinsics, const std::vector<Pose3<Scalar>>& poses,
    const std::vector<Eigen::Matrix<Scalar, 2, 1>>& pixels) {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  if (poses.size() < 2 || poses.size() != pixels.size()) {
    return std::nullopt;
  }
  Matrix3 system = Matrix3::Zero();
  Vector3 rhs = Vector3::Zero();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Vector3 direction_camera((pixels[i].x() - intrinsics.cx) / intrinsics.fx,
                                   (pixels[i].y() - intrinsics.cy) / intrinsics.fy, Scalar(1));
    const Vector3 direction = (poses[i].rotation() * direction_camera).normalized();
    const Matrix3 orthogonal_projector = Matrix3::Identity() - direction * direction.transpose();
    system += orthogonal_projector;
    rhs += orthogonal_projector * poses[i].translation();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix3> eigs(system);
  if (eigs.eigenvalues()(0) < Scalar(1e-9) * std::max(Scalar(1), eigs.eigenvalues()(2))) {
    return std::nullopt;  // rays nearly parallel
  }
  return Vector3(system.ldlt().solve(rhs));
}

}  // namespace monorange
