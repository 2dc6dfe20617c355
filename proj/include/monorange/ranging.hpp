#pragma once

#include <vector>

#include <Eigen/Core>

#include "monorange/core.hpp"
#include "monorange/geometry.hpp"

namespace monorange {

/// Default standard deviation of a tag-anchor distance measurement [m].
inline constexpr double kDefaultRangeSigma = 0.10;

/// One tag-anchor distance measurement.
struct RangeMeasurement {
  double timestamp = 0.0;  // s
  double distance = 0.0;   // m, >= 0
  double sigma = kDefaultRangeSigma;  // m, > 0
};

/// Fixed parameters of the ranging setup: anchor position in the world frame
/// and tag mounting offset in the camera frame.
template <typename Scalar>
struct RangingExtrinsics {
  Eigen::Matrix<Scalar, 3, 1> anchor_position = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Matrix<Scalar, 3, 1> tag_lever_arm = Eigen::Matrix<Scalar, 3, 1>::Zero();
};

using RangingExtrinsicsd = RangingExtrinsics<double>;

/// Averaged two-way time-of-flight reading and its calibrated delay offset.
struct TofSample {
  double round_trip_time_avg = 0.0;  // s
  double time_offset = 0.0;          // s
};

/// Distance from an averaged two-way time of flight:
/// d = (c/2) * (t_avg - t_offset). Throws DataError when the
/// offset-corrected time is negative.
inline double tofToDistance(const TofSample& sample) {
  if (sample.round_trip_time_avg < sample.time_offset) {
    throw DataError("tofToDistance: averaged round-trip time " +
                    std::to_string(sample.round_trip_time_avg) +
                    " s is smaller than the calibrated offset " +
                    std::to_string(sample.time_offset) + " s");
  }
  return 0.5 * kSpeedOfLight * (sample.round_trip_time_avg - sample.time_offset);
}

/// Tag-anchor distance predicted from an up-to-scale pose and a global scale:
/// || -p_anchor + scale * t_pose + R_pose * lever_arm ||.
template <typename Scalar>
Scalar predictRange(const Pose3<Scalar>& pose, Scalar scale,
                    const RangingExtrinsics<Scalar>& extrinsics) {
  const Eigen::Matrix<Scalar, 3, 1> tag_offset =
      -extrinsics.anchor_position + scale * pose.translation() +
      pose.rotation() * extrinsics.tag_lever_arm;
  return tag_offset.norm();
}

/// One survey sample for anchor trilateration: a known metric tag position
/// and the measured distance from it to the anchor.
struct TrilaterationSample {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m, world frame
  double distance = 0.0;                               // m
};

struct TrilaterationResult {
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  double residual_rms = 0.0;  // m
  int iterations = 0;
};

/// Nonlinear least-squares anchor position from >= 4 survey samples.
/// Starts from a centroid-referenced linear solve, refines with Gauss-Newton.
/// Throws DataError on < 4 samples or degenerate survey geometry
/// (linearized system condition number above 1e8).
TrilaterationResult trilaterateAnchor(const std::vector<TrilaterationSample>& samples);

}  // namespace monorange
