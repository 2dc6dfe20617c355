#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "monorange/core.hpp"
#include "monorange/geometry.hpp"
#include "monorange/ranging.hpp"

namespace monorange {

enum class VariableKind { KeyframePose, MapPoint };

struct VariableId {
  VariableKind kind = VariableKind::KeyframePose;
  int index = 0;
};

/// Pixel observation of a map point from a keyframe.
struct ReprojectionFactor {
  int pose_index = 0;
  int point_index = 0;
  Eigen::Vector2d observed_pixel = Eigen::Vector2d::Zero();
  double sigma_px = kDefaultPixelSigma;
};

/// Tag-anchor distance constraint on a keyframe pose.
struct RangeFactor {
  int pose_index = 0;
  double measured_distance = 0.0;
  double sigma_m = kDefaultRangeSigma;
  int extrinsics_index = 0;
};

/// Global map database: keyframe poses and map points as variables,
/// re-projection and range constraints as factors, camera intrinsics and
/// ranging extrinsics as fixed parameters. Poses are metric once the initial
/// global scale has been applied.
struct FactorGraph {
  std::vector<Pose3d> poses;
  std::vector<Eigen::Vector3d> points;
  std::vector<bool> pose_fixed;
  std::vector<bool> point_fixed;
  std::vector<ReprojectionFactor> reprojection_factors;
  std::vector<RangeFactor> range_factors;
  CameraIntrinsicsd intrinsics;
  std::vector<RangingExtrinsicsd> extrinsics;
  /// Huber loss (threshold 3 whitened sigmas) on range residuals.
  bool robust_range = false;

  int addPose(const Pose3d& pose, bool fixed = false) {
    poses.push_back(pose);
    pose_fixed.push_back(fixed);
    return static_cast<int>(poses.size()) - 1;
  }
  int addPoint(const Eigen::Vector3d& point, bool fixed = false) {
    points.push_back(point);
    point_fixed.push_back(fixed);
    return static_cast<int>(points.size()) - 1;
  }
};

/// Whitened re-projection residual (predicted - observed) / sigma and its
/// derivatives w.r.t. the pose retraction and the point. active == false
/// when the point lies behind the camera; the factor then contributes
/// nothing this evaluation.
struct ReprojectionEvaluation {
  Eigen::Vector2d residual = Eigen::Vector2d::Zero();
  Eigen::Matrix<double, 2, 6> j_pose = Eigen::Matrix<double, 2, 6>::Zero();
  Eigen::Matrix<double, 2, 3> j_point = Eigen::Matrix<double, 2, 3>::Zero();
  bool active = false;
};

ReprojectionEvaluation evaluateReprojection(const FactorGraph& graph,
                                            const ReprojectionFactor& factor);

/// Whitened range residual (predicted - measured) / sigma and its derivative
/// w.r.t. the pose retraction. active == false when the predicted distance
/// is below kRangeEpsilon (direction undefined next to the anchor).
struct RangeEvaluation {
  double residual = 0.0;
  Eigen::Matrix<double, 1, 6> j_pose = Eigen::Matrix<double, 1, 6>::Zero();
  bool active = false;
};

RangeEvaluation evaluateRange(const FactorGraph& graph, const RangeFactor& factor);

/// Huber cost of a whitened residual with fixed threshold 3.
double huberCost(double whitened_residual);
/// sqrt of the Huber IRLS weight at a whitened residual.
double huberSqrtWeight(double whitened_residual);

/// Which factors contribute at the current variable values.
struct FactorActivation {
  std::vector<char> reprojection;
  std::vector<char> range;
  int n_inactive_reprojection = 0;
  int n_inactive_range = 0;
};

FactorActivation computeActivation(const FactorGraph& graph);

/// Sum of squared whitened residuals over active factors, in factor index
/// order (Huber-weighted range terms when graph.robust_range). Throws
/// NumericalError naming the factor when a residual is non-finite.
double totalCost(const FactorGraph& graph);
double totalCost(const FactorGraph& graph, const FactorActivation& activation);

/// Multiplies every pose translation and map point by alpha; rotations,
/// factors and fixed parameters are untouched. Throws DataError when alpha
/// is zero or non-finite.
FactorGraph applyScale(FactorGraph graph, double alpha);

/// Checks the structural invariants needed before optimization: factor
/// references in range, positive sigmas, at least one fixed pose, and every
/// non-fixed map point observed by at least two re-projection factors.
/// Throws DataError describing the first violation.
void validateGraph(const FactorGraph& graph);

/// Plain-text snapshot (POSES / POINTS / REPROJ / RANGE blocks); values are
/// printed at 17 significant digits and round-trip bit-identically.
void writeGraphSnapshot(std::ostream& out, const FactorGraph& graph);
FactorGraph readGraphSnapshot(std::istream& in);

}  // namespace monorange
