#pragma once

#include <vector>

#include <Eigen/Core>

#include "monorange/core.hpp"
#include "monorange/geometry.hpp"

namespace monorange {

struct EvalReport {
  double rmse = 0.0;  // m
  Eigen::Vector3d per_axis_rmse = Eigen::Vector3d::Zero();
  double max_error = 0.0;  // m
  int n_compared = 0;
  double tolerance = 0.0;  // s
  bool aligned = false;
};

/// Pairs of (estimate index, reference index) with nearest timestamps within
/// tolerance. Reference timestamps must be sorted.
std::vector<std::pair<int, int>> associateByTime(const std::vector<double>& estimate_timestamps,
                                                 const std::vector<double>& reference_timestamps,
                                                 double tolerance);

/// Position RMSE between two trajectories expressed in the same world frame.
/// With align == true a rigid (rotation + translation, no scale) fit of the
/// estimate onto the reference is removed first, for cross-checking
/// trajectories from other frames. Throws DataError when fewer than 2 pose
/// pairs associate.
EvalReport evaluateTrajectories(const std::vector<TimedPose>& estimate,
                                const std::vector<TimedPose>& reference, double tolerance,
                                bool align = false);

}  // namespace monorange
