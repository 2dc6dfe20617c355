#include "monorange/eval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace monorange {

std::vector<std::pair<int, int>> associateByTime(const std::vector<double>& estimate_timestamps,
                                                 const std::vector<double>& reference_timestamps,
                                                 double tolerance) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < estimate_timestamps.size(); ++i) {
    const double t = estimate_timestamps[i];
    const auto it =
        std::lower_bound(reference_timestamps.begin(), reference_timestamps.end(), t);
    int best = -1;
    double best_dt = tolerance;
    if (it != reference_timestamps.end()) {
      const double dt = std::abs(*it - t);
      if (dt <= best_dt) {
        best = static_cast<int>(it - reference_timestamps.begin());
        best_dt = dt;
      }
    }
    if (it != reference_timestamps.begin()) {
      const double dt = std::abs(*std::prev(it) - t);
      if (dt < best_dt || (best < 0 && dt <= best_dt)) {
        best = static_cast<int>(it - reference_timestamps.begin()) - 1;
      }
    }
    if (best >= 0) {
      pairs.emplace_back(static_cast<int>(i), best);
    }
  }
  return pairs;
}

EvalReport evaluateTrajectories(const std::vector<TimedPose>& estimate,
                                const std::vector<TimedPose>& reference, double tolerance,
                                bool align) {
  std::vector<double> estimate_times, reference_times;
  estimate_times.reserve(estimate.size());
  reference_times.reserve(reference.size());
  for (const TimedPose& s : estimate) estimate_times.push_back(s.timestamp);
  for (const TimedPose& s : reference) reference_times.push_back(s.timestamp);

  const auto pairs = associateByTime(estimate_times, reference_times, tolerance);
  if (pairs.size() < 2) {
    throw DataError("evaluateTrajectories: fewer than 2 pose pairs associate within " +
                    std::to_string(tolerance) + " s");
  }

  const int n = static_cast<int>(pairs.size());
  Eigen::Matrix3Xd estimate_positions(3, n);
  Eigen::Matrix3Xd reference_positions(3, n);
  for (int i = 0; i < n; ++i) {
    estimate_positions.col(i) = estimate[pairs[i].first].pose.translation();
    reference_positions.col(i) = reference[pairs[i].second].pose.translation();
  }

  if (align) {
    const Eigen::Matrix4d transform =
        Eigen::umeyama(estimate_positions, reference_positions, /*with_scaling=*/false);
    estimate_positions = (transform.topLeftCorner<3, 3>() * estimate_positions).colwise() +
                         transform.topRightCorner<3, 1>();
  }

  EvalReport report;
  report.n_compared = n;
  report.tolerance = tolerance;
  report.aligned = align;
  Eigen::Vector3d per_axis_sq = Eigen::Vector3d::Zero();
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d error = estimate_positions.col(i) - reference_positions.col(i);
    sum_sq += error.squaredNorm();
    per_axis_sq += error.cwiseAbs2();
    report.max_error = std::max(report.max_error, error.norm());
  }
  report.rmse = std::sqrt(sum_sq / n);
  report.per_axis_rmse = (per_axis_sq / n).cwiseSqrt();
  return report;
}

}  // namespace monorange
