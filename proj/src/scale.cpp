#include "monorange/scale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace monorange {

namespace {

/// Index of the trajectory pose with timestamp nearest to t, or -1 when the
/// nearest one is further than tolerance.
int nearestPoseIndex(const std::vector<TimedPose>& trajectory, double t, double tolerance) {
  const auto it = std::lower_bound(
      trajectory.begin(), trajectory.end(), t,
      [](const TimedPose& pose, double value) { return pose.timestamp < value; });
  int best = -1;
  double best_dt = tolerance;
  if (it != trajectory.end()) {
    const double dt = std::abs(it->timestamp - t);
    if (dt <= best_dt) {
      best = static_cast<int>(it - trajectory.begin());
      best_dt = dt;
    }
  }
  if (it != trajectory.begin()) {
    const auto prev = std::prev(it);
    const double dt = std::abs(prev->timestamp - t);
    if (dt < best_dt || (best < 0 && dt <= best_dt)) {
      best = static_cast<int>(prev - trajectory.begin());
    }
  }
  return best;
}

struct BranchStats {
  double mean = 0.0;
  double std_dev = 0.0;
};

BranchStats branchStats(const std::vector<double>& values) {
  BranchStats stats;
  const int n = static_cast<int>(values.size());
  for (double v : values) stats.mean += v;
  stats.mean /= n;
  if (n > 1) {
    double sum_sq = 0.0;
    for (double v : values) {
      const double d = v - stats.mean;
      sum_sq += d * d;
    }
    stats.std_dev = std::sqrt(sum_sq / (n - 1));
  }
  return stats;
}

std::vector<double> madFilter(const std::vector<double>& values, double threshold) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::vector<double> deviations;
  deviations.reserve(values.size());
  for (double v : values) deviations.push_back(std::abs(v - median));
  std::sort(deviations.begin(), deviations.end());
  const double mad = deviations[deviations.size() / 2];
  if (mad <= 0.0) return values;
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values) {
    if (std::abs(v - median) / mad <= threshold) kept.push_back(v);
  }
  return kept;
}

}  // namespace

DupletAccumulation accumulateDuplets(const std::vector<TimedPose>& trajectory,
                                     const std::vector<RangeMeasurement>& ranges,
                                     const RangingExtrinsicsd& extrinsics,
                                     double association_tolerance) {
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (!(trajectory[i].timestamp > trajectory[i - 1].timestamp)) {
      throw DataError("accumulateDuplets: trajectory timestamps must be strictly increasing");
    }
  }

  DupletAccumulation accumulation;
  std::vector<ScaleDuplet>& duplets = accumulation.duplets;
  for (const RangeMeasurement& range : ranges) {
    const int pose_index = nearestPoseIndex(trajectory, range.timestamp, association_tolerance);
    if (pose_index < 0) {
      ++accumulation.n_unassociated;
      continue;
    }
    const ScaleCandidateResult candidates =
        scaleCandidates(trajectory[pose_index].pose, range, extrinsics);
    switch (candidates.status) {
      case ScaleCandidateStatus::Ok:
        duplets.push_back(candidates.duplet);
        break;
      case ScaleCandidateStatus::DegeneratePose:
        ++accumulation.n_degenerate;
        break;
      case ScaleCandidateStatus::NoRealSolution:
        ++accumulation.n_no_real_solution;
        break;
    }
  }
  std::stable_sort(duplets.begin(), duplets.end(),
                   [](const ScaleDuplet& a, const ScaleDuplet& b) { return a.timestamp < b.timestamp; });
  return accumulation;
}

ScaleEstimate selectScale(const std::vector<ScaleDuplet>& duplets,
                          const ScaleSelectionOptions& options) {
  const int n = static_cast<int>(duplets.size());
  if (n < options.min_samples) {
    throw DataError("selectScale: need at least " + std::to_string(options.min_samples) +
                    " duplets, got " + std::to_string(n));
  }

  std::vector<double> minus_branch, plus_branch;
  minus_branch.reserve(duplets.size());
  plus_branch.reserve(duplets.size());
  for (const ScaleDuplet& d : duplets) {
    minus_branch.push_back(d.alpha_minus);
    plus_branch.push_back(d.alpha_plus);
  }
  if (options.mad_prefilter) {
    minus_branch = madFilter(minus_branch, options.mad_threshold);
    plus_branch = madFilter(plus_branch, options.mad_threshold);
  }
  const BranchStats minus_stats = branchStats(minus_branch);
  const BranchStats plus_stats = branchStats(plus_branch);

  ScaleEstimate estimate;
  estimate.plus_branch_selected = plus_stats.std_dev <= minus_stats.std_dev;
  const BranchStats& selected = estimate.plus_branch_selected ? plus_stats : minus_stats;
  const BranchStats& rejected = estimate.plus_branch_selected ? minus_stats : plus_stats;
  estimate.alpha = selected.mean;
  estimate.std_dev = selected.std_dev;
  estimate.n_samples =
      static_cast<int>(estimate.plus_branch_selected ? plus_branch.size() : minus_branch.size());
  estimate.rejected_branch_mean = rejected.mean;
  estimate.rejected_branch_std = rejected.std_dev;
  const double larger_std = std::max(minus_stats.std_dev, plus_stats.std_dev);
  estimate.ambiguous =
      larger_std > 0.0 && (larger_std - selected.std_dev) / larger_std < 0.10;
  return estimate;
}

}  // namespace monorange
