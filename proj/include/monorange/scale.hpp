#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "monorange/core.hpp"
#include "monorange/geometry.hpp"
#include "monorange/ranging.hpp"

namespace monorange {

/// The two global-scale roots obtained from one range measurement.
/// A measured distance constrains the scaled camera position to a sphere
/// around the anchor; the up-to-scale position traces a ray, and the
/// ray-sphere intersection is a quadratic in the scale.
struct ScaleDuplet {
  double timestamp = 0.0;
  double alpha_minus = 0.0;  // root taking the negative radical
  double alpha_plus = 0.0;   // root taking the positive radical
  double discriminant = 0.0;
};

enum class ScaleCandidateStatus {
  Ok,
  DegeneratePose,   // camera has not translated from the world origin
  NoRealSolution,   // measured sphere misses the ray (negative discriminant)
};

struct ScaleCandidateResult {
  ScaleCandidateStatus status = ScaleCandidateStatus::Ok;
  ScaleDuplet duplet;  // valid iff status == Ok
};

/// Solves the scale quadratic A a^2 + 2 B a + C = 0 for one pose/range pair:
///   A = ||t||^2,  B = t^T (R l - p_anchor),  C = ||R l - p_anchor||^2 - rho^2
/// with t the up-to-scale camera position, l the tag lever arm and rho the
/// measured distance. Both roots are returned as -B/A +- sqrt((B/A)^2 - C/A).
template <typename Scalar>
ScaleCandidateResult scaleCandidates(const Pose3<Scalar>& pose, const RangeMeasurement& range,
                                     const RangingExtrinsics<Scalar>& extrinsics) {
  using std::sqrt;
  ScaleCandidateResult result;
  const Eigen::Matrix<Scalar, 3, 1> translation = pose.translation();
  if (translation.norm() < Scalar(kPositionEpsilon)) {
    result.status = ScaleCandidateStatus::DegeneratePose;
    return result;
  }
  const Eigen::Matrix<Scalar, 3, 1> tag_offset =
      pose.rotation() * extrinsics.tag_lever_arm - extrinsics.anchor_position;
  const Scalar a = translation.squaredNorm();
  const Scalar b = translation.dot(tag_offset);
  const Scalar c = tag_offset.squaredNorm() - Scalar(range.distance) * Scalar(range.distance);

  const Scalar b_over_a = b / a;
  const Scalar discriminant = b_over_a * b_over_a - c / a;
  result.duplet.timestamp = range.timestamp;
  result.duplet.discriminant = static_cast<double>(discriminant);
  if (discriminant < Scalar(0)) {
    result.status = ScaleCandidateStatus::NoRealSolution;
    return result;
  }
  const Scalar radical = sqrt(discriminant);
  result.duplet.alpha_minus = static_cast<double>(-b_over_a - radical);
  result.duplet.alpha_plus = static_cast<double>(-b_over_a + radical);
  return result;
}

/// Default time tolerance when pairing range measurements with poses [s].
inline constexpr double kDefaultAssociationTolerance = 0.05;

/// Minimum duplet count required before a scale is selected.
inline constexpr int kDefaultMinScaleSamples = 10;

struct DupletAccumulation {
  std::vector<ScaleDuplet> duplets;  // in time order
  int n_unassociated = 0;            // no pose within tolerance
  int n_degenerate = 0;              // pose at the world origin
  int n_no_real_solution = 0;        // negative discriminant

  int skipped() const { return n_unassociated + n_degenerate + n_no_real_solution; }
};

/// Pairs each range with the nearest-in-time pose (within tolerance) and
/// collects the solvable duplets. Trajectory timestamps must be strictly
/// increasing (throws DataError otherwise).
DupletAccumulation accumulateDuplets(const std::vector<TimedPose>& trajectory,
                                     const std::vector<RangeMeasurement>& ranges,
                                     const RangingExtrinsicsd& extrinsics,
                                     double association_tolerance = kDefaultAssociationTolerance);

/// Selected initial global scale and the per-branch statistics behind it.
struct ScaleEstimate {
  double alpha = 0.0;
  double std_dev = 0.0;
  int n_samples = 0;
  double rejected_branch_mean = 0.0;
  double rejected_branch_std = 0.0;
  bool plus_branch_selected = false;
  /// The two branch deviations differ by less than 10% relative.
  bool ambiguous = false;
};

/// Median-absolute-deviation prefilter applied per branch before statistics;
/// off by default.
struct ScaleSelectionOptions {
  int min_samples = kDefaultMinScaleSamples;
  bool mad_prefilter = false;
  double mad_threshold = 3.5;
};

/// Computes mean and sample standard deviation of each radical branch across
/// the duplets and returns the branch with the smaller deviation. Throws
/// DataError when fewer than min_samples duplets are given.
ScaleEstimate selectScale(const std::vector<ScaleDuplet>& duplets,
                          const ScaleSelectionOptions& options = {});

}  // namespace monorange
