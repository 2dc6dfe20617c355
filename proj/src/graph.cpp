#include "monorange/graph.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "monorange/io.hpp"

namespace monorange {

namespace {
constexpr double kHuberThreshold = 3.0;  // whitened sigmas
}

ReprojectionEvaluation evaluateReprojection(const FactorGraph& graph,
                                            const ReprojectionFactor& factor) {
  ReprojectionEvaluation eval;
  const auto projection = projectionJacobians(graph.intrinsics, graph.poses[factor.pose_index],
                                              graph.points[factor.point_index]);
  if (!projection) {
    return eval;  // behind camera
  }
  const double inv_sigma = 1.0 / factor.sigma_px;
  eval.residual = (projection->pixel - factor.observed_pixel) * inv_sigma;
  eval.j_pose = projection->j_pose * inv_sigma;
  eval.j_point = projection->j_point * inv_sigma;
  eval.active = true;
  return eval;
}

RangeEvaluation evaluateRange(const FactorGraph& graph, const RangeFactor& factor) {
  RangeEvaluation eval;
  const Pose3d& pose = graph.poses[factor.pose_index];
  const RangingExtrinsicsd& extrinsics = graph.extrinsics[factor.extrinsics_index];
  const Eigen::Vector3d rotated_lever = pose.rotation() * extrinsics.tag_lever_arm;
  const Eigen::Vector3d anchor_to_tag =
      -extrinsics.anchor_position + pose.translation() + rotated_lever;
  const double predicted = anchor_to_tag.norm();
  if (predicted < kRangeEpsilon) {
    return eval;  // direction undefined at the anchor
  }
  const double inv_sigma = 1.0 / factor.sigma_m;
  const Eigen::RowVector3d direction = anchor_to_tag.transpose() / predicted;
  eval.residual = (predicted - factor.measured_distance) * inv_sigma;
  // d(anchor_to_tag)/d(d_rot) = -R [lever]_x with the body-frame retraction
  eval.j_pose.leftCols<3>() =
      direction * (-pose.rotationMatrix() * skew(extrinsics.tag_lever_arm)) * inv_sigma;
  eval.j_pose.rightCols<3>() = direction * inv_sigma;
  eval.active = true;
  return eval;
}

double huberCost(double whitened_residual) {
  const double r = std::abs(whitened_residual);
  if (r <= kHuberThreshold) {
    return r * r;
  }
  return 2.0 * kHuberThreshold * r - kHuberThreshold * kHuberThreshold;
}

double huberSqrtWeight(double whitened_residual) {
  const double r = std::abs(whitened_residual);
  if (r <= kHuberThreshold) {
    return 1.0;
  }
  return std::sqrt(kHuberThreshold / r);
}

FactorActivation computeActivation(const FactorGraph& graph) {
  FactorActivation activation;
  activation.reprojection.resize(graph.reprojection_factors.size());
  activation.range.resize(graph.range_factors.size());
  for (std::size_t i = 0; i < graph.reprojection_factors.size(); ++i) {
    const auto projection =
        projectPoint(graph.intrinsics, graph.poses[graph.reprojection_factors[i].pose_index],
                     graph.points[graph.reprojection_factors[i].point_index]);
    activation.reprojection[i] = projection.has_value() ? 1 : 0;
    if (!projection) ++activation.n_inactive_reprojection;
  }
  for (std::size_t i = 0; i < graph.range_factors.size(); ++i) {
    const RangeFactor& factor = graph.range_factors[i];
    const Pose3d& pose = graph.poses[factor.pose_index];
    const RangingExtrinsicsd& extrinsics = graph.extrinsics[factor.extrinsics_index];
    const double predicted = predictRange(pose, 1.0, extrinsics);
    activation.range[i] = predicted >= kRangeEpsilon ? 1 : 0;
    if (predicted < kRangeEpsilon) ++activation.n_inactive_range;
  }
  return activation;
}

double totalCost(const FactorGraph& graph) { return totalCost(graph, computeActivation(graph)); }

double totalCost(const FactorGraph& graph, const FactorActivation& activation) {
  double cost = 0.0;
  for (std::size_t i = 0; i < graph.reprojection_factors.size(); ++i) {
    if (!activation.reprojection[i]) continue;
    const ReprojectionEvaluation eval =
        evaluateReprojection(graph, graph.reprojection_factors[i]);
    if (!eval.active) continue;  // activation may be stale for this iterate
    const double term = eval.residual.squaredNorm();
    if (!std::isfinite(term)) {
      throw NumericalError("totalCost: non-finite residual in reprojection factor " +
                           std::to_string(i));
    }
    cost += term;
  }
  for (std::size_t i = 0; i < graph.range_factors.size(); ++i) {
    if (!activation.range[i]) continue;
    const RangeEvaluation eval = evaluateRange(graph, graph.range_factors[i]);
    if (!eval.active) continue;
    const double term =
        graph.robust_range ? huberCost(eval.residual) : eval.residual * eval.residual;
    if (!std::isfinite(term)) {
      throw NumericalError("totalCost: non-finite residual in range factor " + std::to_string(i));
    }
    cost += term;
  }
  return cost;
}

FactorGraph applyScale(FactorGraph graph, double alpha) {
  if (alpha == 0.0 || !std::isfinite(alpha)) {
    throw DataError("applyScale: scale must be finite and nonzero");
  }
  for (Pose3d& pose : graph.poses) {
    pose.setTranslation(alpha * pose.translation());
  }
  for (Eigen::Vector3d& point : graph.points) {
    point *= alpha;
  }
  return graph;
}

void validateGraph(const FactorGraph& graph) {
  const int n_poses = static_cast<int>(graph.poses.size());
  const int n_points = static_cast<int>(graph.points.size());
  if (graph.pose_fixed.size() != graph.poses.size() ||
      graph.point_fixed.size() != graph.points.size()) {
    throw DataError("validateGraph: fixed flags not sized to variables");
  }
  std::vector<int> observations_per_point(graph.points.size(), 0);
  for (std::size_t i = 0; i < graph.reprojection_factors.size(); ++i) {
    const ReprojectionFactor& f = graph.reprojection_factors[i];
    if (f.pose_index < 0 || f.pose_index >= n_poses || f.point_index < 0 ||
        f.point_index >= n_points) {
      throw DataError("validateGraph: reprojection factor " + std::to_string(i) +
                      " references a missing variable");
    }
    if (!(f.sigma_px > 0.0)) {
      throw DataError("validateGraph: reprojection factor " + std::to_string(i) +
                      " has non-positive sigma");
    }
    ++observations_per_point[f.point_index];
  }
  for (std::size_t i = 0; i < graph.range_factors.size(); ++i) {
    const RangeFactor& f = graph.range_factors[i];
    if (f.pose_index < 0 || f.pose_index >= n_poses || f.extrinsics_index < 0 ||
        f.extrinsics_index >= static_cast<int>(graph.extrinsics.size())) {
      throw DataError("validateGraph: range factor " + std::to_string(i) +
                      " references a missing variable");
    }
    if (!(f.sigma_m > 0.0) || f.measured_distance < 0.0) {
      throw DataError("validateGraph: range factor " + std::to_string(i) + " is malformed");
    }
  }
  bool any_fixed = false;
  for (bool fixed : graph.pose_fixed) any_fixed |= fixed;
  if (!any_fixed) {
    throw DataError("validateGraph: at least one pose must be fixed (gauge freedom)");
  }
  for (int j = 0; j < n_points; ++j) {
    if (!graph.point_fixed[j] && observations_per_point[j] < 2) {
      throw DataError("validateGraph: map point " + std::to_string(j) +
                      " has fewer than 2 observations and is unconstrained along its ray");
    }
  }
}

// ---------------------------------------------------------------------------
// Snapshot format
// ---------------------------------------------------------------------------

namespace {

std::istream& expectTag(std::istream& in, const std::string& expected) {
  std::string tag;
  in >> tag;
  if (tag != expected) {
    throw DataError("readGraphSnapshot: expected '" + expected + "', got '" + tag + "'");
  }
  return in;
}

}  // namespace

void writeGraphSnapshot(std::ostream& out, const FactorGraph& graph) {
  const auto d = [](double v) { return formatDouble(v, 17); };
  out << "MONORANGE_GRAPH 1\n";
  out << "INTRINSICS " << d(graph.intrinsics.fx) << ' ' << d(graph.intrinsics.fy) << ' '
      << d(graph.intrinsics.cx) << ' ' << d(graph.intrinsics.cy) << ' ' << graph.intrinsics.width
      << ' ' << graph.intrinsics.height << '\n';
  out << "EXTRINSICS " << graph.extrinsics.size() << '\n';
  for (const RangingExtrinsicsd& e : graph.extrinsics) {
    out << d(e.anchor_position.x()) << ' ' << d(e.anchor_position.y()) << ' '
        << d(e.anchor_position.z()) << ' ' << d(e.tag_lever_arm.x()) << ' '
        << d(e.tag_lever_arm.y()) << ' ' << d(e.tag_lever_arm.z()) << '\n';
  }
  out << "ROBUST " << (graph.robust_range ? 1 : 0) << '\n';
  out << "POSES " << graph.poses.size() << '\n';
  for (std::size_t i = 0; i < graph.poses.size(); ++i) {
    const Pose3d& p = graph.poses[i];
    out << d(p.translation().x()) << ' ' << d(p.translation().y()) << ' '
        << d(p.translation().z()) << ' ' << d(p.rotation().x()) << ' ' << d(p.rotation().y())
        << ' ' << d(p.rotation().z()) << ' ' << d(p.rotation().w()) << ' '
        << (graph.pose_fixed[i] ? 1 : 0) << '\n';
  }
  out << "POINTS " << graph.points.size() << '\n';
  for (std::size_t i = 0; i < graph.points.size(); ++i) {
    const Eigen::Vector3d& x = graph.points[i];
    out << d(x.x()) << ' ' << d(x.y()) << ' ' << d(x.z()) << ' ' << (graph.point_fixed[i] ? 1 : 0)
        << '\n';
  }
  out << "REPROJ " << graph.reprojection_factors.size() << '\n';
  for (const ReprojectionFactor& f : graph.reprojection_factors) {
    out << f.pose_index << ' ' << f.point_index << ' ' << d(f.observed_pixel.x()) << ' '
        << d(f.observed_pixel.y()) << ' ' << d(f.sigma_px) << '\n';
  }
  out << "RANGE " << graph.range_factors.size() << '\n';
  for (const RangeFactor& f : graph.range_factors) {
    out << f.pose_index << ' ' << f.extrinsics_index << ' ' << d(f.measured_distance) << ' '
        << d(f.sigma_m) << '\n';
  }
}

FactorGraph readGraphSnapshot(std::istream& in) {
  FactorGraph graph;
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "MONORANGE_GRAPH" || version != 1) {
    throw DataError("readGraphSnapshot: not a graph snapshot");
  }
  expectTag(in, "INTRINSICS");
  in >> graph.intrinsics.fx >> graph.intrinsics.fy >> graph.intrinsics.cx >> graph.intrinsics.cy >>
      graph.intrinsics.width >> graph.intrinsics.height;
  std::size_t count = 0;
  expectTag(in, "EXTRINSICS") >> count;
  graph.extrinsics.resize(count);
  for (RangingExtrinsicsd& e : graph.extrinsics) {
    in >> e.anchor_position.x() >> e.anchor_position.y() >> e.anchor_position.z() >>
        e.tag_lever_arm.x() >> e.tag_lever_arm.y() >> e.tag_lever_arm.z();
  }
  int robust = 0;
  expectTag(in, "ROBUST") >> robust;
  graph.robust_range = robust != 0;
  expectTag(in, "POSES") >> count;
  graph.poses.reserve(count);
  graph.pose_fixed.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Vector3d t;
    double qx, qy, qz, qw;
    int fixed;
    in >> t.x() >> t.y() >> t.z() >> qx >> qy >> qz >> qw >> fixed;
    graph.addPose(Pose3d(Eigen::Quaterniond(qw, qx, qy, qz), t), fixed != 0);
  }
  expectTag(in, "POINTS") >> count;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Vector3d x;
    int fixed;
    in >> x.x() >> x.y() >> x.z() >> fixed;
    graph.addPoint(x, fixed != 0);
  }
  expectTag(in, "REPROJ") >> count;
  graph.reprojection_factors.resize(count);
  for (ReprojectionFactor& f : graph.reprojection_factors) {
    in >> f.pose_index >> f.point_index >> f.observed_pixel.x() >> f.observed_pixel.y() >>
        f.sigma_px;
  }
  expectTag(in, "RANGE") >> count;
  graph.range_factors.resize(count);
  for (RangeFactor& f : graph.range_factors) {
    in >> f.pose_index >> f.extrinsics_index >> f.measured_distance >> f.sigma_m;
  }
  if (!in) {
    throw DataError("readGraphSnapshot: truncated snapshot");
  }
  return graph;
}

}  // namespace monorange
