#include "monorange/pipeline.hpp"

#include <map>
#include <string>

#include "monorange/eval.hpp"

namespace monorange {

BuiltGraph buildGraph(const std::vector<TimedPose>& vo_trajectory,
                      const std::vector<ObservationRecord>& observations,
                      const std::vector<RangeMeasurement>& ranges,
                      const SensorCalibration& calibration, double alpha,
                      const GraphBuildOptions& options) {
  if (vo_trajectory.empty()) {
    throw DataError("buildGraph: empty trajectory");
  }
  if (alpha == 0.0) {
    throw DataError("buildGraph: scale must be nonzero");
  }
  if (!calibration.has_camera) {
    throw DataError("buildGraph: camera intrinsics are required for re-projection factors");
  }

  BuiltGraph built;
  FactorGraph& graph = built.graph;
  graph.intrinsics = calibration.camera;
  graph.extrinsics.push_back(calibration.ranging);
  graph.robust_range = options.robust_range;

  const int n_poses = static_cast<int>(vo_trajectory.size());
  built.timestamps.reserve(vo_trajectory.size());
  for (int i = 0; i < n_poses; ++i) {
    const Pose3d& vo_pose = vo_trajectory[i].pose;
    graph.addPose(Pose3d(vo_pose.rotation(), alpha * vo_pose.translation()), /*fixed=*/i == 0);
    built.timestamps.push_back(vo_trajectory[i].timestamp);
  }

  std::map<int, std::vector<const ObservationRecord*>> per_point;
  for (const ObservationRecord& o : observations) {
    if (o.keyframe_index >= n_poses) {
      throw DataError("buildGraph: observation references keyframe " +
                      std::to_string(o.keyframe_index) + " but the trajectory has " +
                      std::to_string(n_poses) + " poses");
    }
    if (!pixelInImage(graph.intrinsics, o.pixel)) {
      throw DataError("buildGraph: observation of point " + std::to_string(o.point_index) +
                      " lies outside the image bounds");
    }
    per_point[o.point_index].push_back(&o);
  }

  // Triangulate the map from the scaled trajectory (midpoint method) so that
  // poses and points enter the graph self-consistently. Points with fewer
  // than two usable views are dropped with their observations.
  for (const auto& [point_id, point_observations] : per_point) {
    if (point_observations.size() < 2) {
      ++built.stats.dropped_points;
      continue;
    }
    std::vector<Pose3d> view_poses;
    std::vector<Eigen::Vector2d> view_pixels;
    view_poses.reserve(point_observations.size());
    view_pixels.reserve(point_observations.size());
    for (const ObservationRecord* o : point_observations) {
      view_poses.push_back(graph.poses[o->keyframe_index]);
      view_pixels.push_back(o->pixel);
    }
    const auto point = triangulateMidpoint(graph.intrinsics, view_poses, view_pixels);
    if (!point) {
      ++built.stats.dropped_points;
      continue;
    }
    const int index = graph.addPoint(*point);
    for (const ObservationRecord* o : point_observations) {
      graph.reprojection_factors.push_back({o->keyframe_index, index, o->pixel, o->sigma_px});
    }
  }

  for (const RangeMeasurement& m : ranges) {
    const auto pairs =
        associateByTime({m.timestamp}, built.timestamps, options.association_tolerance);
    if (pairs.empty()) {
      ++built.stats.unassociated_ranges;
      continue;
    }
    graph.range_factors.push_back({pairs.front().second, m.distance, m.sigma, 0});
  }

  validateGraph(graph);
  return built;
}

}  // namespace monorange
