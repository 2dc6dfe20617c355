#pragma once

#include <vector>

#include "monorange/graph.hpp"
#include "monorange/io.hpp"
#include "monorange/scale.hpp"

namespace monorange {

struct GraphBuildOptions {
  double association_tolerance = kDefaultAssociationTolerance;
  bool robust_range = false;
};

struct GraphBuildStats {
  int dropped_points = 0;       // fewer than two usable views, or triangulation failed
  int unassociated_ranges = 0;  // no pose within the time tolerance
};

struct BuiltGraph {
  FactorGraph graph;
  GraphBuildStats stats;
  std::vector<double> timestamps;  // per graph pose
};

/// Assembles the global map database from an up-to-scale trajectory and raw
/// measurement records: scales the trajectory by alpha, triangulates every
/// map point from its observations (midpoint method) so the initial map is
/// consistent with the scaled poses, attaches range factors by nearest
/// timestamp and fixes the first pose as the gauge. The result satisfies
/// validateGraph or a DataError explains why not.
BuiltGraph buildGraph(const std::vector<TimedPose>& vo_trajectory,
                      const std::vector<ObservationRecord>& observations,
                      const std::vector<RangeMeasurement>& ranges,
                      const SensorCalibration& calibration, double alpha,
                      const GraphBuildOptions& options = {});

}  // namespace monorange
