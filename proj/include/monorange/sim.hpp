#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "monorange/core.hpp"
#include "monorange/geometry.hpp"
#include "monorange/io.hpp"
#include "monorange/ranging.hpp"

namespace monorange {

/// Deterministic random stream: all simulator randomness flows from one seed.
/// Gaussians use an explicit Box-Muller transform so the stream does not
/// depend on standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return std::ldexp(static_cast<double>(engine_() >> 11), -53);
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  Eigen::Vector3d gaussian3() {
    Eigen::Vector3d v;
    v.x() = gaussian();
    v.y() = gaussian();
    v.z() = gaussian();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Derives independent sub-stream seeds from one master seed (splitmix64).
std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream);

enum class TrajectoryShape { Circle, FigureEight, Straight };

TrajectoryShape trajectoryShapeFromString(const std::string& name);
const char* trajectoryShapeName(TrajectoryShape shape);

/// Ground-truth world description. Geometry is laid out in a z-up map frame
/// (trajectory in the horizontal plane at camera_height, camera looking
/// along the direction of travel, image y down); generateWorld re-expresses
/// everything in the world frame defined by the first camera pose.
struct WorldConfig {
  TrajectoryShape shape = TrajectoryShape::FigureEight;
  double width = 20.0;    // figure-eight extent along x [m]
  double height = 10.0;   // figure-eight extent along y [m]
  double radius = 8.0;    // circle [m]
  double length = 10.0;   // straight [m]
  int n_keyframes = 100;
  int n_map_points = 500;
  Eigen::Vector3d point_box_min{-5.0, -10.0, 0.0};  // map frame [m]
  Eigen::Vector3d point_box_max{25.0, 10.0, 2.5};
  CameraIntrinsicsd intrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};
  Eigen::Vector3d anchor_map{-15.0, 0.0, 0.3};      // map frame [m]
  Eigen::Vector3d tag_lever_arm{0.10, -0.03, 0.06}; // camera frame [m]
  double true_scale = 4.6;
  double camera_height = 0.4;  // map frame [m]
  double keyframe_dt = 0.2;    // s
  /// Fraction of the closed circle / figure-eight the rover traverses.
  /// Below 1 the trajectory never revisits its start, so no loop closure
  /// would be available and dead-reckoning drift keeps accumulating.
  double loop_fraction = 0.9;
  /// First keyframe with an emitted range. Earlier measurements stand in for
  /// the mission's initial phase (anchor survey, map bootstrap): near the
  /// world origin the camera has barely translated and a range constrains
  /// the scale so weakly that its noise would swamp the duplet statistics.
  int range_start_keyframe = 10;
  std::uint64_t seed = 1;
};

struct NoiseConfig {
  double pixel_sigma = 0.0;       // px
  double range_sigma = 0.0;       // m
  double rot_walk_sigma = 0.0;    // rad per keyframe step
  double trans_walk_frac = 0.0;   // fraction of each step length
  double outlier_prob = 0.0;
  double outlier_magnitude = 0.0; // m
};

/// Benchmark noise level: 1 px pixels, 0.10 m ranges, 1% translation walk,
/// 0.002 rad rotation walk.
NoiseConfig benchmarkNoise();

struct World {
  std::vector<double> timestamps;
  std::vector<Pose3d> poses;            // world frame, metric ground truth
  std::vector<Eigen::Vector3d> points;  // world frame, metric ground truth
  RangingExtrinsicsd extrinsics;        // world frame anchor, camera-frame lever arm
  CameraIntrinsicsd intrinsics;
  Pose3d world_from_map;                // map-frame layout -> world frame
  int range_start_keyframe = 0;
};

struct SyntheticMeasurements {
  std::vector<ObservationRecord> pixels;
  std::vector<RangeMeasurement> ranges;        // one per keyframe from range_start_keyframe on
  std::vector<int> range_keyframe_indices;     // keyframe of each range
};

/// Builds the ground-truth world. Deterministic for a fixed config. Every
/// map point is visible (in front, in bounds) from at least two keyframes;
/// points are rejection-sampled up to 1000 times each before the
/// configuration is declared infeasible (DataError).
World generateWorld(const WorldConfig& config);

/// Pixel observations (true projection + Gaussian noise, out-of-frame drops)
/// and tag-anchor ranges (true distance + Gaussian noise + optional
/// outliers) from the ground-truth world.
SyntheticMeasurements synthesizeMeasurements(const World& world, const NoiseConfig& noise,
                                             std::uint64_t seed);

/// Turns the metric ground-truth trajectory into an up-to-scale visual
/// odometry estimate: translations divided by true_scale, then a random walk
/// compounded on the relative motions. The first pose stays identity.
std::vector<Pose3d> corruptToVo(const std::vector<Pose3d>& true_poses, double true_scale,
                                const NoiseConfig& noise, std::uint64_t seed);

}  // namespace monorange
