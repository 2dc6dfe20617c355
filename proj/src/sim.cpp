#include "monorange/sim.hpp"

#include <cmath>
#include <string>

namespace monorange {

namespace {

constexpr int kMaxRejectionRounds = 1000;
constexpr double kMinVisibleDepth = 0.2;  // m, margin for point visibility
constexpr int kMinObservers = 2;

struct MapSample {
  Eigen::Vector3d position;
  Eigen::Vector3d tangent;
};

MapSample trajectorySample(const WorldConfig& config, int k) {
  const int n = config.n_keyframes;
  MapSample sample;
  switch (config.shape) {
    case TrajectoryShape::Straight: {
      const double s = config.length * static_cast<double>(k) / (n - 1);
      sample.position = Eigen::Vector3d(s, 0.0, config.camera_height);
      sample.tangent = Eigen::Vector3d::UnitX();
      break;
    }
    case TrajectoryShape::Circle: {
      // starts at the origin, center at (0, radius), initial heading +x
      const double theta =
          config.loop_fraction * 2.0 * M_PI * static_cast<double>(k) / (n - 1);
      sample.position = Eigen::Vector3d(config.radius * std::sin(theta),
                                        config.radius * (1.0 - std::cos(theta)),
                                        config.camera_height);
      sample.tangent = Eigen::Vector3d(std::cos(theta), std::sin(theta), 0.0);
      break;
    }
    case TrajectoryShape::FigureEight: {
      // Lissajous 1:2 starting at the origin edge of the eight, so the
      // camera position never moves behind the world origin
      const double theta =
          -M_PI / 2.0 + config.loop_fraction * 2.0 * M_PI * static_cast<double>(k) / (n - 1);
      sample.position =
          Eigen::Vector3d(0.5 * config.width * (1.0 + std::sin(theta)),
                          0.5 * config.height * std::sin(2.0 * theta), config.camera_height);
      sample.tangent = Eigen::Vector3d(0.5 * config.width * std::cos(theta),
                                       config.height * std::cos(2.0 * theta), 0.0)
                           .normalized();
      break;
    }
  }
  return sample;
}

/// Camera orientation in the map frame: optical axis (+z) along the
/// horizontal tangent, image y pointing down (-z_map).
Eigen::Quaterniond cameraOrientation(const Eigen::Vector3d& tangent) {
  const Eigen::Vector3d forward = tangent.normalized();
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  const Eigen::Vector3d right = down.cross(forward).normalized();
  Eigen::Matrix3d rotation;
  rotation.col(0) = right;
  rotation.col(1) = down;
  rotation.col(2) = forward;
  return Eigen::Quaterniond(rotation);
}

int countObservers(const World& world, const Eigen::Vector3d& point_world) {
  int observers = 0;
  for (const Pose3d& pose : world.poses) {
    const Eigen::Vector3d p_camera = pose.worldToCamera(point_world);
    if (p_camera.z() < kMinVisibleDepth) continue;
    const Eigen::Vector2d pixel(
        world.intrinsics.fx * p_camera.x() / p_camera.z() + world.intrinsics.cx,
        world.intrinsics.fy * p_camera.y() / p_camera.z() + world.intrinsics.cy);
    if (!pixelInImage(world.intrinsics, pixel)) continue;
    if (++observers >= kMinObservers) return observers;
  }
  return observers;
}

}  // namespace

std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TrajectoryShape trajectoryShapeFromString(const std::string& name) {
  if (name == "circle") return TrajectoryShape::Circle;
  if (name == "figure-eight") return TrajectoryShape::FigureEight;
  if (name == "straight") return TrajectoryShape::Straight;
  throw ConfigError("unknown trajectory shape '" + name +
                    "' (expected circle, figure-eight or straight)");
}

const char* trajectoryShapeName(TrajectoryShape shape) {
  switch (shape) {
    case TrajectoryShape::Circle:
      return "circle";
    case TrajectoryShape::FigureEight:
      return "figure-eight";
    case TrajectoryShape::Straight:
      return "straight";
  }
  return "unknown";
}

NoiseConfig benchmarkNoise() {
  NoiseConfig noise;
  noise.pixel_sigma = 1.0;
  noise.range_sigma = 0.10;
  noise.rot_walk_sigma = 0.002;
  noise.trans_walk_frac = 0.01;
  return noise;
}

World generateWorld(const WorldConfig& config) {
  if (config.n_keyframes < 2) {
    throw DataError("generateWorld: need at least 2 keyframes");
  }
  if (config.n_map_points < 8) {
    throw DataError("generateWorld: need at least 8 map points");
  }
  if (!(config.true_scale > 0.0)) {
    throw DataError("generateWorld: true scale must be positive");
  }
  if (!config.intrinsics.isValid()) {
    throw DataError("generateWorld: invalid camera intrinsics");
  }
  if (config.range_start_keyframe < 0 || config.range_start_keyframe >= config.n_keyframes) {
    throw DataError("generateWorld: range_start_keyframe out of range");
  }

  World world;
  world.intrinsics = config.intrinsics;
  world.range_start_keyframe = config.range_start_keyframe;
  world.timestamps.resize(config.n_keyframes);
  world.poses.reserve(config.n_keyframes);

  std::vector<Pose3d> map_poses;
  map_poses.reserve(config.n_keyframes);
  for (int k = 0; k < config.n_keyframes; ++k) {
    world.timestamps[k] = config.keyframe_dt * k;
    const MapSample sample = trajectorySample(config, k);
    map_poses.emplace_back(cameraOrientation(sample.tangent), sample.position);
  }

  // The world frame is the first camera frame.
  const Pose3d map_from_world = map_poses.front();
  const Pose3d world_from_map = map_from_world.inverse();
  world.world_from_map = world_from_map;
  for (int k = 0; k < config.n_keyframes; ++k) {
    world.poses.push_back(world_from_map * map_poses[k]);
  }
  world.poses.front() = Pose3d::Identity();

  world.extrinsics.anchor_position = world_from_map.apply(config.anchor_map);
  world.extrinsics.tag_lever_arm = config.tag_lever_arm;

  Rng rng(config.seed);
  const Eigen::Vector3d box_extent = config.point_box_max - config.point_box_min;
  world.points.reserve(config.n_map_points);
  for (int i = 0; i < config.n_map_points; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRejectionRounds; ++attempt) {
      Eigen::Vector3d candidate_map = config.point_box_min;
      candidate_map.x() += box_extent.x() * rng.uniform01();
      candidate_map.y() += box_extent.y() * rng.uniform01();
      candidate_map.z() += box_extent.z() * rng.uniform01();
      const Eigen::Vector3d candidate = world_from_map.apply(candidate_map);
      if (countObservers(world, candidate) >= kMinObservers) {
        world.points.push_back(candidate);
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw DataError("generateWorld: no visible placement for map point " + std::to_string(i) +
                      " after " + std::to_string(kMaxRejectionRounds) +
                      " rejection rounds; the camera cannot see the point box");
    }
  }
  return world;
}

SyntheticMeasurements synthesizeMeasurements(const World& world, const NoiseConfig& noise,
                                             std::uint64_t seed) {
  SyntheticMeasurements measurements;
  Rng rng(seed);

  const double sigma_px = noise.pixel_sigma > 0.0 ? noise.pixel_sigma : kDefaultPixelSigma;
  for (std::size_t k = 0; k < world.poses.size(); ++k) {
    for (std::size_t i = 0; i < world.points.size(); ++i) {
      const auto projection = projectPoint(world.intrinsics, world.poses[k], world.points[i]);
      if (!projection || !pixelInImage(world.intrinsics, *projection)) continue;
      Eigen::Vector2d pixel = *projection;
      if (noise.pixel_sigma > 0.0) {
        pixel.x() += noise.pixel_sigma * rng.gaussian();
        pixel.y() += noise.pixel_sigma * rng.gaussian();
        if (!pixelInImage(world.intrinsics, pixel)) continue;
      }
      ObservationRecord record;
      record.keyframe_index = static_cast<int>(k);
      record.point_index = static_cast<int>(i);
      record.pixel = pixel;
      record.sigma_px = sigma_px;
      measurements.pixels.push_back(record);
    }
  }

  const double sigma_m = noise.range_sigma > 0.0 ? noise.range_sigma : kDefaultRangeSigma;
  for (std::size_t k = static_cast<std::size_t>(world.range_start_keyframe);
       k < world.poses.size(); ++k) {
    RangeMeasurement m;
    m.timestamp = world.timestamps[k];
    m.distance = predictRange(world.poses[k], 1.0, world.extrinsics);
    if (noise.range_sigma > 0.0) {
      m.distance += noise.range_sigma * rng.gaussian();
    }
    if (noise.outlier_prob > 0.0 && rng.uniform01() < noise.outlier_prob) {
      m.distance += (rng.uniform01() < 0.5 ? -1.0 : 1.0) * noise.outlier_magnitude;
    }
    m.distance = std::max(0.0, m.distance);
    m.sigma = sigma_m;
    measurements.ranges.push_back(m);
    measurements.range_keyframe_indices.push_back(static_cast<int>(k));
  }
  return measurements;
}

std::vector<Pose3d> corruptToVo(const std::vector<Pose3d>& true_poses, double true_scale,
                                const NoiseConfig& noise, std::uint64_t seed) {
  if (!(true_scale > 0.0)) {
    throw DataError("corruptToVo: true scale must be positive");
  }
  std::vector<Pose3d> scaled;
  scaled.reserve(true_poses.size());
  for (const Pose3d& pose : true_poses) {
    scaled.emplace_back(pose.rotation(), pose.translation() / true_scale);
  }
  if (scaled.empty()) return scaled;

  Rng rng(seed);
  std::vector<Pose3d> vo;
  vo.reserve(scaled.size());
  vo.push_back(scaled.front());
  for (std::size_t k = 1; k < scaled.size(); ++k) {
    Pose3d relative = scaled[k - 1].inverse() * scaled[k];
    Eigen::Quaterniond rotation = relative.rotation();
    Eigen::Vector3d translation = relative.translation();
    if (noise.rot_walk_sigma > 0.0) {
      rotation = rotation * expSo3<double>(noise.rot_walk_sigma * rng.gaussian3());
    }
    if (noise.trans_walk_frac > 0.0) {
      translation += noise.trans_walk_frac * translation.norm() * rng.gaussian3();
    }
    const Pose3d next = vo.back() * Pose3d(rotation, translation);
    vo.emplace_back(next.rotation().normalized(), next.translation());
  }
  return vo;
}

}  // namespace monorange
