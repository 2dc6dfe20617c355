#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "monorange/core.hpp"
#include "monorange/geometry.hpp"
#include "monorange/ranging.hpp"
#include "monorange/scale.hpp"

namespace monorange {

/// Shortest decimal form with the given significant digits (printf %g).
std::string formatDouble(double value, int significant_digits = 17);

// ---------------------------------------------------------------------------
// Trajectory files: `timestamp_s tx ty tz qx qy qz qw` per line, camera-to-
// world, quaternion scalar-last, `#` comments. Timestamps must be strictly
// increasing; quaternions are normalized on read (with a warning on stderr
// when they deviate by more than 1e-6).
// ---------------------------------------------------------------------------

std::vector<TimedPose> readTrajectory(const std::string& path);
std::vector<TimedPose> readTrajectory(std::istream& in, const std::string& name);
void writeTrajectory(const std::string& path, const std::vector<TimedPose>& trajectory,
                     int precision = 17);
void writeTrajectory(std::ostream& out, const std::vector<TimedPose>& trajectory,
                     int precision = 17);

// ---------------------------------------------------------------------------
// Range log: `timestamp_s distance_m [sigma_m]`, missing sigma -> 0.10 m.
// ---------------------------------------------------------------------------

std::vector<RangeMeasurement> readRangeLog(const std::string& path);
std::vector<RangeMeasurement> readRangeLog(std::istream& in, const std::string& name);
void writeRangeLog(const std::string& path, const std::vector<RangeMeasurement>& ranges,
                   int precision = 17);

// ---------------------------------------------------------------------------
// Observations: `keyframe_index point_index u_px v_px [sigma_px]`,
// missing sigma -> 1.0 px.
// ---------------------------------------------------------------------------

struct ObservationRecord {
  int keyframe_index = 0;
  int point_index = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double sigma_px = 1.0;
};

std::vector<ObservationRecord> readObservations(const std::string& path);
void writeObservations(const std::string& path,
                       const std::vector<ObservationRecord>& observations, int precision = 17);

// ---------------------------------------------------------------------------
// Key-value files (extrinsics, scale) and the simulator config share one
// flat `key = value` format with optional [section] headers and `#`/`;`
// comments. No nesting.
// ---------------------------------------------------------------------------

class ConfigFile {
 public:
  static ConfigFile parseFile(const std::string& path);
  static ConfigFile parseStream(std::istream& in, const std::string& name);

  bool has(const std::string& key) const;

  /// Throw ConfigError naming the key (and file) when absent.
  std::string getString(const std::string& key) const;
  double getDouble(const std::string& key) const;
  int getInt(const std::string& key) const;
  std::uint64_t getUint64(const std::string& key) const;
  Eigen::Vector3d getVector3(const std::string& key) const;

  std::string getString(const std::string& key, const std::string& fallback) const;
  double getDouble(const std::string& key, double fallback) const;
  int getInt(const std::string& key, int fallback) const;
  std::uint64_t getUint64(const std::string& key, std::uint64_t fallback) const;
  Eigen::Vector3d getVector3(const std::string& key, const Eigen::Vector3d& fallback) const;

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;  // "section.key" -> raw value
  std::map<std::string, int> lines_;

  [[noreturn]] void missingKey(const std::string& key) const;
  [[noreturn]] void badValue(const std::string& key, const std::string& expected) const;
};

/// Sensor calibration shared between pipeline stages: ranging extrinsics
/// (`anchor = x y z` world frame, `lever_arm = x y z` camera frame) plus an
/// optional camera block (`fx fy cx cy image_width image_height`). Commands
/// that build re-projection factors require the camera block.
struct SensorCalibration {
  RangingExtrinsicsd ranging;
  CameraIntrinsicsd camera;
  bool has_camera = false;
};

SensorCalibration readExtrinsicsFile(const std::string& path);
void writeExtrinsicsFile(const std::string& path, const SensorCalibration& calibration,
                         int precision = 17);

/// Scale file written by estimate-scale and consumed by optimize.
ScaleEstimate readScaleFile(const std::string& path);
void writeScaleFile(const std::string& path, const ScaleEstimate& estimate, int precision = 17);

/// Map-point file: `x y z` per line.
std::vector<Eigen::Vector3d> readPoints(const std::string& path);
void writePoints(const std::string& path, const std::vector<Eigen::Vector3d>& points,
                 int precision = 17);

}  // namespace monorange
