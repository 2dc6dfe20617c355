#include "monorange/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace monorange {

namespace {

std::ifstream openInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "' for reading");
  }
  return in;
}

std::ofstream openOutput(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  return out;
}

/// Strips comments and surrounding whitespace; returns empty for blank lines.
std::string stripLine(const std::string& line) {
  std::string s = line;
  const auto comment = s.find_first_of("#;");
  if (comment != std::string::npos) s.erase(comment);
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void parseError(const std::string& name, int line_number, const std::string& what) {
  throw DataError(name + ":" + std::to_string(line_number) + ": " + what);
}

}  // namespace

std::string formatDouble(double value, int significant_digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", significant_digits, value);
  return buffer;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

std::vector<TimedPose> readTrajectory(const std::string& path) {
  std::ifstream in = openInput(path);
  return readTrajectory(in, path);
}

std::vector<TimedPose> readTrajectory(std::istream& in, const std::string& name) {
  std::vector<TimedPose> trajectory;
  std::string line;
  int line_number = 0;
  int denormalized = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string content = stripLine(line);
    if (content.empty()) continue;
    std::istringstream stream(content);
    TimedPose sample;
    Eigen::Vector3d t;
    double qx, qy, qz, qw;
    if (!(stream >> sample.timestamp >> t.x() >> t.y() >> t.z() >> qx >> qy >> qz >> qw)) {
      parseError(name, line_number, "expected 'timestamp tx ty tz qx qy qz qw'");
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    const double norm = q.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      parseError(name, line_number, "quaternion has invalid norm");
    }
    if (std::abs(norm - 1.0) > 1e-6) {
      ++denormalized;
    }
    q.coeffs() /= norm;
    sample.pose = Pose3d(q, t);
    if (!trajectory.empty() && !(sample.timestamp > trajectory.back().timestamp)) {
      parseError(name, line_number, "timestamps must be strictly increasing");
    }
    trajectory.push_back(sample);
  }
  if (denormalized > 0) {
    std::cerr << "warning: " << name << ": normalized " << denormalized
              << " quaternion(s) deviating by more than 1e-6\n";
  }
  return trajectory;
}

void writeTrajectory(const std::string& path, const std::vector<TimedPose>& trajectory,
                     int precision) {
  std::ofstream out = openOutput(path);
  writeTrajectory(out, trajectory, precision);
}

void writeTrajectory(std::ostream& out, const std::vector<TimedPose>& trajectory, int precision) {
  out << "# timestamp_s tx ty tz qx qy qz qw (camera-to-world, quaternion scalar-last)\n";
  for (const TimedPose& sample : trajectory) {
    const auto& t = sample.pose.translation();
    const auto& q = sample.pose.rotation();
    out << formatDouble(sample.timestamp, precision) << ' ' << formatDouble(t.x(), precision)
        << ' ' << formatDouble(t.y(), precision) << ' ' << formatDouble(t.z(), precision) << ' '
        << formatDouble(q.x(), precision) << ' ' << formatDouble(q.y(), precision) << ' '
        << formatDouble(q.z(), precision) << ' ' << formatDouble(q.w(), precision) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Range logs
// ---------------------------------------------------------------------------

std::vector<RangeMeasurement> readRangeLog(const std::string& path) {
  std::ifstream in = openInput(path);
  return readRangeLog(in, path);
}

std::vector<RangeMeasurement> readRangeLog(std::istream& in, const std::string& name) {
  std::vector<RangeMeasurement> ranges;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string content = stripLine(line);
    if (content.empty()) continue;
    std::istringstream stream(content);
    RangeMeasurement m;
    if (!(stream >> m.timestamp >> m.distance)) {
      parseError(name, line_number, "expected 'timestamp_s distance_m [sigma_m]'");
    }
    if (!(stream >> m.sigma)) {
      m.sigma = kDefaultRangeSigma;
    }
    if (m.distance < 0.0) {
      parseError(name, line_number, "distance must be non-negative");
    }
    if (!(m.sigma > 0.0)) {
      parseError(name, line_number, "sigma must be positive");
    }
    ranges.push_back(m);
  }
  return ranges;
}

void writeRangeLog(const std::string& path, const std::vector<RangeMeasurement>& ranges,
                   int precision) {
  std::ofstream out = openOutput(path);
  out << "# timestamp_s distance_m sigma_m\n";
  for (const RangeMeasurement& m : ranges) {
    out << formatDouble(m.timestamp, precision) << ' ' << formatDouble(m.distance, precision)
        << ' ' << formatDouble(m.sigma, precision) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

std::vector<ObservationRecord> readObservations(const std::string& path) {
  std::ifstream in = openInput(path);
  std::vector<ObservationRecord> observations;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string content = stripLine(line);
    if (content.empty()) continue;
    std::istringstream stream(content);
    ObservationRecord o;
    if (!(stream >> o.keyframe_index >> o.point_index >> o.pixel.x() >> o.pixel.y())) {
      parseError(path, line_number, "expected 'keyframe point u v [sigma]'");
    }
    if (!(stream >> o.sigma_px)) {
      o.sigma_px = kDefaultPixelSigma;
    }
    if (o.keyframe_index < 0 || o.point_index < 0 || !(o.sigma_px > 0.0)) {
      parseError(path, line_number, "indices must be non-negative and sigma positive");
    }
    observations.push_back(o);
  }
  return observations;
}

void writeObservations(const std::string& path,
                       const std::vector<ObservationRecord>& observations, int precision) {
  std::ofstream out = openOutput(path);
  out << "# keyframe_index point_index u_px v_px sigma_px\n";
  for (const ObservationRecord& o : observations) {
    out << o.keyframe_index << ' ' << o.point_index << ' ' << formatDouble(o.pixel.x(), precision)
        << ' ' << formatDouble(o.pixel.y(), precision) << ' '
        << formatDouble(o.sigma_px, precision) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Key-value files
// ---------------------------------------------------------------------------

ConfigFile ConfigFile::parseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config '" + path + "'");
  }
  return parseStream(in, path);
}

ConfigFile ConfigFile::parseStream(std::istream& in, const std::string& name) {
  ConfigFile config;
  config.name_ = name;
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string content = stripLine(line);
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']' || content.size() < 3) {
        throw ConfigError(name + ":" + std::to_string(line_number) + ": malformed section header");
      }
      section = content.substr(1, content.size() - 2);
      continue;
    }
    const auto equals = content.find('=');
    if (equals == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(line_number) + ": expected 'key = value'");
    }
    std::string key = stripLine(content.substr(0, equals));
    const std::string value = stripLine(content.substr(equals + 1));
    if (key.empty()) {
      throw ConfigError(name + ":" + std::to_string(line_number) + ": empty key");
    }
    if (!section.empty()) key = section + "." + key;
    if (config.values_.count(key)) {
      throw ConfigError(name + ":" + std::to_string(line_number) + ": duplicate key '" + key +
                        "'");
    }
    config.values_[key] = value;
    config.lines_[key] = line_number;
  }
  return config;
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

void ConfigFile::missingKey(const std::string& key) const {
  throw ConfigError(name_ + ": missing required key '" + key + "'");
}

void ConfigFile::badValue(const std::string& key, const std::string& expected) const {
  const auto line = lines_.find(key);
  throw ConfigError(name_ + ":" + std::to_string(line == lines_.end() ? 0 : line->second) +
                    ": key '" + key + "' expects " + expected);
}

std::string ConfigFile::getString(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) missingKey(key);
  return it->second;
}

double ConfigFile::getDouble(const std::string& key) const {
  const std::string raw = getString(key);
  std::istringstream stream(raw);
  double value;
  if (!(stream >> value)) badValue(key, "a number");
  return value;
}

int ConfigFile::getInt(const std::string& key) const {
  const std::string raw = getString(key);
  std::istringstream stream(raw);
  int value;
  if (!(stream >> value)) badValue(key, "an integer");
  return value;
}

std::uint64_t ConfigFile::getUint64(const std::string& key) const {
  const std::string raw = getString(key);
  std::istringstream stream(raw);
  std::uint64_t value;
  if (!(stream >> value)) badValue(key, "an unsigned integer");
  return value;
}

Eigen::Vector3d ConfigFile::getVector3(const std::string& key) const {
  const std::string raw = getString(key);
  std::istringstream stream(raw);
  Eigen::Vector3d value;
  if (!(stream >> value.x() >> value.y() >> value.z())) badValue(key, "three numbers 'x y z'");
  return value;
}

std::string ConfigFile::getString(const std::string& key, const std::string& fallback) const {
  return has(key) ? getString(key) : fallback;
}
double ConfigFile::getDouble(const std::string& key, double fallback) const {
  return has(key) ? getDouble(key) : fallback;
}
int ConfigFile::getInt(const std::string& key, int fallback) const {
  return has(key) ? getInt(key) : fallback;
}
std::uint64_t ConfigFile::getUint64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? getUint64(key) : fallback;
}
Eigen::Vector3d ConfigFile::getVector3(const std::string& key,
                                       const Eigen::Vector3d& fallback) const {
  return has(key) ? getVector3(key) : fallback;
}

// ---------------------------------------------------------------------------
// Extrinsics / scale / points
// ---------------------------------------------------------------------------

SensorCalibration readExtrinsicsFile(const std::string& path) {
  ConfigFile config = ConfigFile::parseFile(path);
  SensorCalibration calibration;
  try {
    calibration.ranging.anchor_position = config.getVector3("anchor");
    calibration.ranging.tag_lever_arm = config.getVector3("lever_arm");
    calibration.has_camera = config.has("fx");
    if (calibration.has_camera) {
      calibration.camera.fx = config.getDouble("fx");
      calibration.camera.fy = config.getDouble("fy");
      calibration.camera.cx = config.getDouble("cx");
      calibration.camera.cy = config.getDouble("cy");
      calibration.camera.width = config.getInt("image_width");
      calibration.camera.height = config.getInt("image_height");
    }
  } catch (const ConfigError& e) {
    // calibration files are data inputs, not command configuration
    throw DataError(e.what());
  }
  if (!calibration.ranging.anchor_position.allFinite() ||
      !calibration.ranging.tag_lever_arm.allFinite()) {
    throw DataError(path + ": extrinsics must be finite");
  }
  if (calibration.has_camera && !calibration.camera.isValid()) {
    throw DataError(path + ": camera intrinsics are invalid");
  }
  return calibration;
}

void writeExtrinsicsFile(const std::string& path, const SensorCalibration& calibration,
                         int precision) {
  std::ofstream out = openOutput(path);
  const auto& a = calibration.ranging.anchor_position;
  const auto& l = calibration.ranging.tag_lever_arm;
  out << "# anchor position [m, world frame]; tag lever arm [m, camera frame]\n";
  out << "anchor = " << formatDouble(a.x(), precision) << ' ' << formatDouble(a.y(), precision)
      << ' ' << formatDouble(a.z(), precision) << '\n';
  out << "lever_arm = " << formatDouble(l.x(), precision) << ' '
      << formatDouble(l.y(), precision) << ' ' << formatDouble(l.z(), precision) << '\n';
  if (calibration.has_camera) {
    out << "fx = " << formatDouble(calibration.camera.fx, precision) << '\n';
    out << "fy = " << formatDouble(calibration.camera.fy, precision) << '\n';
    out << "cx = " << formatDouble(calibration.camera.cx, precision) << '\n';
    out << "cy = " << formatDouble(calibration.camera.cy, precision) << '\n';
    out << "image_width = " << calibration.camera.width << '\n';
    out << "image_height = " << calibration.camera.height << '\n';
  }
}

ScaleEstimate readScaleFile(const std::string& path) {
  ConfigFile config = ConfigFile::parseFile(path);
  ScaleEstimate estimate;
  try {
    estimate.alpha = config.getDouble("alpha");
    estimate.std_dev = config.getDouble("std_dev", 0.0);
    estimate.n_samples = config.getInt("n_samples", 0);
    estimate.rejected_branch_mean = config.getDouble("rejected_mean", 0.0);
    estimate.rejected_branch_std = config.getDouble("rejected_std", 0.0);
    estimate.plus_branch_selected = config.getString("branch", "plus") == "plus";
    estimate.ambiguous = config.getInt("ambiguous", 0) != 0;
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  return estimate;
}

void writeScaleFile(const std::string& path, const ScaleEstimate& estimate, int precision) {
  std::ofstream out = openOutput(path);
  out << "# initial global scale selected from duplet branch statistics\n";
  out << "alpha = " << formatDouble(estimate.alpha, precision) << '\n';
  out << "std_dev = " << formatDouble(estimate.std_dev, precision) << '\n';
  out << "n_samples = " << estimate.n_samples << '\n';
  out << "rejected_mean = " << formatDouble(estimate.rejected_branch_mean, precision) << '\n';
  out << "rejected_std = " << formatDouble(estimate.rejected_branch_std, precision) << '\n';
  out << "branch = " << (estimate.plus_branch_selected ? "plus" : "minus") << '\n';
  out << "ambiguous = " << (estimate.ambiguous ? 1 : 0) << '\n';
}

std::vector<Eigen::Vector3d> readPoints(const std::string& path) {
  std::ifstream in = openInput(path);
  std::vector<Eigen::Vector3d> points;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string content = stripLine(line);
    if (content.empty()) continue;
    std::istringstream stream(content);
    Eigen::Vector3d p;
    if (!(stream >> p.x() >> p.y() >> p.z())) {
      parseError(path, line_number, "expected 'x y z'");
    }
    points.push_back(p);
  }
  return points;
}

void writePoints(const std::string& path, const std::vector<Eigen::Vector3d>& points,
                 int precision) {
  std::ofstream out = openOutput(path);
  out << "# x_m y_m z_m (world frame)\n";
  for (const Eigen::Vector3d& p : points) {
    out << formatDouble(p.x(), precision) << ' ' << formatDouble(p.y(), precision) << ' '
        << formatDouble(p.z(), precision) << '\n';
  }
}

}  // namespace monorange
