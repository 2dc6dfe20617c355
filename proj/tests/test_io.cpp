#include "monorange/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "monorange/eval.hpp"
#include "oracles.hpp"

using namespace monorange;
using test::TestRng;

namespace {

std::string tempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("monorange_io_" + name)).string();
}

std::vector<TimedPose> makeTrajectory(unsigned seed, int n) {
  TestRng rng(seed);
  std::vector<TimedPose> trajectory;
  for (int k = 0; k < n; ++k) {
    trajectory.push_back({0.1 * k, rng.pose(8.0)});
  }
  return trajectory;
}

}  // namespace

TEST_CASE("formatDouble at 17 digits is lossless") {
  TestRng rng(101);
  for (int i = 0; i < 1000; ++i) {
    const double value = rng.gaussian(std::pow(10.0, rng.uniform(-12.0, 12.0)));
    CHECK(std::strtod(formatDouble(value, 17).c_str(), nullptr) == value);
  }
  CHECK(formatDouble(0.25, 6) == "0.25");
}

TEST_CASE("trajectory files round-trip") {
  const std::vector<TimedPose> trajectory = makeTrajectory(102, 25);
  const std::string path = tempPath("trajectory.txt");
  writeTrajectory(path, trajectory);
  const std::vector<TimedPose> restored = readTrajectory(path);

  REQUIRE(restored.size() == trajectory.size());
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    CHECK(restored[k].timestamp == trajectory[k].timestamp);
    CHECK((restored[k].pose.translation() - trajectory[k].pose.translation()).norm() == 0.0);
    CHECK(restored[k].pose.rotation().angularDistance(trajectory[k].pose.rotation()) < 1e-12);
  }
  std::filesystem::remove(path);
}

TEST_CASE("trajectory reader enforces the format") {
  SUBCASE("columns") {
    std::istringstream in("0.0 1.0 2.0\n");
    CHECK_THROWS_WITH_AS(readTrajectory(in, "bad"), doctest::Contains("bad:1"), DataError);
  }
  SUBCASE("monotonic timestamps") {
    std::istringstream in(
        "0.0 0 0 0 0 0 0 1\n"
        "0.0 1 0 0 0 0 0 1\n");
    CHECK_THROWS_WITH_AS(readTrajectory(in, "bad"), doctest::Contains("increasing"), DataError);
  }
  SUBCASE("quaternions are normalized on read") {
    std::istringstream in("0.0 1 2 3 0 0 0 2\n");  // norm 2 quaternion
    const auto trajectory = readTrajectory(in, "denorm");
    REQUIRE(trajectory.size() == 1);
    CHECK(std::abs(trajectory[0].pose.rotation().norm() - 1.0) < 1e-15);
  }
  SUBCASE("comments and blank lines are ignored") {
    std::istringstream in(
        "# header\n"
        "\n"
        "0.0 1 2 3 0 0 0 1  # trailing comment\n");
    CHECK(readTrajectory(in, "ok").size() == 1);
  }
}

TEST_CASE("range log: default sigma and validation") {
  const std::string path = tempPath("ranges.txt");
  {
    std::ofstream out(path);
    out << "# log\n0.1 5.25\n0.2 6.5 0.2\n";
  }
  const std::vector<RangeMeasurement> ranges = readRangeLog(path);
  REQUIRE(ranges.size() == 2);
  CHECK(ranges[0].sigma == kDefaultRangeSigma);
  CHECK(ranges[1].sigma == 0.2);
  std::filesystem::remove(path);

  std::istringstream negative("0.1 -2.0\n");
  CHECK_THROWS_AS(readRangeLog(negative, "bad"), DataError);
  std::istringstream bad_sigma("0.1 2.0 0.0\n");
  CHECK_THROWS_AS(readRangeLog(bad_sigma, "bad"), DataError);
}

TEST_CASE("observations round-trip with default sigma") {
  const std::string path = tempPath("observations.txt");
  std::vector<ObservationRecord> observations;
  observations.push_back({0, 3, {12.5, 400.25}, 1.0});
  observations.push_back({2, 7, {600.0, 2.0}, 2.5});
  writeObservations(path, observations);
  const auto restored = readObservations(path);
  REQUIRE(restored.size() == 2);
  CHECK(restored[0].keyframe_index == 0);
  CHECK(restored[0].point_index == 3);
  CHECK((restored[0].pixel - observations[0].pixel).norm() == 0.0);
  CHECK(restored[1].sigma_px == 2.5);
  std::filesystem::remove(path);
}

TEST_CASE("config files: sections, errors with line numbers, missing keys") {
  std::istringstream in(
      "# comment\n"
      "top = 1\n"
      "[world]\n"
      "trajectory = figure-eight\n"
      "anchor = -15 0 0.3\n"
      "; another comment\n"
      "n_keyframes = 100\n");
  const ConfigFile config = ConfigFile::parseStream(in, "test.cfg");
  CHECK(config.getInt("top") == 1);
  CHECK(config.getString("world.trajectory") == "figure-eight");
  CHECK((config.getVector3("world.anchor") - Eigen::Vector3d(-15, 0, 0.3)).norm() == 0.0);
  CHECK(config.getInt("world.n_keyframes") == 100);
  CHECK(config.getDouble("world.missing", 7.5) == 7.5);
  CHECK_THROWS_WITH_AS(config.getDouble("world.true_scale"),
                       doctest::Contains("world.true_scale"), ConfigError);

  std::istringstream malformed("key value\n");
  CHECK_THROWS_WITH_AS(ConfigFile::parseStream(malformed, "m.cfg"), doctest::Contains("m.cfg:1"),
                       ConfigError);
  std::istringstream duplicate("a = 1\na = 2\n");
  CHECK_THROWS_AS(ConfigFile::parseStream(duplicate, "d.cfg"), ConfigError);
  std::istringstream bad_number("a = xyz\n");
  CHECK_THROWS_AS(ConfigFile::parseStream(bad_number, "n.cfg").getDouble("a"), ConfigError);
}

TEST_CASE("extrinsics files round-trip, camera block optional") {
  const std::string path = tempPath("extrinsics.txt");
  SensorCalibration calibration;
  calibration.ranging.anchor_position = Eigen::Vector3d(-15.25, 0.5, 0.3);
  calibration.ranging.tag_lever_arm = Eigen::Vector3d(0.1, -0.03, 0.06);
  calibration.camera = CameraIntrinsicsd{500.0, 501.5, 320.0, 240.0, 640, 480};
  calibration.has_camera = true;
  writeExtrinsicsFile(path, calibration);
  const SensorCalibration restored = readExtrinsicsFile(path);
  CHECK((restored.ranging.anchor_position - calibration.ranging.anchor_position).norm() == 0.0);
  CHECK((restored.ranging.tag_lever_arm - calibration.ranging.tag_lever_arm).norm() == 0.0);
  REQUIRE(restored.has_camera);
  CHECK(restored.camera.fy == 501.5);
  CHECK(restored.camera.width == 640);
  std::filesystem::remove(path);

  const std::string ranging_only = tempPath("extrinsics_ranging.txt");
  calibration.has_camera = false;
  writeExtrinsicsFile(ranging_only, calibration);
  CHECK_FALSE(readExtrinsicsFile(ranging_only).has_camera);
  std::filesystem::remove(ranging_only);
}

TEST_CASE("scale files round-trip") {
  const std::string path = tempPath("scale.txt");
  ScaleEstimate estimate;
  estimate.alpha = 4.63161;
  estimate.std_dev = 0.213666;
  estimate.n_samples = 99;
  estimate.rejected_branch_mean = -4.17613;
  estimate.rejected_branch_std = 9.39333;
  estimate.plus_branch_selected = true;
  estimate.ambiguous = false;
  writeScaleFile(path, estimate);
  const ScaleEstimate restored = readScaleFile(path);
  CHECK(restored.alpha == estimate.alpha);
  CHECK(restored.std_dev == estimate.std_dev);
  CHECK(restored.n_samples == estimate.n_samples);
  CHECK(restored.rejected_branch_mean == estimate.rejected_branch_mean);
  CHECK(restored.plus_branch_selected == estimate.plus_branch_selected);
  std::filesystem::remove(path);
}

TEST_CASE("points files round-trip") {
  const std::string path = tempPath("points.txt");
  TestRng rng(103);
  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i < 20; ++i) points.push_back(rng.vector3(-30.0, 30.0));
  writePoints(path, points);
  const auto restored = readPoints(path);
  REQUIRE(restored.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK((restored[i] - points[i]).norm() == 0.0);
  }
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

TEST_CASE("evaluate: identical trajectories have zero RMSE") {
  const std::vector<TimedPose> trajectory = makeTrajectory(104, 20);
  const EvalReport report = evaluateTrajectories(trajectory, trajectory, 0.05);
  CHECK(report.rmse == 0.0);
  CHECK(report.max_error == 0.0);
  CHECK(report.n_compared == 20);
}

TEST_CASE("evaluate: constant offset gives the Pythagorean RMSE") {
  const std::vector<TimedPose> reference = makeTrajectory(105, 15);
  std::vector<TimedPose> estimate = reference;
  for (TimedPose& sample : estimate) {
    sample.pose.setTranslation(sample.pose.translation() + Eigen::Vector3d(0.3, 0.4, 0.0));
  }
  const EvalReport report = evaluateTrajectories(estimate, reference, 0.05);
  CHECK(report.rmse == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.max_error == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.per_axis_rmse.x() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(report.per_axis_rmse.y() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(report.per_axis_rmse.z() == 0.0);
}

TEST_CASE("evaluate: hand-computed three-pose fixture") {
  std::vector<TimedPose> reference, estimate;
  const Eigen::Vector3d positions[3] = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const Eigen::Vector3d errors[3] = {{0.1, 0, 0}, {0, 0.2, 0}, {0, 0, 0.2}};
  for (int k = 0; k < 3; ++k) {
    reference.push_back({1.0 * k, Pose3d(Eigen::Quaterniond::Identity(), positions[k])});
    estimate.push_back({1.0 * k, Pose3d(Eigen::Quaterniond::Identity(),
                                        positions[k] + errors[k])});
  }
  const EvalReport report = evaluateTrajectories(estimate, reference, 0.05);
  // rmse = sqrt((0.01 + 0.04 + 0.04) / 3)
  CHECK(std::abs(report.rmse - 0.17320508075688773) < 1e-12);
  CHECK(std::abs(report.max_error - 0.2) < 1e-12);
  CHECK(std::abs(report.per_axis_rmse.x() - std::sqrt(0.01 / 3.0)) < 1e-12);
  CHECK(std::abs(report.per_axis_rmse.y() - std::sqrt(0.04 / 3.0)) < 1e-12);
  CHECK(report.n_compared == 3);
}

TEST_CASE("evaluate: association tolerance and failure") {
  const std::vector<TimedPose> reference = makeTrajectory(106, 10);
  std::vector<TimedPose> estimate = reference;
  for (TimedPose& sample : estimate) sample.timestamp += 0.04;  // within 0.05
  CHECK(evaluateTrajectories(estimate, reference, 0.05).n_compared == 10);

  for (TimedPose& sample : estimate) sample.timestamp += 10.0;
  CHECK_THROWS_AS(evaluateTrajectories(estimate, reference, 0.05), DataError);
}

TEST_CASE("evaluate: rigid alignment removes a frame offset") {
  const std::vector<TimedPose> reference = makeTrajectory(107, 30);
  const Pose3d frame_offset(
      Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized())),
      Eigen::Vector3d(5.0, -3.0, 2.0));
  std::vector<TimedPose> estimate = reference;
  for (TimedPose& sample : estimate) {
    sample.pose = frame_offset * sample.pose;
  }
  CHECK(evaluateTrajectories(estimate, reference, 0.05).rmse > 1.0);
  const EvalReport aligned = evaluateTrajectories(estimate, reference, 0.05, /*align=*/true);
  CHECK(aligned.rmse < 1e-9);
  CHECK(aligned.aligned);
}
