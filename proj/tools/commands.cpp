#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "monorange/eval.hpp"
#include "monorange/graph.hpp"
#include "monorange/io.hpp"
#include "monorange/pipeline.hpp"
#include "monorange/sim.hpp"

namespace monorange::cli {

namespace {

namespace fs = std::filesystem;

std::string joinPath(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void ensureDirectory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + dir + "': " + ec.message());
  }
}

std::ofstream openOutput(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  return out;
}

WorldConfig worldConfigFromFile(const ConfigFile& config) {
  WorldConfig world;
  world.shape = trajectoryShapeFromString(config.getString("world.trajectory"));
  world.n_keyframes = config.getInt("world.n_keyframes");
  world.n_map_points = config.getInt("world.n_map_points");
  world.true_scale = config.getDouble("world.true_scale");
  world.seed = config.getUint64("world.seed");

  world.width = config.getDouble("world.width", world.width);
  world.height = config.getDouble("world.height", world.height);
  world.radius = config.getDouble("world.radius", world.radius);
  world.length = config.getDouble("world.length", world.length);
  world.point_box_min = config.getVector3("world.point_box_min", world.point_box_min);
  world.point_box_max = config.getVector3("world.point_box_max", world.point_box_max);
  world.intrinsics.fx = config.getDouble("world.fx", world.intrinsics.fx);
  world.intrinsics.fy = config.getDouble("world.fy", world.intrinsics.fy);
  world.intrinsics.cx = config.getDouble("world.cx", world.intrinsics.cx);
  world.intrinsics.cy = config.getDouble("world.cy", world.intrinsics.cy);
  world.intrinsics.width = config.getInt("world.image_width", world.intrinsics.width);
  world.intrinsics.height = config.getInt("world.image_height", world.intrinsics.height);
  world.anchor_map = config.getVector3("world.anchor", world.anchor_map);
  world.tag_lever_arm = config.getVector3("world.lever_arm", world.tag_lever_arm);
  world.camera_height = config.getDouble("world.camera_height", world.camera_height);
  world.keyframe_dt = config.getDouble("world.keyframe_dt", world.keyframe_dt);
  world.loop_fraction = config.getDouble("world.loop_fraction", world.loop_fraction);
  world.range_start_keyframe =
      config.getInt("world.range_start_keyframe", world.range_start_keyframe);
  return world;
}

NoiseConfig noiseConfigFromFile(const ConfigFile& config) {
  NoiseConfig noise;
  noise.pixel_sigma = config.getDouble("noise.pixel_sigma", 0.0);
  noise.range_sigma = config.getDouble("noise.range_sigma", 0.0);
  noise.rot_walk_sigma = config.getDouble("noise.rot_walk_sigma", 0.0);
  noise.trans_walk_frac = config.getDouble("noise.trans_walk_frac", 0.0);
  noise.outlier_prob = config.getDouble("noise.outlier_prob", 0.0);
  noise.outlier_magnitude = config.getDouble("noise.outlier_magnitude", 0.0);
  return noise;
}

std::vector<TimedPose> toTimedPoses(const std::vector<double>& timestamps,
                                    const std::vector<Pose3d>& poses) {
  std::vector<TimedPose> out;
  out.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out.push_back({timestamps[i], poses[i]});
  }
  return out;
}

std::vector<TrilaterationSample> readSurveyFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "' for reading");
  }
  std::vector<TrilaterationSample> samples;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    std::istringstream stream(line);
    std::string first_token;
    if (!(stream >> first_token)) continue;  // blank line
    stream.clear();
    stream.str(line);
    TrilaterationSample sample;
    if (!(stream >> sample.position.x() >> sample.position.y() >> sample.position.z() >>
          sample.distance)) {
      throw DataError(path + ":" + std::to_string(line_number) + ": expected 'x y z distance'");
    }
    samples.push_back(sample);
  }
  return samples;
}

}  // namespace

int cmdSimulate(const SimulateOptions& options) {
  ConfigFile config = ConfigFile::parseFile(options.config_path);
  WorldConfig world_config = worldConfigFromFile(config);
  const NoiseConfig noise = noiseConfigFromFile(config);
  if (options.seed_override) {
    world_config.seed = *options.seed_override;
  }

  const World world = generateWorld(world_config);
  const SyntheticMeasurements measurements =
      synthesizeMeasurements(world, noise, deriveSeed(world_config.seed, 1));
  const std::vector<Pose3d> vo_poses =
      corruptToVo(world.poses, world_config.true_scale, noise, deriveSeed(world_config.seed, 2));

  ensureDirectory(options.output_dir);
  const int precision = options.common.precision;
  writeTrajectory(joinPath(options.output_dir, "gt_trajectory.txt"),
                  toTimedPoses(world.timestamps, world.poses), precision);
  writeTrajectory(joinPath(options.output_dir, "vo_trajectory.txt"),
                  toTimedPoses(world.timestamps, vo_poses), precision);
  writeRangeLog(joinPath(options.output_dir, "ranges.txt"), measurements.ranges, precision);
  writeObservations(joinPath(options.output_dir, "observations.txt"), measurements.pixels,
                    precision);
  SensorCalibration calibration;
  calibration.ranging = world.extrinsics;
  calibration.camera = world.intrinsics;
  calibration.has_camera = true;
  writeExtrinsicsFile(joinPath(options.output_dir, "extrinsics.txt"), calibration, precision);

  if (!options.survey_path.empty()) {
    std::ofstream out = openOutput(options.survey_path);
    out << "# tag_x_m tag_y_m tag_z_m distance_m (world frame)\n";
    for (std::size_t i = 0; i < measurements.ranges.size(); ++i) {
      const int k = measurements.range_keyframe_indices[i];
      const Eigen::Vector3d tag = world.poses[k].apply(world.extrinsics.tag_lever_arm);
      out << formatDouble(tag.x(), precision) << ' ' << formatDouble(tag.y(), precision) << ' '
          << formatDouble(tag.z(), precision) << ' '
          << formatDouble(measurements.ranges[i].distance, precision) << '\n';
    }
  }

  std::cout << "simulated " << trajectoryShapeName(world_config.shape) << " world: "
            << world.poses.size() << " keyframes, " << world.points.size() << " map points, "
            << measurements.pixels.size() << " pixel observations, "
            << measurements.ranges.size() << " ranges (seed " << world_config.seed << ")\n";
  std::cout << "wrote gt_trajectory.txt vo_trajectory.txt ranges.txt observations.txt "
               "extrinsics.txt to "
            << options.output_dir << "\n";
  return 0;
}

int cmdEstimateScale(const EstimateScaleOptions& options) {
  const std::vector<TimedPose> trajectory = readTrajectory(options.vo_trajectory_path);
  const std::vector<RangeMeasurement> ranges = readRangeLog(options.range_log_path);
  const SensorCalibration calibration = readExtrinsicsFile(options.extrinsics_path);

  const DupletAccumulation accumulation = accumulateDuplets(
      trajectory, ranges, calibration.ranging, options.association_tolerance);

  ScaleSelectionOptions selection;
  selection.min_samples = options.min_samples;
  selection.mad_prefilter = options.mad_prefilter;
  const ScaleEstimate estimate = selectScale(accumulation.duplets, selection);

  const double minus_mean =
      estimate.plus_branch_selected ? estimate.rejected_branch_mean : estimate.alpha;
  const double minus_std =
      estimate.plus_branch_selected ? estimate.rejected_branch_std : estimate.std_dev;
  const double plus_mean =
      estimate.plus_branch_selected ? estimate.alpha : estimate.rejected_branch_mean;
  const double plus_std =
      estimate.plus_branch_selected ? estimate.std_dev : estimate.rejected_branch_std;

  std::printf("Global scale candidates (%d duplets, %d skipped: %d unassociated, "
              "%d degenerate, %d without real solution)\n",
              static_cast<int>(accumulation.duplets.size()), accumulation.skipped(),
              accumulation.n_unassociated, accumulation.n_degenerate,
              accumulation.n_no_real_solution);
  std::printf("%-10s %14s %20s\n", "", "Mean", "Standard deviation");
  std::printf("%-10s %14.6g %20.6g%s\n", "alpha_-", minus_mean, minus_std,
              estimate.plus_branch_selected ? "" : "   [selected]");
  std::printf("%-10s %14.6g %20.6g%s\n", "alpha_+", plus_mean, plus_std,
              estimate.plus_branch_selected ? "   [selected]" : "");

  if (estimate.ambiguous) {
    std::cerr << "warning: branch standard deviations differ by less than 10%; "
                 "selection is ambiguous\n";
  }
  if (estimate.alpha <= 0.0) {
    if (!options.allow_negative_scale) {
      throw DataError("selected scale " + formatDouble(estimate.alpha, 6) +
                      " is not positive; a physical scale must be positive "
                      "(use --allow-negative-scale to keep it)");
    }
    std::cerr << "warning: selected scale is not positive\n";
  }

  writeScaleFile(options.scale_output_path, estimate, options.common.precision);
  if (options.common.verbose) {
    std::cout << "wrote " << options.scale_output_path << "\n";
  }
  return 0;
}

int cmdOptimize(const OptimizeOptions& options) {
  const std::vector<TimedPose> vo_trajectory = readTrajectory(options.vo_trajectory_path);
  const std::vector<ObservationRecord> observations = readObservations(options.observations_path);
  const std::vector<RangeMeasurement> ranges = readRangeLog(options.range_log_path);
  const SensorCalibration calibration = readExtrinsicsFile(options.extrinsics_path);
  const ScaleEstimate scale = readScaleFile(options.scale_path);

  GraphBuildOptions build_options;
  build_options.association_tolerance = options.association_tolerance;
  build_options.robust_range = options.robust_range;
  BuiltGraph built =
      buildGraph(vo_trajectory, observations, ranges, calibration, scale.alpha, build_options);
  const FactorGraph& graph = built.graph;

  if (options.common.verbose || built.stats.dropped_points > 0 ||
      built.stats.unassociated_ranges > 0) {
    std::cout << "graph: " << graph.poses.size() << " poses, " << graph.points.size()
              << " points (" << built.stats.dropped_points << " dropped), "
              << graph.reprojection_factors.size() << " reprojection factors, "
              << graph.range_factors.size() << " range factors ("
              << built.stats.unassociated_ranges << " ranges unassociated)\n";
  }

  const auto [refined, report] = optimize(graph, options.lm);

  ensureDirectory(options.output_dir);
  const int precision = options.common.precision;
  writeTrajectory(joinPath(options.output_dir, "refined_trajectory.txt"),
                  toTimedPoses(built.timestamps, refined.poses), precision);
  writePoints(joinPath(options.output_dir, "refined_points.txt"), refined.points, precision);
  {
    std::ofstream out = openOutput(joinPath(options.output_dir, "lm_log.txt"));
    writeLmLog(out, report, options.robust_range);
  }

  std::cout << "lm: " << report.iterations_run << " accepted iterations, cost "
            << formatDouble(report.initial_cost, 6) << " -> "
            << formatDouble(report.final_cost, 6) << ", " << terminationName(report.termination)
            << "\n";
  std::cout << "wrote refined_trajectory.txt refined_points.txt lm_log.txt to "
            << options.output_dir << "\n";
  return 0;
}

int cmdEvaluate(const EvaluateOptions& options) {
  const std::vector<TimedPose> estimate = readTrajectory(options.estimate_path);
  const std::vector<TimedPose> reference = readTrajectory(options.reference_path);
  const EvalReport report =
      evaluateTrajectories(estimate, reference, options.association_tolerance, options.align);

  const int precision = options.common.precision;
  std::cout << "n_compared = " << report.n_compared << "\n";
  std::cout << "rmse_m = " << formatDouble(report.rmse, precision) << "\n";
  std::cout << "rmse_x_m = " << formatDouble(report.per_axis_rmse.x(), precision) << "\n";
  std::cout << "rmse_y_m = " << formatDouble(report.per_axis_rmse.y(), precision) << "\n";
  std::cout << "rmse_z_m = " << formatDouble(report.per_axis_rmse.z(), precision) << "\n";
  std::cout << "max_error_m = " << formatDouble(report.max_error, precision) << "\n";
  std::cout << "tolerance_s = " << formatDouble(report.tolerance, precision) << "\n";
  std::cout << "aligned = " << (report.aligned ? 1 : 0) << "\n";
  return 0;
}

int cmdPlotData(const PlotDataOptions& options) {
  ensureDirectory(options.output_dir);
  const int precision = options.common.precision;
  int files_written = 0;

  if (!options.trajectories.empty()) {
    std::ofstream out = openOutput(joinPath(options.output_dir, "trajectories_xy.csv"));
    out << "source,timestamp_s,x_m,y_m\n";
    for (const std::string& entry : options.trajectories) {
      const auto equals = entry.find('=');
      if (equals == std::string::npos) {
        throw ConfigError("--trajectory expects label=path, got '" + entry + "'");
      }
      const std::string label = entry.substr(0, equals);
      const std::vector<TimedPose> trajectory = readTrajectory(entry.substr(equals + 1));
      for (const TimedPose& sample : trajectory) {
        out << label << ',' << formatDouble(sample.timestamp, precision) << ','
            << formatDouble(sample.pose.translation().x(), precision) << ','
            << formatDouble(sample.pose.translation().y(), precision) << '\n';
      }
    }
    ++files_written;
  }

  const bool have_ranging_inputs =
      !options.range_log_path.empty() && !options.extrinsics_path.empty();

  if (have_ranging_inputs && !options.range_trajectory_path.empty()) {
    const std::vector<TimedPose> trajectory = readTrajectory(options.range_trajectory_path);
    const std::vector<RangeMeasurement> ranges = readRangeLog(options.range_log_path);
    const SensorCalibration calibration = readExtrinsicsFile(options.extrinsics_path);
    std::vector<double> timestamps;
    for (const TimedPose& s : trajectory) timestamps.push_back(s.timestamp);

    std::ofstream out = openOutput(joinPath(options.output_dir, "range_error.csv"));
    out << "timestamp_s,measured_m,predicted_m,abs_error_m\n";
    for (const RangeMeasurement& m : ranges) {
      const auto pairs =
          associateByTime({m.timestamp}, timestamps, options.association_tolerance);
      if (pairs.empty()) continue;
      const double predicted =
          predictRange(trajectory[pairs.front().second].pose, 1.0, calibration.ranging);
      out << formatDouble(m.timestamp, precision) << ',' << formatDouble(m.distance, precision)
          << ',' << formatDouble(predicted, precision) << ','
          << formatDouble(std::abs(m.distance - predicted), precision) << '\n';
    }
    ++files_written;
  }

  if (have_ranging_inputs && !options.vo_trajectory_path.empty()) {
    const std::vector<TimedPose> trajectory = readTrajectory(options.vo_trajectory_path);
    const std::vector<RangeMeasurement> ranges = readRangeLog(options.range_log_path);
    const SensorCalibration calibration = readExtrinsicsFile(options.extrinsics_path);
    const DupletAccumulation accumulation = accumulateDuplets(
        trajectory, ranges, calibration.ranging, options.association_tolerance);

    std::ofstream out = openOutput(joinPath(options.output_dir, "scale_duplets.csv"));
    out << "timestamp_s,alpha_minus,alpha_plus,discriminant\n";
    for (const ScaleDuplet& d : accumulation.duplets) {
      out << formatDouble(d.timestamp, precision) << ',' << formatDouble(d.alpha_minus, precision)
          << ',' << formatDouble(d.alpha_plus, precision) << ','
          << formatDouble(d.discriminant, precision) << '\n';
    }
    ++files_written;
  }

  if (!options.lm_log_path.empty()) {
    std::ifstream in(options.lm_log_path);
    if (!in) {
      throw DataError("cannot open '" + options.lm_log_path + "' for reading");
    }
    const std::vector<LmIterationEntry> entries = readLmLogEntries(in);
    std::ofstream out = openOutput(joinPath(options.output_dir, "lm_cost.csv"));
    out << "iter,cost,lambda,step_norm,accepted\n";
    for (const LmIterationEntry& e : entries) {
      out << e.iteration << ',' << formatDouble(e.cost, precision) << ','
          << formatDouble(e.lambda, precision) << ',' << formatDouble(e.step_norm, precision)
          << ',' << (e.accepted ? 1 : 0) << '\n';
    }
    ++files_written;
  }

  std::cout << "wrote " << files_written << " csv file(s) to " << options.output_dir << "\n";
  return 0;
}

int cmdTrilaterate(const TrilaterateOptions& options) {
  const std::vector<TrilaterationSample> samples = readSurveyFile(options.survey_path);
  const TrilaterationResult result = trilaterateAnchor(samples);

  const int precision = options.common.precision;
  std::cout << "anchor = " << formatDouble(result.anchor.x(), precision) << ' '
            << formatDouble(result.anchor.y(), precision) << ' '
            << formatDouble(result.anchor.z(), precision) << "\n";
  std::cout << "residual_rms_m = " << formatDouble(result.residual_rms, precision) << "\n";
  std::cout << "n_samples = " << samples.size() << "\n";
  std::cout << "iterations = " << result.iterations << "\n";

  if (!options.extrinsics_output_path.empty()) {
    SensorCalibration calibration;
    calibration.ranging.anchor_position = result.anchor;
    calibration.ranging.tag_lever_arm = options.lever_arm;
    writeExtrinsicsFile(options.extrinsics_output_path, calibration, precision);
  }
  return 0;
}

}  // namespace monorange::cli
