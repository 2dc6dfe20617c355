#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "monorange/optimizer.hpp"
#include "monorange/scale.hpp"

namespace monorange::cli {

struct CommonOptions {
  int precision = 17;
  bool verbose = false;
};

struct SimulateOptions {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed_override;
  std::string survey_path;  // optional: also emit a trilateration survey file
  CommonOptions common;
};

struct EstimateScaleOptions {
  std::string vo_trajectory_path;
  std::string range_log_path;
  std::string extrinsics_path;
  std::string scale_output_path;
  int min_samples = kDefaultMinScaleSamples;
  double association_tolerance = kDefaultAssociationTolerance;
  bool allow_negative_scale = false;
  bool mad_prefilter = false;
  CommonOptions common;
};

struct OptimizeOptions {
  std::string vo_trajectory_path;
  std::string observations_path;
  std::string range_log_path;
  std::string extrinsics_path;
  std::string scale_path;
  std::string output_dir;
  double association_tolerance = kDefaultAssociationTolerance;
  bool robust_range = false;
  LmConfig lm;
  CommonOptions common;
};

struct EvaluateOptions {
  std::string estimate_path;
  std::string reference_path;
  double association_tolerance = kDefaultAssociationTolerance;
  bool align = false;
  CommonOptions common;
};

struct PlotDataOptions {
  std::vector<std::string> trajectories;  // label=path
  std::string range_log_path;
  std::string extrinsics_path;
  std::string range_trajectory_path;  // metric trajectory for range errors
  std::string vo_trajectory_path;     // up-to-scale trajectory for duplets
  std::string lm_log_path;
  std::string output_dir;
  double association_tolerance = kDefaultAssociationTolerance;
  CommonOptions common;
};

struct TrilaterateOptions {
  std::string survey_path;
  Eigen::Vector3d lever_arm = Eigen::Vector3d::Zero();
  std::string extrinsics_output_path;  // optional
  CommonOptions common;
};

int cmdSimulate(const SimulateOptions& options);
int cmdEstimateScale(const EstimateScaleOptions& options);
int cmdOptimize(const OptimizeOptions& options);
int cmdEvaluate(const EvaluateOptions& options);
int cmdPlotData(const PlotDataOptions& options);
int cmdTrilaterate(const TrilaterateOptions& options);

}  // namespace monorange::cli
