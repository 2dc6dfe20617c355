#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "monorange/core.hpp"

namespace {

using namespace monorange;
using namespace monorange::cli;

// Exit codes: 0 success, 1 usage/config error, 2 data/precondition error,
// 3 numerical failure.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monorange: monocular visual-odometry back-end with single-anchor "
               "ranging for global scale recovery and drift reduction"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_set = false;
  CommonOptions common;
  app.add_flag("--verbose", common.verbose, "extra progress output");
  app.add_option("--precision", common.precision, "significant digits for numeric output")
      ->check(CLI::Range(1, 17))
      ->capture_default_str();
  app.add_option("--seed", seed, "override the simulation seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });

  SimulateOptions simulate;
  auto* cmd_simulate =
      app.add_subcommand("simulate", "generate a synthetic world and measurement files");
  cmd_simulate->add_option("config", simulate.config_path, "world/noise config file")->required();
  cmd_simulate->add_option("output_dir", simulate.output_dir, "output directory")->required();
  cmd_simulate->add_option("--emit-survey", simulate.survey_path,
                           "also write a trilateration survey file (tag positions + distances)");

  EstimateScaleOptions estimate_scale;
  auto* cmd_estimate = app.add_subcommand(
      "estimate-scale", "estimate the initial global scale from ranges and the VO trajectory");
  cmd_estimate->add_option("vo_trajectory", estimate_scale.vo_trajectory_path)->required();
  cmd_estimate->add_option("ranges", estimate_scale.range_log_path)->required();
  cmd_estimate->add_option("extrinsics", estimate_scale.extrinsics_path)->required();
  cmd_estimate->add_option("--output", estimate_scale.scale_output_path, "scale file to write")
      ->default_val("scale.txt");
  cmd_estimate->add_option("--min-samples", estimate_scale.min_samples)->capture_default_str();
  cmd_estimate->add_option("--tolerance", estimate_scale.association_tolerance,
                           "time association tolerance [s]")
      ->capture_default_str();
  cmd_estimate->add_flag("--allow-negative-scale", estimate_scale.allow_negative_scale,
                         "keep a non-positive selected scale instead of aborting");
  cmd_estimate->add_flag("--mad-filter", estimate_scale.mad_prefilter,
                         "median-absolute-deviation prefilter per branch");

  OptimizeOptions optimize;
  std::string solver_name = "auto";
  auto* cmd_optimize = app.add_subcommand(
      "optimize", "apply the scale and refine poses and map points by global least squares");
  cmd_optimize->add_option("vo_trajectory", optimize.vo_trajectory_path)->required();
  cmd_optimize->add_option("observations", optimize.observations_path)->required();
  cmd_optimize->add_option("ranges", optimize.range_log_path)->required();
  cmd_optimize->add_option("extrinsics", optimize.extrinsics_path)->required();
  cmd_optimize->add_option("scale", optimize.scale_path, "scale file from estimate-scale")
      ->required();
  cmd_optimize->add_option("output_dir", optimize.output_dir)->required();
  cmd_optimize->add_option("--tolerance", optimize.association_tolerance,
                           "time association tolerance [s]")
      ->capture_default_str();
  cmd_optimize->add_flag("--robust-range", optimize.robust_range,
                         "Huber loss on range residuals");
  cmd_optimize->add_option("--max-iterations", optimize.lm.max_iterations)
      ->capture_default_str();
  cmd_optimize->add_option("--initial-lambda", optimize.lm.initial_lambda)
      ->capture_default_str();
  cmd_optimize->add_option("--solver", solver_name, "linear solver: auto, dense or schur")
      ->check(CLI::IsMember({"auto", "dense", "schur"}))
      ->capture_default_str();

  EvaluateOptions evaluate;
  auto* cmd_evaluate =
      app.add_subcommand("evaluate", "position RMSE of a trajectory against a reference");
  cmd_evaluate->add_option("estimate", evaluate.estimate_path)->required();
  cmd_evaluate->add_option("reference", evaluate.reference_path)->required();
  cmd_evaluate->add_option("--tolerance", evaluate.association_tolerance,
                           "time association tolerance [s]")
      ->capture_default_str();
  cmd_evaluate->add_flag("--align", evaluate.align,
                         "remove a rigid (no scale) fit before computing errors");

  PlotDataOptions plot;
  auto* cmd_plot = app.add_subcommand("plot-data", "emit plot-ready CSV bundles");
  cmd_plot->add_option("--trajectory", plot.trajectories,
                       "label=path, repeatable; horizontal-plane trajectory CSV");
  cmd_plot->add_option("--ranges", plot.range_log_path);
  cmd_plot->add_option("--extrinsics", plot.extrinsics_path);
  cmd_plot->add_option("--range-trajectory", plot.range_trajectory_path,
                       "metric trajectory for the range-error CSV");
  cmd_plot->add_option("--vo-trajectory", plot.vo_trajectory_path,
                       "up-to-scale trajectory for the duplet CSV");
  cmd_plot->add_option("--lm-log", plot.lm_log_path);
  cmd_plot->add_option("--out-dir", plot.output_dir)->required();
  cmd_plot->add_option("--tolerance", plot.association_tolerance)->capture_default_str();

  TrilaterateOptions trilaterate;
  std::vector<double> lever_arm_values;
  auto* cmd_trilaterate = app.add_subcommand(
      "trilaterate", "estimate the anchor position from a survey of positions and distances");
  cmd_trilaterate->add_option("survey", trilaterate.survey_path,
                              "file of 'x y z distance' lines")
      ->required();
  cmd_trilaterate->add_option("--lever-arm", lever_arm_values,
                              "tag lever arm x y z written to --output")
      ->expected(3);
  cmd_trilaterate->add_option("--output", trilaterate.extrinsics_output_path,
                              "extrinsics file to write");

  for (CLI::App* sub : app.get_subcommands({})) {
    sub->fallthrough();  // allow global flags after the subcommand
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*cmd_simulate) {
      simulate.common = common;
      if (seed_set) simulate.seed_override = seed;
      return cmdSimulate(simulate);
    }
    if (*cmd_estimate) {
      estimate_scale.common = common;
      return cmdEstimateScale(estimate_scale);
    }
    if (*cmd_optimize) {
      optimize.common = common;
      if (solver_name == "dense") optimize.lm.solver = LinearSolver::Dense;
      if (solver_name == "schur") optimize.lm.solver = LinearSolver::Schur;
      return cmdOptimize(optimize);
    }
    if (*cmd_evaluate) {
      evaluate.common = common;
      return cmdEvaluate(evaluate);
    }
    if (*cmd_plot) {
      plot.common = common;
      return cmdPlotData(plot);
    }
    if (*cmd_trilaterate) {
      trilaterate.common = common;
      if (lever_arm_values.size() == 3) {
        trilaterate.lever_arm =
            Eigen::Vector3d(lever_arm_values[0], lever_arm_values[1], lever_arm_values[2]);
      }
      return cmdTrilaterate(trilaterate);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
