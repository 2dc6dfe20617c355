#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "monorange/graph.hpp"

namespace monorange {

enum class LinearSolver {
  Auto,   // dense below 200 free variables, Schur otherwise
  Dense,  // direct solve of the full damped system
  Schur,  // eliminate map points first (block-diagonal 3x3 structure)
};

struct LmConfig {
  int max_iterations = 100;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.5;
  double cost_rel_tolerance = 1e-8;
  double step_norm_tolerance = 1e-10;
  double max_lambda = 1e10;
  LinearSolver solver = LinearSolver::Auto;
};

enum class LmTermination { ConvergedCost, ConvergedStep, MaxIterations, LambdaOverflow };

const char* terminationName(LmTermination termination);

/// One attempted step (accepted or rejected) in the iteration log.
struct LmIterationEntry {
  int iteration = 0;  // outer iteration the attempt belongs to
  double cost = 0.0;  // candidate cost of this attempt
  double lambda = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

struct LmReport {
  int iterations_run = 0;  // accepted steps
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<LmIterationEntry> steps;
  LmTermination termination = LmTermination::MaxIterations;
  int final_inactive_reprojection = 0;
  int final_inactive_range = 0;
};

/// Line-oriented text log (`iter cost lambda step_norm accepted`) with `#`
/// header lines for the scalar report fields.
void writeLmLog(std::ostream& out, const LmReport& report, bool robust_range);
std::vector<LmIterationEntry> readLmLogEntries(std::istream& in);

/// Mapping from variables to step-vector blocks, skipping fixed variables.
/// The step vector is [free pose deltas (6 each) | free point deltas (3 each)].
struct VariableLayout {
  std::vector<int> pose_block;   // -1 when fixed
  std::vector<int> point_block;  // -1 when fixed
  int n_free_poses = 0;
  int n_free_points = 0;

  int dimension() const { return 6 * n_free_poses + 3 * n_free_points; }
  int pointOffset(int block) const { return 6 * n_free_poses + 3 * block; }
};

VariableLayout makeVariableLayout(const FactorGraph& graph);

/// Gauss-Newton normal equations J^T J delta = -J^T r in block form.
/// h_pose_pose is dense over free poses; point blocks are 3x3 diagonal;
/// coupling holds the nonzero pose-point blocks grouped per point.
struct NormalEquations {
  VariableLayout layout;
  Eigen::MatrixXd h_pose_pose;
  Eigen::VectorXd g_pose;  // J^T r, pose part
  std::vector<Eigen::Matrix3d> h_point_point;
  std::vector<Eigen::Vector3d> g_point;
  std::vector<std::vector<std::pair<int, Eigen::Matrix<double, 6, 3>>>> coupling;
};

NormalEquations assembleNormalEquations(const FactorGraph& graph,
                                        const FactorActivation& activation);

/// Solves (H + lambda * D) delta = -g with D = clamp(diag(H), 1e-6, 1e32)
/// (the clamp keeps completely unconstrained directions solvable; their step
/// is exactly zero because the matching gradient vanishes). Deterministic
/// for fixed input. Throws NumericalError with the under-constrained
/// variables when the system is singular.
Eigen::VectorXd solveNormalEquations(const NormalEquations& equations, double lambda,
                                     LinearSolver solver = LinearSolver::Auto);

/// Applies a step vector: retract on free poses, addition on free points.
FactorGraph applyStep(const FactorGraph& graph, const VariableLayout& layout,
                      const Eigen::VectorXd& delta);

/// Levenberg-Marquardt minimization of totalCost over all non-fixed poses
/// and map points. Accepts a step only when the cost strictly decreases;
/// otherwise lambda is scaled up and the same linearization retried. The
/// factor activation set is frozen within each outer iteration.
std::pair<FactorGraph, LmReport> optimize(const FactorGraph& graph, const LmConfig& config = {});

}  // namespace monorange
