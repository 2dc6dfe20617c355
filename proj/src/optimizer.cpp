#include "monorange/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "monorange/io.hpp"

namespace monorange {

namespace {

constexpr double kMinDiagonal = 1e-6;
constexpr double kMaxDiagonal = 1e32;
constexpr int kDenseVariableLimit = 200;  // free poses + free points
constexpr double kSolveResidualTolerance = 1e-9;

double clampDiagonal(double value) { return std::clamp(value, kMinDiagonal, kMaxDiagonal); }

bool useDense(const NormalEquations& eq, LinearSolver solver) {
  if (solver == LinearSolver::Dense) return true;
  if (solver == LinearSolver::Schur) return false;
  return eq.layout.n_free_poses + eq.layout.n_free_points < kDenseVariableLimit;
}

[[noreturn]] void throwRankDeficiency(const NormalEquations& eq) {
  std::string under_constrained;
  double max_diag = 0.0;
  for (int i = 0; i < eq.h_pose_pose.rows(); ++i) {
    max_diag = std::max(max_diag, eq.h_pose_pose(i, i));
  }
  for (const Eigen::Matrix3d& block : eq.h_point_point) {
    max_diag = std::max(max_diag, block.diagonal().maxCoeff());
  }
  const double floor = 1e-12 * std::max(1.0, max_diag);
  for (std::size_t p = 0; p < eq.layout.pose_block.size(); ++p) {
    const int block = eq.layout.pose_block[p];
    if (block < 0) continue;
    if (eq.h_pose_pose.diagonal().segment<6>(6 * block).minCoeff() < floor) {
      under_constrained += " pose " + std::to_string(p);
    }
  }
  for (std::size_t l = 0; l < eq.layout.point_block.size(); ++l) {
    const int block = eq.layout.point_block[l];
    if (block < 0) continue;
    if (eq.h_point_point[block].diagonal().minCoeff() < floor) {
      under_constrained += " point " + std::to_string(l);
    }
  }
  throw NumericalError("solveNormalEquations: singular system; under-constrained variables:" +
                       (under_constrained.empty() ? std::string(" none identified")
                                                  : under_constrained));
}

Eigen::VectorXd solveDense(const NormalEquations& eq, double lambda) {
  const int n_pose = 6 * eq.layout.n_free_poses;
  const int n = eq.layout.dimension();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  h.topLeftCorner(n_pose, n_pose) = eq.h_pose_pose;
  g.head(n_pose) = eq.g_pose;
  for (int block = 0; block < eq.layout.n_free_points; ++block) {
    const int offset = eq.layout.pointOffset(block);
    h.block<3, 3>(offset, offset) = eq.h_point_point[block];
    g.segment<3>(offset) = eq.g_point[block];
    for (const auto& [pose_block, w] : eq.coupling[block]) {
      h.block<6, 3>(6 * pose_block, offset) = w;
      h.block<3, 6>(offset, 6 * pose_block) = w.transpose();
    }
  }
  Eigen::MatrixXd damped = h;
  for (int i = 0; i < n; ++i) {
    damped(i, i) += lambda * clampDiagonal(h(i, i));
  }
  const Eigen::VectorXd delta = damped.ldlt().solve(-g);
  const double residual = (damped * delta + g).norm();
  if (!delta.allFinite() || residual > kSolveResidualTolerance * std::max(1.0, g.norm())) {
    throwRankDeficiency(eq);
  }
  return delta;
}

Eigen::VectorXd solveSchur(const NormalEquations& eq, double lambda) {
  const int n_pose = 6 * eq.layout.n_free_poses;

  Eigen::MatrixXd reduced = eq.h_pose_pose;
  for (int i = 0; i < n_pose; ++i) {
    reduced(i, i) += lambda * clampDiagonal(eq.h_pose_pose(i, i));
  }
  Eigen::VectorXd reduced_rhs = eq.g_pose;

  // Eliminate each point: S -= W C^-1 W^T, g_s -= W C^-1 g_l.
  std::vector<Eigen::Matrix3d> point_inverse(eq.layout.n_free_points);
  for (int block = 0; block < eq.layout.n_free_points; ++block) {
    Eigen::Matrix3d damped = eq.h_point_point[block];
    for (int i = 0; i < 3; ++i) {
      damped(i, i) += lambda * clampDiagonal(damped(i, i));
    }
    point_inverse[block] = damped.inverse();
    if (!point_inverse[block].allFinite()) {
      throwRankDeficiency(eq);
    }
    const auto& entries = eq.coupling[block];
    for (const auto& [pose_i, w_i] : entries) {
      const Eigen::Matrix<double, 6, 3> w_c = w_i * point_inverse[block];
      reduced_rhs.segment<6>(6 * pose_i) -= w_c * eq.g_point[block];
      for (const auto& [pose_k, w_k] : entries) {
        reduced.block<6, 6>(6 * pose_i, 6 * pose_k) -= w_c * w_k.transpose();
      }
    }
  }

  const Eigen::VectorXd delta_pose = reduced.ldlt().solve(-reduced_rhs);
  if (!delta_pose.allFinite()) {
    throwRankDeficiency(eq);
  }

  Eigen::VectorXd delta(eq.layout.dimension());
  delta.head(n_pose) = delta_pose;
  for (int block = 0; block < eq.layout.n_free_points; ++block) {
    Eigen::Vector3d rhs = eq.g_point[block];
    for (const auto& [pose_i, w_i] : eq.coupling[block]) {
      rhs += w_i.transpose() * delta_pose.segment<6>(6 * pose_i);
    }
    delta.segment<3>(eq.layout.pointOffset(block)) = -(point_inverse[block] * rhs);
  }
  return delta;
}

}  // namespace

const char* terminationName(LmTermination termination) {
  switch (termination) {
    case LmTermination::ConvergedCost:
      return "converged-cost";
    case LmTermination::ConvergedStep:
      return "converged-step";
    case LmTermination::MaxIterations:
      return "max-iterations";
    case LmTermination::LambdaOverflow:
      return "lambda-overflow";
  }
  return "unknown";
}

VariableLayout makeVariableLayout(const FactorGraph& graph) {
  VariableLayout layout;
  layout.pose_block.resize(graph.poses.size(), -1);
  layout.point_block.resize(graph.points.size(), -1);
  for (std::size_t i = 0; i < graph.poses.size(); ++i) {
    if (!graph.pose_fixed[i]) layout.pose_block[i] = layout.n_free_poses++;
  }
  for (std::size_t i = 0; i < graph.points.size(); ++i) {
    if (!graph.point_fixed[i]) layout.point_block[i] = layout.n_free_points++;
  }
  return layout;
}

NormalEquations assembleNormalEquations(const FactorGraph& graph,
                                        const FactorActivation& activation) {
  NormalEquations eq;
  eq.layout = makeVariableLayout(graph);
  const int n_pose = 6 * eq.layout.n_free_poses;
  eq.h_pose_pose = Eigen::MatrixXd::Zero(n_pose, n_pose);
  eq.g_pose = Eigen::VectorXd::Zero(n_pose);
  eq.h_point_point.assign(eq.layout.n_free_points, Eigen::Matrix3d::Zero());
  eq.g_point.assign(eq.layout.n_free_points, Eigen::Vector3d::Zero());
  eq.coupling.assign(eq.layout.n_free_points, {});

  for (std::size_t i = 0; i < graph.reprojection_factors.size(); ++i) {
    if (!activation.reprojection[i]) continue;
    const ReprojectionFactor& factor = graph.reprojection_factors[i];
    const ReprojectionEvaluation eval = evaluateReprojection(graph, factor);
    if (!eval.active) continue;
    const int pose_block = eq.layout.pose_block[factor.pose_index];
    const int point_block = eq.layout.point_block[factor.point_index];
    if (pose_block >= 0) {
      eq.h_pose_pose.block<6, 6>(6 * pose_block, 6 * pose_block) +=
          eval.j_pose.transpose() * eval.j_pose;
      eq.g_pose.segment<6>(6 * pose_block) += eval.j_pose.transpose() * eval.residual;
    }
    if (point_block >= 0) {
      eq.h_point_point[point_block] += eval.j_point.transpose() * eval.j_point;
      eq.g_point[point_block] += eval.j_point.transpose() * eval.residual;
    }
    if (pose_block >= 0 && point_block >= 0) {
      auto& entries = eq.coupling[point_block];
      const Eigen::Matrix<double, 6, 3> w = eval.j_pose.transpose() * eval.j_point;
      auto it = std::find_if(entries.begin(), entries.end(),
                             [pose_block](const auto& e) { return e.first == pose_block; });
      if (it == entries.end()) {
        entries.emplace_back(pose_block, w);
      } else {
        it->second += w;
      }
    }
  }

  for (std::size_t i = 0; i < graph.range_factors.size(); ++i) {
    if (!activation.range[i]) continue;
    const RangeFactor& factor = graph.range_factors[i];
    RangeEvaluation eval = evaluateRange(graph, factor);
    if (!eval.active) continue;
    if (graph.robust_range) {
      const double w = huberSqrtWeight(eval.residual);
      eval.residual *= w;
      eval.j_pose *= w;
    }
    const int pose_block = eq.layout.pose_block[factor.pose_index];
    if (pose_block >= 0) {
      eq.h_pose_pose.block<6, 6>(6 * pose_block, 6 * pose_block) +=
          eval.j_pose.transpose() * eval.j_pose;
      eq.g_pose.segment<6>(6 * pose_block) += eval.j_pose.transpose() * eval.residual;
    }
  }

  // Keep each point's coupling entries in pose-block order for determinism.
  for (auto& entries : eq.coupling) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return eq;
}

Eigen::VectorXd solveNormalEquations(const NormalEquations& equations, double lambda,
                                     LinearSolver solver) {
  return useDense(equations, solver) ? solveDense(equations, lambda)
                                     : solveSchur(equations, lambda);
}

FactorGraph applyStep(const FactorGraph& graph, const VariableLayout& layout,
                      const Eigen::VectorXd& delta) {
  FactorGraph updated = graph;
  for (std::size_t i = 0; i < graph.poses.size(); ++i) {
    const int block = layout.pose_block[i];
    if (block < 0) continue;
    updated.poses[i] = graph.poses[i].retract(delta.segment<6>(6 * block));
  }
  for (std::size_t i = 0; i < graph.points.size(); ++i) {
    const int block = layout.point_block[i];
    if (block < 0) continue;
    updated.points[i] = graph.points[i] + delta.segment<3>(layout.pointOffset(block));
  }
  return updated;
}

std::pair<FactorGraph, LmReport> optimize(const FactorGraph& graph, const LmConfig& config) {
  validateGraph(graph);

  FactorGraph current = graph;
  FactorActivation activation = computeActivation(current);
  double cost = totalCost(current, activation);

  LmReport report;
  report.initial_cost = cost;

  if (cost == 0.0) {
    report.final_cost = 0.0;
    report.termination = LmTermination::ConvergedCost;
    report.final_inactive_reprojection = activation.n_inactive_reprojection;
    report.final_inactive_range = activation.n_inactive_range;
    return {current, report};
  }

  double lambda = config.initial_lambda;
  LmTermination termination = LmTermination::MaxIterations;
  bool done = false;

  for (int outer = 1; outer <= config.max_iterations && !done; ++outer) {
    const NormalEquations equations = assembleNormalEquations(current, activation);
    while (true) {
      const Eigen::VectorXd delta = solveNormalEquations(equations, lambda, config.solver);
      const double step_norm = delta.norm();
      const FactorGraph candidate = applyStep(current, equations.layout, delta);
      const double candidate_cost = totalCost(candidate, activation);
      const bool accepted = candidate_cost < cost;
      report.steps.push_back({outer, candidate_cost, lambda, step_norm, accepted});

      if (accepted) {
        const double previous_cost = cost;
        current = candidate;
        cost = candidate_cost;
        ++report.iterations_run;
        lambda *= config.lambda_down;
        activation = computeActivation(current);
        if (cost == 0.0 ||
            previous_cost - cost <= config.cost_rel_tolerance * previous_cost) {
          termination = LmTermination::ConvergedCost;
          done = true;
        } else if (step_norm < config.step_norm_tolerance) {
          termination = LmTermination::ConvergedStep;
          done = true;
        }
        break;
      }

      if (step_norm < config.step_norm_tolerance) {
        termination = LmTermination::ConvergedStep;
        done = true;
        break;
      }
      lambda *= config.lambda_up;
      if (lambda > config.max_lambda) {
        termination = LmTermination::LambdaOverflow;
        done = true;
        break;
      }
    }
  }

  report.final_cost = cost;
  report.termination = termination;
  report.final_inactive_reprojection = activation.n_inactive_reprojection;
  report.final_inactive_range = activation.n_inactive_range;
  return {current, report};
}

void writeLmLog(std::ostream& out, const LmReport& report, bool robust_range) {
  out << "# monorange lm log\n";
  out << "# robust_range " << (robust_range ? 1 : 0) << '\n';
  out << "# termination " << terminationName(report.termination) << '\n';
  out << "# iterations_run " << report.iterations_run << '\n';
  out << "# initial_cost " << formatDouble(report.initial_cost, 17) << '\n';
  out << "# final_cost " << formatDouble(report.final_cost, 17) << '\n';
  out << "# inactive_reprojection " << report.final_inactive_reprojection << '\n';
  out << "# inactive_range " << report.final_inactive_range << '\n';
  out << "# columns: iter cost lambda step_norm accepted\n";
  for (const LmIterationEntry& entry : report.steps) {
    out << entry.iteration << ' ' << formatDouble(entry.cost, 17) << ' '
        << formatDouble(entry.lambda, 17) << ' ' << formatDouble(entry.step_norm, 17) << ' '
        << (entry.accepted ? 1 : 0) << '\n';
  }
}

std::vector<LmIterationEntry> readLmLogEntries(std::istream& in) {
  std::vector<LmIterationEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream stream(line);
    LmIterationEntry entry;
    int accepted = 0;
    if (stream >> entry.iteration >> entry.cost >> entry.lambda >> entry.step_norm >> accepted) {
      entry.accepted = accepted != 0;
      entries.push_back(entry);
    }
  }
  return entries;
}

}  // namespace monorange
