#include "monorange/ranging.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace monorange {

namespace {

constexpr int kMaxGaussNewtonIterations = 50;
constexpr double kStepTolerance = 1e-10;         // m
constexpr double kMaxConditionNumber = 1e8;

double residualRms(const std::vector<TrilaterationSample>& samples,
                   const Eigen::Vector3d& anchor) {
  double sum_sq = 0.0;
  for (const auto& s : samples) {
    const double r = (anchor - s.position).norm() - s.distance;
    sum_sq += r * r;
  }
  return std::sqrt(sum_sq / static_cast<double>(samples.size()));
}

}  // namespace

TrilaterationResult trilaterateAnchor(const std::vector<TrilaterationSample>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 4) {
    throw DataError("trilaterateAnchor: need at least 4 samples, got " + std::to_string(n));
  }

  // Linear initialization. Each sample gives ||a||^2 - 2 x_i^T a = d_i^2 - ||x_i||^2;
  // subtracting the mean equation cancels ||a||^2 and leaves a linear system in a.
  Eigen::Vector3d position_mean = Eigen::Vector3d::Zero();
  double rhs_mean = 0.0;
  for (const auto& s : samples) {
    position_mean += s.position;
    rhs_mean += s.distance * s.distance - s.position.squaredNorm();
  }
  position_mean /= n;
  rhs_mean /= n;

  Eigen::MatrixXd system(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    system.row(i) = -2.0 * (samples[i].position - position_mean).transpose();
    rhs(i) = (samples[i].distance * samples[i].distance - samples[i].position.squaredNorm()) -
             rhs_mean;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(system,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma_max = svd.singularValues()(0);
  const double sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(sigma_min > 0.0) || sigma_max / sigma_min > kMaxConditionNumber) {
    throw DataError("trilaterateAnchor: degenerate survey geometry (condition number above 1e8)");
  }
  Eigen::Vector3d anchor = svd.solve(rhs);

  // Gauss-Newton on r_i = ||a - x_i|| - d_i.
  TrilaterationResult result;
  for (int iter = 0; iter < kMaxGaussNewtonIterations; ++iter) {
    Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
    for (const auto& s : samples) {
      const Eigen::Vector3d offset = anchor - s.position;
      const double range = offset.norm();
      if (range < kRangeEpsilon) {
        continue;  // undefined direction; the remaining samples fix the solution
      }
      const Eigen::Vector3d direction = offset / range;
      const double residual = range - s.distance;
      hessian += direction * direction.transpose();
      gradient += direction * residual;
    }
    const Eigen::Vector3d step = hessian.ldlt().solve(-gradient);
    if (!step.allFinite()) {
      throw NumericalError("trilaterateAnchor: singular Gauss-Newton system");
    }
    anchor += step;
    result.iterations = iter + 1;
    if (step.norm() < kStepTolerance) {
      break;
    }
  }

  result.anchor = anchor;
  result.residual_rms = residualRms(samples, anchor);
  return result;
}

}  // namespace monorange
