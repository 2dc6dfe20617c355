#include "monorange/graph.hpp"

#include <sstream>

#include <doctest.h>

#include "oracles.hpp"

using namespace monorange;
using test::TestRng;

namespace {

const CameraIntrinsicsd kCamera{500.0, 500.0, 320.0, 240.0, 640, 480};

/// Small consistent graph: poses on an arc looking at a handful of points,
/// observations synthesized exactly, one range factor per pose.
FactorGraph makeTestGraph(unsigned seed, int n_poses = 4, int n_points = 6) {
  TestRng rng(seed);
  FactorGraph graph;
  graph.intrinsics = kCamera;
  RangingExtrinsicsd ext;
  ext.anchor_position = Eigen::Vector3d(-8.0, 1.0, 0.5);
  ext.tag_lever_arm = Eigen::Vector3d(0.1, -0.03, 0.06);
  graph.extrinsics.push_back(ext);

  for (int k = 0; k < n_poses; ++k) {
    const Eigen::Quaterniond q(
        Eigen::AngleAxisd(0.02 * k + rng.uniform(-0.01, 0.01), Eigen::Vector3d::UnitY()));
    const Eigen::Vector3d t(0.8 * k, 0.1 * k + rng.uniform(-0.05, 0.05), 0.0);
    graph.addPose(Pose3d(q, t), /*fixed=*/k == 0);
  }
  for (int i = 0; i < n_points; ++i) {
    graph.addPoint(Eigen::Vector3d(rng.uniform(0.5, 3.5), rng.uniform(-1.5, 1.5),
                                   rng.uniform(6.0, 9.0)));
  }
  for (int k = 0; k < n_poses; ++k) {
    for (int i = 0; i < n_points; ++i) {
      const auto pixel = projectPoint(graph.intrinsics, graph.poses[k], graph.points[i]);
      REQUIRE(pixel.has_value());
      graph.reprojection_factors.push_back({k, i, *pixel, 1.0});
    }
    graph.range_factors.push_back(
        {k, predictRange(graph.poses[k], 1.0, ext), kDefaultRangeSigma, 0});
  }
  return graph;
}

}  // namespace

TEST_CASE("reprojection residual: exact observation, whitening, behind-camera") {
  FactorGraph graph = makeTestGraph(51);
  const ReprojectionFactor& factor = graph.reprojection_factors.front();

  const ReprojectionEvaluation exact = evaluateReprojection(graph, factor);
  CHECK(exact.active);
  CHECK(exact.residual.norm() < 1e-12);

  ReprojectionFactor offset = factor;
  offset.observed_pixel += Eigen::Vector2d(1.0, 0.0);
  const ReprojectionEvaluation one_px = evaluateReprojection(graph, offset);
  CHECK(one_px.residual.x() == doctest::Approx(-1.0).epsilon(1e-12));

  offset.sigma_px = 2.0;
  const ReprojectionEvaluation half = evaluateReprojection(graph, offset);
  CHECK(half.residual.x() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK((half.j_pose - 0.5 * one_px.j_pose).cwiseAbs().maxCoeff() < 1e-12);

  graph.points[factor.point_index] =
      graph.poses[factor.pose_index].apply(Eigen::Vector3d(0.0, 0.0, -1.0));
  const ReprojectionEvaluation behind = evaluateReprojection(graph, factor);
  CHECK_FALSE(behind.active);
  CHECK(behind.residual.norm() == 0.0);
  CHECK(behind.j_pose.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("range residual: exact distance, zero lever arm, near-anchor guard") {
  FactorGraph graph = makeTestGraph(52);
  const RangeFactor& factor = graph.range_factors[1];
  const RangeEvaluation exact = evaluateRange(graph, factor);
  CHECK(exact.active);
  CHECK(std::abs(exact.residual) < 1e-12);

  RangeFactor off = factor;
  off.measured_distance += 0.1;  // 0.1 m short at sigma 0.1 -> whitened -1
  const RangeEvaluation unit = evaluateRange(graph, off);
  CHECK(unit.residual == doctest::Approx(-1.0).epsilon(1e-9));

  graph.extrinsics[0].tag_lever_arm.setZero();
  const RangeEvaluation no_lever = evaluateRange(graph, factor);
  CHECK(no_lever.j_pose.leftCols<3>().cwiseAbs().maxCoeff() == 0.0);
  CHECK(no_lever.j_pose.rightCols<3>().cwiseAbs().maxCoeff() > 0.0);

  // pose exactly at the anchor: direction undefined, factor deactivates
  FactorGraph at_anchor = makeTestGraph(53, 2, 6);
  at_anchor.extrinsics[0].tag_lever_arm.setZero();
  at_anchor.poses[1] =
      Pose3d(Eigen::Quaterniond::Identity(), at_anchor.extrinsics[0].anchor_position);
  const RangeEvaluation guarded = evaluateRange(at_anchor, at_anchor.range_factors[1]);
  CHECK_FALSE(guarded.active);
}

TEST_CASE("residual jacobians match central finite differences") {
  TestRng rng(54);
  FactorGraph graph = makeTestGraph(55, 6, 10);

  // perturb variables so residuals are non-trivial
  for (std::size_t k = 1; k < graph.poses.size(); ++k) {
    Eigen::Matrix<double, 6, 1> delta;
    for (int j = 0; j < 6; ++j) delta(j) = rng.uniform(-0.02, 0.02);
    graph.poses[k] = graph.poses[k].retract(delta);
  }
  for (auto& point : graph.points) point += rng.vector3(-0.05, 0.05);

  int checked = 0;
  for (const ReprojectionFactor& factor : graph.reprojection_factors) {
    const ReprojectionEvaluation eval = evaluateReprojection(graph, factor);
    if (!eval.active) continue;
    ++checked;

    const auto residual_of_pose = [&](const Eigen::VectorXd& delta) {
      FactorGraph perturbed = graph;
      perturbed.poses[factor.pose_index] =
          graph.poses[factor.pose_index].retract(Eigen::Matrix<double, 6, 1>(delta));
      return Eigen::VectorXd(evaluateReprojection(perturbed, factor).residual);
    };
    CHECK(test::jacobianError(
              eval.j_pose,
              test::numericalJacobian(residual_of_pose, Eigen::VectorXd::Zero(6), 2)) < 1e-5);

    const auto residual_of_point = [&](const Eigen::VectorXd& x) {
      FactorGraph perturbed = graph;
      perturbed.points[factor.point_index] = Eigen::Vector3d(x);
      return Eigen::VectorXd(evaluateReprojection(perturbed, factor).residual);
    };
    CHECK(test::jacobianError(
              eval.j_point,
              test::numericalJacobian(residual_of_point, graph.points[factor.point_index], 2)) <
          1e-5);
    if (checked >= 100) break;
  }
  CHECK(checked >= 50);

  int range_checked = 0;
  for (int copy = 0; copy < 20 && range_checked < 100; ++copy) {
    for (const RangeFactor& base_factor : graph.range_factors) {
      RangeFactor factor = base_factor;
      factor.measured_distance = std::max(0.0, factor.measured_distance - rng.uniform(0.0, 0.5));
      const RangeEvaluation eval = evaluateRange(graph, factor);
      if (!eval.active) continue;
      ++range_checked;
      const auto residual_of_pose = [&](const Eigen::VectorXd& delta) {
        FactorGraph perturbed = graph;
        perturbed.poses[factor.pose_index] =
            graph.poses[factor.pose_index].retract(Eigen::Matrix<double, 6, 1>(delta));
        Eigen::VectorXd r(1);
        r(0) = evaluateRange(perturbed, factor).residual;
        return r;
      };
      CHECK(test::jacobianError(
                eval.j_pose,
                test::numericalJacobian(residual_of_pose, Eigen::VectorXd::Zero(6), 1)) < 1e-5);
    }
  }
  CHECK(range_checked >= 100);
}

TEST_CASE("total cost: exact graph, unit residual, brute-force recomputation") {
  FactorGraph graph = makeTestGraph(56);
  CHECK(totalCost(graph) == 0.0);

  FactorGraph one_range = graph;
  one_range.range_factors[2].measured_distance += 0.1;
  CHECK(totalCost(one_range) == doctest::Approx(1.0).epsilon(1e-9));

  // perturb everything, then recompute the cost with the independent
  // reference formulas
  TestRng rng(57);
  for (std::size_t k = 0; k < graph.poses.size(); ++k) {
    Eigen::Matrix<double, 6, 1> delta;
    for (int j = 0; j < 6; ++j) delta(j) = rng.uniform(-0.03, 0.03);
    graph.poses[k] = graph.poses[k].retract(delta);
  }
  for (auto& point : graph.points) point += rng.vector3(-0.1, 0.1);

  double reference_cost = 0.0;
  for (const ReprojectionFactor& f : graph.reprojection_factors) {
    const Eigen::Vector2d predicted =
        test::referenceProject(graph.intrinsics, graph.poses[f.pose_index],
                               graph.points[f.point_index]);
    reference_cost += (predicted - f.observed_pixel).squaredNorm() / (f.sigma_px * f.sigma_px);
  }
  for (const RangeFactor& f : graph.range_factors) {
    const double predicted =
        test::referenceRange(graph.poses[f.pose_index], 1.0, graph.extrinsics[0]);
    const double whitened = (predicted - f.measured_distance) / f.sigma_m;
    reference_cost += whitened * whitened;
  }
  CHECK(totalCost(graph) == doctest::Approx(reference_cost).epsilon(1e-12));
}

TEST_CASE("total cost reports the offending factor on non-finite residuals") {
  FactorGraph graph = makeTestGraph(58);
  graph.range_factors[1].measured_distance = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(totalCost(graph), doctest::Contains("range factor 1"), NumericalError);
}

TEST_CASE("apply scale: identity, ambiguity split, zero rejection") {
  const FactorGraph graph = makeTestGraph(59);

  const FactorGraph unchanged = applyScale(graph, 1.0);
  for (std::size_t k = 0; k < graph.poses.size(); ++k) {
    CHECK((unchanged.poses[k].translation() - graph.poses[k].translation()).norm() == 0.0);
  }

  // scaling poses and points together leaves every reprojection residual
  // untouched but moves the range residuals off zero
  for (const double alpha : {0.5, 2.0, 4.6}) {
    const FactorGraph scaled = applyScale(graph, alpha);
    double reprojection_cost = 0.0;
    for (const ReprojectionFactor& f : scaled.reprojection_factors) {
      reprojection_cost += evaluateReprojection(scaled, f).residual.squaredNorm();
    }
    CHECK(reprojection_cost < 1e-9);
    double range_cost = 0.0;
    for (const RangeFactor& f : scaled.range_factors) {
      range_cost += std::pow(evaluateRange(scaled, f).residual, 2);
    }
    CHECK(range_cost > 1.0);  // scale is observable through ranges only
  }

  CHECK_THROWS_AS(applyScale(graph, 0.0), DataError);
  CHECK_THROWS_AS(applyScale(graph, std::numeric_limits<double>::infinity()), DataError);
}

TEST_CASE("graph validation catches the structural invariants") {
  FactorGraph good = makeTestGraph(60);
  CHECK_NOTHROW(validateGraph(good));

  FactorGraph no_gauge = good;
  no_gauge.pose_fixed.assign(no_gauge.poses.size(), false);
  CHECK_THROWS_WITH_AS(validateGraph(no_gauge), doctest::Contains("fixed"), DataError);

  FactorGraph bad_reference = good;
  bad_reference.reprojection_factors[0].point_index = 99;
  CHECK_THROWS_AS(validateGraph(bad_reference), DataError);

  FactorGraph lonely_point = good;
  lonely_point.addPoint(Eigen::Vector3d(0.0, 0.0, 5.0));
  CHECK_THROWS_WITH_AS(validateGraph(lonely_point), doctest::Contains("fewer than 2"),
                       DataError);
  lonely_point.point_fixed.back() = true;  // fixed points may be under-observed
  CHECK_NOTHROW(validateGraph(lonely_point));

  FactorGraph bad_sigma = good;
  bad_sigma.reprojection_factors[3].sigma_px = 0.0;
  CHECK_THROWS_AS(validateGraph(bad_sigma), DataError);
}

TEST_CASE("huber loss: quadratic core, linear tail, continuous joint") {
  CHECK(huberCost(1.5) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(huberSqrtWeight(1.5) == 1.0);
  CHECK(huberCost(3.0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(huberCost(3.0 + 1e-9) == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(huberCost(6.0) == doctest::Approx(2.0 * 3.0 * 6.0 - 9.0).epsilon(1e-15));
  CHECK(huberCost(-6.0) == huberCost(6.0));
  // IRLS weight reproduces the robust gradient magnitude
  const double r = 5.0;
  CHECK(huberSqrtWeight(r) * huberSqrtWeight(r) * r * r ==
        doctest::Approx(3.0 * r).epsilon(1e-12));
}

TEST_CASE("robust range cost engages only above the threshold") {
  FactorGraph graph = makeTestGraph(61);
  graph.range_factors[0].measured_distance += 1.0;  // whitened residual -10
  const double plain = totalCost(graph);
  graph.robust_range = true;
  const double robust = totalCost(graph);
  CHECK(robust < plain);
  CHECK(robust == doctest::Approx(plain - 100.0 + (2.0 * 3.0 * 10.0 - 9.0)).epsilon(1e-9));
}

TEST_CASE("graph snapshot round-trips bit-identically") {
  FactorGraph graph = makeTestGraph(62);
  graph.point_fixed[2] = true;
  graph.robust_range = true;

  std::ostringstream first;
  writeGraphSnapshot(first, graph);
  std::istringstream input(first.str());
  const FactorGraph restored = readGraphSnapshot(input);
  std::ostringstream second;
  writeGraphSnapshot(second, restored);
  CHECK(first.str() == second.str());

  REQUIRE(restored.poses.size() == graph.poses.size());
  for (std::size_t k = 0; k < graph.poses.size(); ++k) {
    CHECK((restored.poses[k].translation() - graph.poses[k].translation()).norm() == 0.0);
    CHECK((restored.poses[k].rotation().coeffs() - graph.poses[k].rotation().coeffs()).norm() ==
          0.0);
  }
  REQUIRE(restored.points.size() == graph.points.size());
  for (std::size_t i = 0; i < graph.points.size(); ++i) {
    CHECK((restored.points[i] - graph.points[i]).norm() == 0.0);
  }
  CHECK(restored.robust_range == graph.robust_range);
  CHECK(restored.point_fixed[2]);
  CHECK(totalCost(restored) == totalCost(graph));
}

TEST_CASE("graph snapshot rejects foreign content") {
  std::istringstream input("TRAJECTORY 1\n0 0 0\n");
  CHECK_THROWS_AS(readGraphSnapshot(input), DataError);
}
