#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "vsgrasp/camera.hpp"
#include "vsgrasp/error.hpp"
#include "vsgrasp/pose.hpp"

namespace vsgrasp {
namespace {

const CameraIntrinsics kCamera{1500.0, 1000.0, 256.0, 256.0};

const std::vector<Eigen::Vector3d> kModel{{-0.05, -0.05, 0.0}, {0.05, -0.05, 0.0}, {0.05, 0.05, 0.03},
                                          {-0.05, 0.05, -0.03}, {0.0, 0.0, 0.05}, {0.03, -0.02, -0.04}};

std::vector<PointCorrespondence2D3D> synthesize(const RigidTransform& pose, std::size_t n, double sigma, Rng& rng) {
  std::vector<PointCorrespondence2D3D> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({add_pixel_noise(project(kCamera, transform_point(pose, kModel[i])), sigma, rng), kModel[i]});
  }
  return out;
}

RigidTransform random_pose(std::mt19937_64& rng) {
  RigidTransform p = testing::random_transform(rng, 0.1);
  p.translation.z() += 1.0;
  return p;
}

RigidTransform perturb(const RigidTransform& truth, std::mt19937_64& rng, double deg, double m) {
  const Eigen::Vector3d axis = testing::random_vector(rng).normalized();
  const Eigen::Vector3d dir = testing::random_vector(rng).normalized();
  return compose(RigidTransform::from_rotation_vector(axis * deg * M_PI / 180.0, dir * m), truth);
}

double rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return rotation_log(a.rotation.transpose() * b.rotation).norm();
}

TEST(EstimatePose, RecoversPoseFromPerturbedInit) {
  std::mt19937_64 rng(41);
  Rng noise(0);
  for (int i = 0; i < 50; ++i) {
    const RigidTransform truth = random_pose(rng);
    const auto matches = synthesize(truth, 4, 0.0, noise);
    const PoseEstimate est = estimate_pose(matches, kCamera, perturb(truth, rng, 5.0, 0.05));
    EXPECT_TRUE(est.converged);
    EXPECT_LE(rotation_error(est.pose, truth), 1e-6);
    EXPECT_LE((est.pose.translation - truth.translation).norm(), 1e-6);
    EXPECT_LE(est.iterations, 20);
  }
}

TEST(EstimatePose, GroundTruthInitIsFixedPoint) {
  std::mt19937_64 rng(42);
  Rng noise(0);
  const RigidTransform truth = random_pose(rng);
  const PoseEstimate est = estimate_pose(synthesize(truth, 6, 0.0, noise), kCamera, truth);
  EXPECT_TRUE(est.converged);
  EXPECT_LE(est.iterations, 1);
  EXPECT_LE(est.rms_reprojection, 1e-10);
}

TEST(EstimatePose, NoisyRmsTracksNoiseLevel) {
  std::mt19937_64 rng(43);
  std::vector<double> rms;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng noise = make_stream(seed, "pose/noise");
    const RigidTransform truth = random_pose(rng);
    rms.push_back(estimate_pose(synthesize(truth, 6, 0.5, noise), kCamera, truth).rms_reprojection);
  }
  // Six points, six parameters: residual rms sits somewhat below the noise sigma.
  for (const double r : rms) {
    EXPECT_LE(r, 1.5);
  }
  std::sort(rms.begin(), rms.end());
  const double median = 0.5 * (rms[49] + rms[50]);
  EXPECT_GE(median, 0.2);
  EXPECT_LE(median, 1.0);
}

TEST(EstimatePose, RejectsTooFewMatches) {
  std::mt19937_64 rng(44);
  Rng noise(0);
  const RigidTransform truth = random_pose(rng);
  EXPECT_THROW(estimate_pose(synthesize(truth, 3, 0.0, noise), kCamera, truth), Error);
}

TEST(EstimatePose, InitBehindCameraThrows) {
  std::mt19937_64 rng(45);
  Rng noise(0);
  const RigidTransform truth = random_pose(rng);
  RigidTransform behind = truth;
  behind.translation.z() = -1.0;
  try {
    estimate_pose(synthesize(truth, 4, 0.0, noise), kCamera, behind);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
}

TEST(EstimatePose, WarmStartFromPreviousFrame) {
  EXPECT_LE(testing::max_abs_diff(pose_warm_start(PoseEstimate{}).matrix(), Eigen::Matrix4d::Identity()), 0.0);
  std::mt19937_64 rng(46);
  Rng noise(0);
  RigidTransform truth = random_pose(rng);
  PoseEstimate prev = estimate_pose(synthesize(truth, 4, 0.0, noise), kCamera, perturb(truth, rng, 5.0, 0.05));
  const VelocityScrew drift{{0.01, -0.02, 0.03}, {0.05, 0.02, -0.04}};
  for (int frame = 0; frame < 30; ++frame) {
    truth = integrate_screw(truth, drift, 0.1);
    const auto matches = synthesize(truth, 4, 0.0, noise);
    const PoseEstimate warm = estimate_pose(matches, kCamera, pose_warm_start(prev));
    const PoseEstimate cold = estimate_pose(matches, kCamera, perturb(truth, rng, 5.0, 0.05));
    EXPECT_LE(warm.iterations, 5) << frame;
    EXPECT_LE(testing::max_abs_diff(warm.pose.matrix(), cold.pose.matrix()), 1e-8);
    prev = warm;
  }
}

// Moving the model frame and the initial guess together only moves the answer.
TEST(EstimatePose, GaugeInvariance) {
  std::mt19937_64 rng(47);
  Rng noise = make_stream(3, "gauge");
  const RigidTransform truth = random_pose(rng);
  const auto matches = synthesize(truth, 6, 0.3, noise);
  const RigidTransform init = perturb(truth, rng, 4.0, 0.03);
  const RigidTransform g = RigidTransform::from_rotation_vector({0.3, -0.2, 0.5}, {0.1, 0.2, -0.1});
  std::vector<PointCorrespondence2D3D> moved = matches;
  for (auto& m : moved) {
    m.model = transform_point(g, m.model);
  }
  const PoseEstimate a = estimate_pose(matches, kCamera, init, 1e-12);
  const PoseEstimate b = estimate_pose(moved, kCamera, compose(init, invert(g)), 1e-12);
  EXPECT_LE(testing::max_abs_diff(compose(b.pose, g).matrix(), a.pose.matrix()), 1e-8);
}

TEST(ReprojectionRms, ZeroAtTruth) {
  std::mt19937_64 rng(48);
  Rng noise(0);
  const RigidTransform truth = random_pose(rng);
  EXPECT_LE(reprojection_rms(synthesize(truth, 6, 0.0, noise), kCamera, truth), 1e-12);
}

}  // namespace
}  // namespace vsgrasp
