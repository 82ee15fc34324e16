#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "vsgrasp/camera.hpp"
#include "vsgrasp/error.hpp"

namespace vsgrasp {
namespace {

const CameraIntrinsics kServoCamera{1500.0, 1000.0, 256.0, 256.0};

TEST(Project, OnAxisPointHitsPrincipalPoint) {
  const ImagePoint p = project(kServoCamera, {0.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(p.u, 256.0);
  EXPECT_DOUBLE_EQ(p.v, 256.0);
}

TEST(Project, OffAxisPoint) {
  const ImagePoint p = project(kServoCamera, {0.1, 0.1, 1.0});
  EXPECT_NEAR(p.u, 406.0, 1e-12);
  EXPECT_NEAR(p.v, 356.0, 1e-12);
}

TEST(Project, RejectsPointsOnOrBehindTheCameraPlane) {
  for (const double z : {0.0, 1e-10, -1.0}) {
    try {
      project(kServoCamera, {0.0, 0.0, z});
      FAIL() << "z = " << z;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonPositiveDepth);
    }
  }
}

TEST(Intrinsics, ValidateRejectsNonPositiveFocal) {
  EXPECT_THROW((CameraIntrinsics{0.0, 1.0, 0, 0}.validate()), Error);
  EXPECT_THROW((CameraIntrinsics{1.0, -1.0, 0, 0}.validate()), Error);
  EXPECT_NO_THROW(kServoCamera.validate());
}

TEST(ProjectionMatrix, IdentityExtrinsicsMapsAxisToPrincipalPoint) {
  CameraPose c;
  c.intrinsics = kServoCamera;
  const Matrix34d p = euclidean_projection_matrix(c);
  EXPECT_TRUE(p.col(3).isZero(0.0));
  const ImagePoint m = project_homogeneous(p, {0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(m.u, 256.0);
  EXPECT_DOUBLE_EQ(m.v, 256.0);
}

TEST(ProjectionMatrix, AgreesWithProjectAfterTransform) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    CameraPose c;
    c.intrinsics = {800.0 + 400.0 * (i % 3), 900.0, 300.0, 240.0};
    c.extrinsics = look_at(testing::random_vector(rng, 0.5), Eigen::Vector3d(0, 0, 2) + testing::random_vector(rng, 0.2),
                           -Eigen::Vector3d::UnitY());
    const Eigen::Vector3d world = Eigen::Vector3d(0, 0, 2) + testing::random_vector(rng, 0.3);
    const ImagePoint a = project(c.intrinsics, transform_point(c.extrinsics, world));
    const Matrix34d p = euclidean_projection_matrix(c);
    const ImagePoint b = project_homogeneous(p, world.homogeneous());
    const ImagePoint scaled = project_homogeneous(5.0 * p, world.homogeneous());
    const ImagePoint rescaled_point = project_homogeneous(p, 3.0 * world.homogeneous());
    EXPECT_LE(std::hypot(a.u - b.u, a.v - b.v), 1e-9);
    EXPECT_LE(std::hypot(b.u - scaled.u, b.v - scaled.v), 1e-9);
    EXPECT_LE(std::hypot(b.u - rescaled_point.u, b.v - rescaled_point.v), 1e-9);
  }
}

TEST(Visibility, SensorRectangle) {
  const SensorSize s{512, 512};
  EXPECT_TRUE(is_visible(s, {0.0, 0.0}));
  EXPECT_TRUE(is_visible(s, {512.0, 511.0}));
  EXPECT_FALSE(is_visible(s, {-0.1, 10.0}));
  EXPECT_FALSE(is_visible(s, {10.0, 512.5}));
}

TEST(PixelNoise, ZeroSigmaLeavesPointUnchanged) {
  Rng rng(1);
  const ImagePoint p{12.5, -3.0};
  const ImagePoint q = add_pixel_noise(p, 0.0, rng);
  EXPECT_EQ(q.u, p.u);
  EXPECT_EQ(q.v, p.v);
}

TEST(PixelNoise, FixedSeedIsBitExact) {
  Rng a = make_stream(42, "noise");
  Rng b = make_stream(42, "noise");
  for (int i = 0; i < 10; ++i) {
    const ImagePoint p = add_pixel_noise({100, 100}, 0.5, a);
    const ImagePoint q = add_pixel_noise({100, 100}, 0.5, b);
    EXPECT_EQ(p.u, q.u);
    EXPECT_EQ(p.v, q.v);
  }
}

TEST(PixelNoise, SampleStandardDeviation) {
  Rng rng = make_stream(7, "stats");
  const int n = 100000;
  double su = 0, sv = 0, suu = 0, svv = 0;
  for (int i = 0; i < n; ++i) {
    const ImagePoint p = add_pixel_noise({0, 0}, 0.5, rng);
    su += p.u;
    sv += p.v;
    suu += p.u * p.u;
    svv += p.v * p.v;
  }
  const double std_u = std::sqrt(suu / n - (su / n) * (su / n));
  const double std_v = std::sqrt(svv / n - (sv / n) * (sv / n));
  EXPECT_GE(std_u, 0.49);
  EXPECT_LE(std_u, 0.51);
  EXPECT_GE(std_v, 0.49);
  EXPECT_LE(std_v, 0.51);
}

TEST(PixelNoise, NegativeSigmaThrows) {
  Rng rng(1);
  EXPECT_THROW(add_pixel_noise({0, 0}, -0.1, rng), Error);
}

TEST(StreamSeed, NamesAndSeedsSeparateStreams) {
  EXPECT_NE(stream_seed(1, "a"), stream_seed(1, "b"));
  EXPECT_NE(stream_seed(1, "a"), stream_seed(2, "a"));
  EXPECT_EQ(stream_seed(3, "planning/0"), stream_seed(3, "planning/0"));
}

TEST(LookAt, TargetLandsOnOpticalAxis) {
  const Eigen::Vector3d pos(0.4, -0.2, 0.1);
  const Eigen::Vector3d target(0.0, 0.1, 1.2);
  const RigidTransform e = look_at(pos, target, -Eigen::Vector3d::UnitY());
  const Eigen::Vector3d t = transform_point(e, target);
  EXPECT_LE(std::hypot(t.x(), t.y()), 1e-12);
  EXPECT_GT(t.z(), 0.0);
  EXPECT_LE(transform_point(e, pos).norm(), 1e-12);
  EXPECT_NEAR(e.rotation.determinant(), 1.0, 1e-12);
  // World "up" is (0, -1, 0), so image v grows along +y.
  EXPECT_GT(transform_point(e, target + 0.1 * Eigen::Vector3d::UnitY()).y(), 0.0);
}

TEST(LookAt, OriginAlongZIsIdentity) {
  const RigidTransform e = look_at(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), -Eigen::Vector3d::UnitY());
  EXPECT_LE(testing::max_abs_diff(e.matrix(), Eigen::Matrix4d::Identity()), 1e-15);
}

}  // namespace
}  // namespace vsgrasp
