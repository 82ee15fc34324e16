#include "vsgrasp/camera.hpp"

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

namespace {

constexpr double kMinDepth = 1e-9;

}  // namespace

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << alpha_u, 0.0, u0,
       0.0, alpha_v, v0,
       0.0, 0.0, 1.0;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(alpha_u > 0.0) || !(alpha_v > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal terms alpha_u and alpha_v must be positive");
  }
}

ImagePoint project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam) {
  if (!(p_cam.z() > kMinDepth)) {
    throw Error(ErrorCode::NonPositiveDepth, "point at z <= 1e-9 m cannot be projected");
  }
  return {k.alpha_u * p_cam.x() / p_cam.z() + k.u0, k.alpha_v * p_cam.y() / p_cam.z() + k.v0};
}

Matrix34d euclidean_projection_matrix(const CameraPose& c) {
  Matrix34d rt;
  rt.leftCols<3>() = c.extrinsics.rotation;
  rt.col(3) = c.extrinsics.translation;
  return c.intrinsics.matrix() * rt;
}

ImagePoint project_homogeneous(const Matrix34d& p, const Eigen::Vector4d& x) {
  const Eigen::Vector3d m = p * x;
  return {m.x() / m.z(), m.y() / m.z()};
}

bool is_visible(const SensorSize& sensor, const ImagePoint& p) {
  return std::isfinite(p.u) && std::isfinite(p.v) && p.u >= 0.0 && p.v >= 0.0 &&
         p.u <= sensor.width_px && p.v <= sensor.height_px;
}

ImagePoint add_pixel_noise(const ImagePoint& p, double sigma, Rng& rng) {
  if (sigma < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "pixel noise sigma must be >= 0");
  }
  if (sigma == 0.0) {
    return p;
  }
  std::normal_distribution<double> noise(0.0, sigma);
  const double du = noise(rng);
  const double dv = noise(rng);
  return {p.u + du, p.v + dv};
}

RigidTransform look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - position).normalized();
  const Eigen::Vector3d y = -(up - up.dot(z) * z).normalized();
  const Eigen::Vector3d x = y.cross(z);
  if (!z.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "look_at needs distinct target and an up vector off the optical axis");
  }
  RigidTransform world_to_camera;
  world_to_camera.rotation.row(0) = x.transpose();
  world_to_camera.rotation.row(1) = y.transpose();
  world_to_camera.rotation.row(2) = z.transpose();
  world_to_camera.translation = -(world_to_camera.rotation * position);
  return world_to_camera;
}

}  // namespace vsgrasp
