#pragma once

#include <Eigen/Core>

#include "vsgrasp/geometry.hpp"
#include "vsgrasp/rng.hpp"

namespace vsgrasp {

// Pin-hole parameters in pixels; no distortion.
struct CameraIntrinsics {
  double alpha_u = 1.0;
  double alpha_v = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  Eigen::Matrix3d matrix() const;
  void validate() const;  // throws InvalidArgument unless both focal terms are > 0
};

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;

  Eigen::Vector2d vector() const { return {u, v}; }
};

struct SensorSize {
  double width_px = 512.0;
  double height_px = 512.0;
};

struct CameraPose {
  RigidTransform extrinsics;  // world -> camera
  CameraIntrinsics intrinsics;
  SensorSize sensor;
};

/// u = alpha_u x / z + u0, v = alpha_v y / z + v0.
/// Throws NonPositiveDepth when z <= 1e-9 m.
ImagePoint project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam);

/// K [R | t] for the world -> camera extrinsics of `c`.
Matrix34d euclidean_projection_matrix(const CameraPose& c);

/// Applies a 3x4 projection to a homogeneous point and dehomogenizes.
ImagePoint project_homogeneous(const Matrix34d& p, const Eigen::Vector4d& x);

bool is_visible(const SensorSize& sensor, const ImagePoint& p);

/// Isotropic Gaussian perturbation drawn from `rng`; sigma = 0 returns `p`.
ImagePoint add_pixel_noise(const ImagePoint& p, double sigma, Rng& rng);

/// World -> camera extrinsics for a camera at `position` with optical axis
/// through `target`; `up` fixes the roll (image v axis points against it).
RigidTransform look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up);

}  // namespace vsgrasp
