#pragma once

#include <Eigen/Core>

namespace vsgrasp {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix34d = Eigen::Matrix<double, 3, 4>;

// Rigid displacement x -> rotation * x + translation.
//
// A transform named "a_to_b" maps coordinates expressed in frame a to
// coordinates expressed in frame b. The gripper-to-camera transform used by the
// image Jacobian therefore maps gripper-frame points into the camera frame.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);
  static RigidTransform from_rotation_vector(const Eigen::Vector3d& rotvec_rad,
                                             const Eigen::Vector3d& translation);

  Eigen::Matrix4d matrix() const;
};

// Velocity screw {V(O), Omega}: linear velocity of the point coinciding with
// the reference origin, then angular velocity, both expressed in the reference
// frame.
struct VelocityScrew {
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();

  static VelocityScrew from_vector(const Vector6d& v);
  Vector6d vector() const;
};

// 6x6 operator re-expressing a screw in another frame.
struct ScrewTransform {
  Matrix6d matrix = Matrix6d::Identity();

  VelocityScrew apply(const VelocityScrew& t) const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& a);

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);  // a after b
RigidTransform invert(const RigidTransform& t);
Eigen::Vector3d transform_point(const RigidTransform& t, const Eigen::Vector3d& p);

/// Change-of-frame operator for screws induced by `d`.
///
/// With `d` mapping frame-g coordinates into frame-c coordinates, a screw T_g
/// expressed in g becomes T_c = screw_transform(d) * T_g expressed in c, and the
/// corresponding finite motions are conjugated: D_c = d * D_g * d^-1.
/// The block layout is [[R, S(t) R], [0, R]], which equals [[R, R S(R^T t)], [0, R]].
ScrewTransform screw_transform(const RigidTransform& d);

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& rotvec);
Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r);

/// Closed-form exponential of a constant screw applied for `dt` seconds.
RigidTransform screw_exp(const VelocityScrew& t, double dt);

/// Advances a displacement measured in the reference frame of the screw:
/// returns screw_exp(t, dt) * pose, re-orthonormalized when drift exceeds 1e-9.
RigidTransform integrate_screw(const RigidTransform& pose, const VelocityScrew& t, double dt);

double orthogonality_error(const Eigen::Matrix3d& r);
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

}  // namespace vsgrasp
