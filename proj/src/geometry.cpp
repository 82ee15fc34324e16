#include "vsgrasp/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace vsgrasp {

namespace {

constexpr double kSeriesThreshold = 1e-12;
constexpr double kOrthogonalityDrift = 1e-9;

}  // namespace

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

RigidTransform RigidTransform::from_rotation_vector(const Eigen::Vector3d& rotvec_rad,
                                                    const Eigen::Vector3d& translation) {
  RigidTransform t;
  t.rotation = rotation_exp(rotvec_rad);
  t.translation = translation;
  return t;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

VelocityScrew VelocityScrew::from_vector(const Vector6d& v) {
  return {v.head<3>(), v.tail<3>()};
}

Vector6d VelocityScrew::vector() const {
  Vector6d v;
  v << linear, angular;
  return v;
}

VelocityScrew ScrewTransform::apply(const VelocityScrew& t) const {
  return VelocityScrew::from_vector(matrix * t.vector());
}

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

RigidTransform invert(const RigidTransform& t) {
  RigidTransform inv;
  inv.rotation = t.rotation.transpose();
  inv.translation = -(inv.rotation * t.translation);
  return inv;
}

Eigen::Vector3d transform_point(const RigidTransform& t, const Eigen::Vector3d& p) {
  return t.rotation * p + t.translation;
}

ScrewTransform screw_transform(const RigidTransform& d) {
  ScrewTransform theta;
  theta.matrix.setZero();
  theta.matrix.topLeftCorner<3, 3>() = d.rotation;
  theta.matrix.topRightCorner<3, 3>() = skew(d.translation) * d.rotation;
  theta.matrix.bottomRightCorner<3, 3>() = d.rotation;
  return theta;
}

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  const Eigen::Matrix3d k = skew(rotvec);
  if (angle < kSeriesThreshold) {
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double half = 0.5 * angle;
  const double a = std::sin(angle) / angle;
  const double b = 2.0 * std::sin(half) * std::sin(half) / (angle * angle);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

RigidTransform screw_exp(const VelocityScrew& t, double dt) {
  const Eigen::Vector3d phi = t.angular * dt;
  const Eigen::Vector3d rho = t.linear * dt;
  const double angle = phi.norm();
  const Eigen::Matrix3d k = skew(phi);

  // Left Jacobian of SO(3): couples the translation to the rotation.
  Eigen::Matrix3d coupling;
  if (angle < kSeriesThreshold) {
    coupling = Eigen::Matrix3d::Identity() + 0.5 * k + k * k / 6.0;
  } else {
    const double half = 0.5 * angle;
    const double b = 2.0 * std::sin(half) * std::sin(half) / (angle * angle);
    const double c = angle < 1e-3
                         ? 1.0 / 6.0 - angle * angle / 120.0
                         : (angle - std::sin(angle)) / (angle * angle * angle);
    coupling = Eigen::Matrix3d::Identity() + b * k + c * k * k;
  }

  RigidTransform out;
  out.rotation = rotation_exp(phi);
  out.translation = coupling * rho;
  return out;
}

RigidTransform integrate_screw(const RigidTransform& pose, const VelocityScrew& t, double dt) {
  RigidTransform next = compose(screw_exp(t, dt), pose);
  if (orthogonality_error(next.rotation) > kOrthogonalityDrift) {
    next.rotation = nearest_rotation(next.rotation);
  }
  return next;
}

double orthogonality_error(const Eigen::Matrix3d& r) {
  return (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace vsgrasp
