#include "vsgrasp/control.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

namespace {

constexpr double kMinDepth = 1e-9;
constexpr double kSingularThreshold = 1e-12;

}  // namespace

Eigen::VectorXd ImageJacobian::singular_values() const {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(matrix).singularValues();
}

int ImageJacobian::rank(double relative_tolerance) const {
  const Eigen::VectorXd sv = singular_values();
  if (sv.size() == 0 || sv(0) == 0.0) {
    return 0;
  }
  return static_cast<int>((sv.array() > relative_tolerance * sv(0)).count());
}

FeatureVector FeatureVector::from_points(std::span<const ImagePoint> points) {
  FeatureVector s;
  s.coords.resize(2 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    s.coords(2 * j) = points[j].u;
    s.coords(2 * j + 1) = points[j].v;
  }
  return s;
}

std::vector<ImagePoint> FeatureVector::points() const {
  std::vector<ImagePoint> out;
  out.reserve(point_count());
  for (int j = 0; j < point_count(); ++j) {
    out.push_back(point(j));
  }
  return out;
}

void ControlGains::validate(Eigen::Index rows) const {
  if (!(g > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gain g must be positive");
  }
  if (!(damping >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must be >= 0");
  }
  if (weight.size() == 0) {
    return;
  }
  if (weight.rows() != rows || weight.cols() != rows) {
    throw Error(ErrorCode::InvalidArgument,
                "weight must be " + std::to_string(rows) + "x" + std::to_string(rows));
  }
  if ((weight - weight.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "weight must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weight, Eigen::EigenvaluesOnly);
  const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, largest)) {
    throw Error(ErrorCode::InvalidArgument, "weight must be positive semi-definite");
  }
}

InteractionMatrix interaction_matrix(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam) {
  const double x = p_cam.x();
  const double y = p_cam.y();
  const double z = p_cam.z();
  if (!(z > kMinDepth)) {
    throw Error(ErrorCode::NonPositiveDepth, "interaction matrix needs z > 0");
  }
  const double z2 = z * z;
  Matrix26d normalized;
  normalized << 1.0 / z, 0.0, -x / z2, -x * y / z2, 1.0 + x * x / z2, -y / z,
                0.0, 1.0 / z, -y / z2, -1.0 - y * y / z2, x * y / z2, x / z;
  InteractionMatrix l;
  l.matrix.row(0) = k.alpha_u * normalized.row(0);
  l.matrix.row(1) = k.alpha_v * normalized.row(1);
  return l;
}

Matrix26d point_jacobian(const InteractionMatrix& l, const ScrewTransform& theta) {
  return l.matrix * theta.matrix;
}

ImageJacobian stack_jacobian(std::span<const Matrix26d> blocks) {
  if (blocks.empty()) {
    throw Error(ErrorCode::InvalidArgument, "stack_jacobian needs at least one block");
  }
  ImageJacobian j;
  j.matrix.resize(2 * static_cast<Eigen::Index>(blocks.size()), 6);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    j.matrix.middleRows<2>(2 * static_cast<Eigen::Index>(i)) = blocks[i];
  }
  return j;
}

VelocityScrew control_screw(const ImageJacobian& j_hat, const ControlGains& gains,
                            const FeatureVector& s, const FeatureVector& s_star) {
  const Eigen::Index rows = j_hat.matrix.rows();
  if (j_hat.matrix.cols() != 6 || s.coords.size() != rows || s_star.coords.size() != rows) {
    throw Error(ErrorCode::InvalidArgument, "Jacobian rows and feature lengths disagree");
  }
  gains.validate(rows);

  const Eigen::VectorXd error = s_star.coords - s.coords;
  Matrix6d normal;
  Vector6d rhs;
  if (gains.weight.size() == 0) {
    normal = j_hat.matrix.transpose() * j_hat.matrix;
    rhs = j_hat.matrix.transpose() * error;
  } else {
    const Eigen::MatrixXd jt_w = j_hat.matrix.transpose() * gains.weight;
    normal = jt_w * j_hat.matrix;
    rhs = jt_w * error;
  }
  normal.diagonal().array() += gains.damping;

  const Eigen::JacobiSVD<Matrix6d> svd(normal, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(5) < kSingularThreshold) {
    throw Error(ErrorCode::SingularJacobian,
                "J^T W J is rank deficient (degenerate gripper point configuration)");
  }
  const Vector6d screw = gains.g * svd.solve(rhs);
  return VelocityScrew::from_vector(screw);
}

double pixel_sensitivity(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam, double dx,
                         double dz) {
  const double z = p_cam.z();
  if (!(z > kMinDepth)) {
    throw Error(ErrorCode::NonPositiveDepth, "pixel sensitivity needs z > 0");
  }
  return k.alpha_u * (dx / z - p_cam.x() * dz / (z * z));
}

}  // namespace vsgrasp
