#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "vsgrasp/camera.hpp"
#include "vsgrasp/geometry.hpp"

namespace vsgrasp {

using Matrix26d = Eigen::Matrix<double, 2, 6>;

// Maps a camera-frame screw to the image velocity (du/dt, dv/dt) of one point.
struct InteractionMatrix {
  Matrix26d matrix = Matrix26d::Zero();
};

// Stacked 2n x 6 image Jacobian; rows 2j, 2j+1 belong to gripper point j.
struct ImageJacobian {
  Eigen::MatrixXd matrix;

  int point_count() const { return static_cast<int>(matrix.rows() / 2); }
  Matrix26d block(int j) const { return matrix.middleRows<2>(2 * j); }
  Eigen::VectorXd singular_values() const;
  int rank(double relative_tolerance = 1e-10) const;
};

// Image features (u1, v1, ..., un, vn) in pixels.
struct FeatureVector {
  Eigen::VectorXd coords;

  static FeatureVector from_points(std::span<const ImagePoint> points);
  int point_count() const { return static_cast<int>(coords.size() / 2); }
  ImagePoint point(int j) const { return {coords(2 * j), coords(2 * j + 1)}; }
  std::vector<ImagePoint> points() const;
};

struct ControlGains {
  double g = 1.0;            // convergence rate, 1/s
  Eigen::MatrixXd weight;    // 2n x 2n; empty means identity
  double damping = 0.0;      // added to J^T W J

  void validate(Eigen::Index rows) const;
};

InteractionMatrix interaction_matrix(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam);

Matrix26d point_jacobian(const InteractionMatrix& l, const ScrewTransform& theta);

ImageJacobian stack_jacobian(std::span<const Matrix26d> blocks);

/// g (J^T W J + damping I)^-1 J^T W (s* - s).
///
/// Throws SingularJacobian when the smallest singular value of the regularized
/// normal matrix falls below 1e-12, InvalidArgument on dimension mismatch or a
/// weight that is not symmetric positive semi-definite.
VelocityScrew control_screw(const ImageJacobian& j_hat, const ControlGains& gains,
                            const FeatureVector& s, const FeatureVector& s_star);

/// First-order pixel displacement du = alpha_u (dx / z - x dz / z^2) caused by a
/// 3-D displacement (dx, dz) of a point at camera coordinates p_cam.
double pixel_sensitivity(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam, double dx,
                         double dz);

}  // namespace vsgrasp
