#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "vsgrasp/camera.hpp"
#include "vsgrasp/control.hpp"
#include "vsgrasp/geometry.hpp"

namespace vsgrasp {

// Homogeneous quantities are stored canonically: unit norm, first component of
// non-negligible magnitude positive. Equality up to scale then reduces to plain
// (tolerance) equality.

struct ImageMatch {
  ImagePoint left;
  ImagePoint right;
};

// Rank 2, unit Frobenius norm; right^T F left = 0.
struct FundamentalMatrix {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

struct FundamentalEstimate {
  FundamentalMatrix f;
  double sampson_rms_px = 0.0;
  // max |m'^T F m| over the matches in Hartley-normalized coordinates.
  double max_normalized_residual = 0.0;
};

struct ProjectiveCameraPair {
  Matrix34d left;   // always [I | 0]
  Matrix34d right;  // [S(e') F | e'], unit Frobenius norm
};

struct ProjectivePoint {
  Eigen::Vector4d coords = Eigen::Vector4d::UnitW();

  static ProjectivePoint canonical(const Eigen::Vector4d& x);
};

struct ProjectiveHomography {
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Identity() / 2.0;

  static ProjectiveHomography canonical(const Eigen::Matrix4d& m);
  ProjectiveHomography inverse() const;
  ProjectivePoint apply(const ProjectivePoint& x) const;
};

ProjectiveHomography operator*(const ProjectiveHomography& a, const ProjectiveHomography& b);

struct ProjectivePointPair {
  ProjectivePoint source;
  ProjectivePoint target;
};

// Image data of one stereo setup: the projective camera pair plus the two
// images of every gripper point.
struct StereoSetup {
  ProjectiveCameraPair pair;
  std::vector<ImageMatch> gripper_images;
};

// Homogeneous images of one transferred gripper point in the runtime pair.
struct TransferredPoint {
  Eigen::Vector3d left;
  Eigen::Vector3d right;
};

enum class RigCamera { left, right };

/// Normalized 8-point estimate with rank-2 enforcement.
/// Throws InsufficientMatches below 8 matches, DegenerateConfiguration when the
/// design matrix has rank < 8.
FundamentalEstimate estimate_fundamental(std::span<const ImageMatch> matches);

/// Canonical fundamental matrix of two 3x4 cameras: F = S(e') P' P^+.
FundamentalMatrix fundamental_from_cameras(const Matrix34d& p_left, const Matrix34d& p_right);

/// e' with F^T e' = 0 (the epipole in the right image), unit norm.
Eigen::Vector3d right_epipole(const FundamentalMatrix& f);

ProjectiveCameraPair cameras_from_fundamental(const FundamentalMatrix& f);

/// Linear (DLT) two-view triangulation.
/// Throws IllConditionedTriangulation if the 4x4 design has rank < 3 or its
/// singular values are nearly all equal (ratio of smallest to largest > 0.99).
ProjectivePoint triangulate(const ProjectiveCameraPair& pair, const ImagePoint& m,
                            const ImagePoint& m_prime);

/// Homography sending the five points to e1, e2, e3, e4, (1,1,1,1).
/// Throws DegenerateBasis when some four of them are coplanar.
ProjectiveHomography basis_homography(std::span<const ProjectivePoint> basis);

/// target ~ H source. Exact for five generic pairs, algebraic least squares
/// (after isotropic conditioning) for more.
/// Throws InsufficientMatches (< 5), DegenerateBasis (sources do not span).
ProjectiveHomography estimate_homography_3d(std::span<const ProjectivePointPair> pairs);

/// Triangulate gripper points in setup x, map them with h_xy, reproject them
/// through the runtime pair.
std::vector<TransferredPoint> transfer_gripper_points(const StereoSetup& setup_x,
                                                      const ProjectiveHomography& h_xy,
                                                      const ProjectiveCameraPair& setup_y);

/// Dehomogenizes transferred points into a set-point; throws PointAtInfinity.
FeatureVector setpoint_from_transfer(std::span<const TransferredPoint> points, RigCamera which);
FeatureVector setpoint_from_homogeneous(std::span<const Eigen::Vector3d> points);

/// H ~ H_go D H_go^-1: the projective counterpart of the rigid motion d.
ProjectiveHomography euclidean_to_projective(const ProjectiveHomography& h_go,
                                             const RigidTransform& d);

/// Distance between two homogeneous vectors (or flattened matrices) after
/// unit normalization, minimized over sign.
double distance_up_to_scale(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double matrix_distance_up_to_scale(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace vsgrasp
