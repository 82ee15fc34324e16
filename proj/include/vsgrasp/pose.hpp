#pragma once

#include <span>

#include <Eigen/Core>

#include "vsgrasp/camera.hpp"
#include "vsgrasp/geometry.hpp"

namespace vsgrasp {

struct PointCorrespondence2D3D {
  ImagePoint image;
  Eigen::Vector3d model;  // gripper-frame coordinates, meters
};

struct PoseEstimate {
  RigidTransform pose;            // gripper -> camera
  double rms_reprojection = 0.0;  // sqrt(mean squared point distance), pixels
  int iterations = 0;
  bool converged = false;
};

/// Gauss-Newton minimization of the reprojection error over the rigid pose,
/// with rotation increments composed through the exponential map and a
/// halving line search (at most 20 halvings) that never accepts an increase.
///
/// Stops when the step norm drops below 1e-10 or the rms changes by less than
/// `tol_px`. Throws BehindCamera if `init` (or every backtracked trial of a
/// step) puts a model point at z <= 0, DivergedPose if no trial reduces the
/// error while the linear model still predicts progress.
PoseEstimate estimate_pose(std::span<const PointCorrespondence2D3D> matches,
                           const CameraIntrinsics& k, const RigidTransform& init,
                           double tol_px = 1e-9, int max_iter = 50);

/// Seed for the next frame: the previous frame's pose.
RigidTransform pose_warm_start(const PoseEstimate& previous);

double reprojection_rms(std::span<const PointCorrespondence2D3D> matches,
                        const CameraIntrinsics& k, const RigidTransform& pose);

}  // namespace vsgrasp
