#include "vsgrasp/pose.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

namespace {

constexpr double kMinDepth = 1e-9;
constexpr double kStepTolerance = 1e-10;
constexpr int kMaxHalvings = 20;

// Sum of squared residuals, or nullopt when some point is not in front of the camera.
std::optional<double> cost_at(std::span<const PointCorrespondence2D3D> matches,
                              const CameraIntrinsics& k, const RigidTransform& pose) {
  double cost = 0.0;
  for (const auto& m : matches) {
    const Eigen::Vector3d p = transform_point(pose, m.model);
    if (!(p.z() > kMinDepth)) {
      return std::nullopt;
    }
    const double du = k.alpha_u * p.x() / p.z() + k.u0 - m.image.u;
    const double dv = k.alpha_v * p.y() / p.z() + k.v0 - m.image.v;
    cost += du * du + dv * dv;
  }
  return cost;
}

double rms_from_cost(double cost, std::size_t n) {
  return std::sqrt(cost / static_cast<double>(n));
}

RigidTransform perturb(const RigidTransform& pose, const Vector6d& delta) {
  return compose(screw_exp(VelocityScrew::from_vector(delta), 1.0), pose);
}

}  // namespace

double reprojection_rms(std::span<const PointCorrespondence2D3D> matches,
                        const CameraIntrinsics& k, const RigidTransform& pose) {
  const auto cost = cost_at(matches, k, pose);
  if (!cost) {
    throw Error(ErrorCode::BehindCamera, "a model point lies behind the camera");
  }
  return rms_from_cost(*cost, matches.size());
}

PoseEstimate estimate_pose(std::span<const PointCorrespondence2D3D> matches,
                           const CameraIntrinsics& k, const RigidTransform& init,
                           double tol_px, int max_iter) {
  if (matches.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "pose estimation needs at least 4 matches");
  }
  k.validate();

  PoseEstimate est;
  est.pose = init;
  const auto initial_cost = cost_at(matches, k, init);
  if (!initial_cost) {
    throw Error(ErrorCode::BehindCamera, "initial pose puts a model point at z <= 0");
  }
  double cost = *initial_cost;
  est.rms_reprojection = rms_from_cost(cost, matches.size());

  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(matches.size());
  Eigen::MatrixXd jac(rows, 6);
  Eigen::VectorXd res(rows);

  for (int iter = 1; iter <= max_iter; ++iter) {
    est.iterations = iter;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const Eigen::Vector3d p = transform_point(est.pose, matches[i].model);
      const double iz = 1.0 / p.z();
      const Eigen::Index r = 2 * static_cast<Eigen::Index>(i);
      res(r) = k.alpha_u * p.x() * iz + k.u0 - matches[i].image.u;
      res(r + 1) = k.alpha_v * p.y() * iz + k.v0 - matches[i].image.v;

      Eigen::Matrix<double, 2, 3> d_proj;
      d_proj << k.alpha_u * iz, 0.0, -k.alpha_u * p.x() * iz * iz,
                0.0, k.alpha_v * iz, -k.alpha_v * p.y() * iz * iz;
      // Left increment: p -> p + v + w x p.
      jac.block<2, 3>(r, 0) = d_proj;
      jac.block<2, 3>(r, 3) = -d_proj * skew(p);
    }

    const Matrix6d normal = jac.transpose() * jac;
    const Vector6d gradient = jac.transpose() * res;
    const Vector6d step = normal.ldlt().solve(-gradient);
    if (!step.allFinite()) {
      throw Error(ErrorCode::DivergedPose, "normal equations are singular (degenerate model points)");
    }
    if (step.norm() < kStepTolerance) {
      est.converged = true;
      break;
    }

    // Reduction predicted by the linearized model for the full step.
    const double predicted = -gradient.dot(step);
    double alpha = 1.0;
    bool accepted = false;
    bool saw_behind = false;
    RigidTransform trial;
    double trial_cost = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h, alpha *= 0.5) {
      trial = perturb(est.pose, alpha * step);
      const auto c = cost_at(matches, k, trial);
      if (!c) {
        saw_behind = true;
        continue;
      }
      if (*c < cost) {
        trial_cost = *c;
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      // At the floating-point floor of the cost no trial can decrease it.
      if (predicted <= 1e-12 * cost + 1e-24) {
        est.converged = true;
        break;
      }
      if (saw_behind) {
        throw Error(ErrorCode::BehindCamera, "every backtracked step puts a point at z <= 0");
      }
      throw Error(ErrorCode::DivergedPose, "line search failed to reduce the reprojection error");
    }

    const double previous_rms = est.rms_reprojection;
    est.pose = trial;
    cost = trial_cost;
    est.rms_reprojection = rms_from_cost(cost, matches.size());
    if ((alpha * step).norm() < kStepTolerance ||
        std::abs(previous_rms - est.rms_reprojection) < tol_px) {
      est.converged = true;
      break;
    }
  }
  return est;
}

RigidTransform pose_warm_start(const PoseEstimate& previous) { return previous.pose; }

}  // namespace vsgrasp
