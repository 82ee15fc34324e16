#include "vsgrasp/servo_sim.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kPoseTolerancePx = 1e-10;
constexpr int kPoseMaxIterations = 50;

double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

std::vector<CameraPose> servo_cameras(const Scenario& s) {
  std::vector<CameraPose> cams;
  for (int c = 0; c < s.cameras_used; ++c) {
    cams.push_back(s.runtime_rig[static_cast<std::size_t>(c)].pose());
  }
  return cams;
}

// Images of world points with optional noise; no sensor-bounds check.
std::vector<ImagePoint> image_points(const CameraPose& cam, const std::vector<Eigen::Vector3d>& world,
                                     double sigma, Rng& rng) {
  std::vector<ImagePoint> out;
  out.reserve(world.size());
  for (const auto& p : world) {
    out.push_back(add_pixel_noise(project(cam.intrinsics, transform_point(cam.extrinsics, p)), sigma, rng));
  }
  return out;
}

std::vector<Eigen::Vector3d> gripper_in_world(const Scenario& s, const RigidTransform& gripper_world) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& b : s.gripper_points_m) {
    out.push_back(transform_point(gripper_world, b));
  }
  return out;
}

std::vector<ImageMatch> zip(const std::vector<ImagePoint>& left, const std::vector<ImagePoint>& right) {
  std::vector<ImageMatch> out;
  for (std::size_t i = 0; i < left.size(); ++i) {
    out.push_back({left[i], right[i]});
  }
  return out;
}

std::vector<PointCorrespondence2D3D> correspondences(const Scenario& s, const FeatureVector& f) {
  std::vector<PointCorrespondence2D3D> out;
  for (int j = 0; j < f.point_count(); ++j) {
    out.push_back({f.point(j), s.gripper_points_m[static_cast<std::size_t>(j)]});
  }
  return out;
}

ImageJacobian jacobian_at(const Scenario& s, const CameraIntrinsics& k, const RigidTransform& gripper_to_camera,
                          const ScrewTransform& theta) {
  std::vector<Matrix26d> blocks;
  blocks.reserve(s.gripper_points_m.size());
  for (const auto& b : s.gripper_points_m) {
    blocks.push_back(point_jacobian(interaction_matrix(k, transform_point(gripper_to_camera, b)), theta));
  }
  return stack_jacobian(blocks);
}

RigidTransform perturbed(const RigidTransform& truth, const PosePerturbation& p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d axis(normal(rng), normal(rng), normal(rng));
  Eigen::Vector3d dir(normal(rng), normal(rng), normal(rng));
  axis.normalize();
  dir.normalize();
  const RigidTransform delta = RigidTransform::from_rotation_vector(
      axis * p.rotation_deg * M_PI / 180.0, dir * p.translation_m);
  return compose(delta, truth);
}

Eigen::VectorXd stack(const std::vector<FeatureVector>& fs) {
  Eigen::Index rows = 0;
  for (const auto& f : fs) {
    rows += f.coords.size();
  }
  Eigen::VectorXd out(rows);
  Eigen::Index at = 0;
  for (const auto& f : fs) {
    out.segment(at, f.coords.size()) = f.coords;
    at += f.coords.size();
  }
  return out;
}

RunStatus status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FeatureLost: return RunStatus::feature_lost;
    case ErrorCode::SingularJacobian: return RunStatus::singular_jacobian;
    default: return RunStatus::pose_failure;
  }
}

}  // namespace

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::not_converged: return "not_converged";
    case RunStatus::feature_lost: return "feature_lost";
    case RunStatus::singular_jacobian: return "singular_jacobian";
    case RunStatus::pose_failure: return "pose_failure";
  }
  return "unknown";
}

FeatureVector observe_gripper(const Scenario& scenario, const CameraPose& c,
                              const RigidTransform& gripper_world) {
  std::vector<ImagePoint> pts;
  pts.reserve(scenario.gripper_points_m.size());
  for (const auto& b : scenario.gripper_points_m) {
    const Eigen::Vector3d p = transform_point(c.extrinsics, transform_point(gripper_world, b));
    if (!(p.z() > 1e-9)) {
      throw Error(ErrorCode::FeatureLost, "a gripper point went behind the camera");
    }
    const ImagePoint m = project(c.intrinsics, p);
    if (!is_visible(c.sensor, m)) {
      throw Error(ErrorCode::FeatureLost, "a gripper point left the sensor");
    }
    pts.push_back(m);
  }
  return FeatureVector::from_points(pts);
}

SetpointOutcome compute_setpoints(const Scenario& s) {
  s.validate();
  const std::vector<CameraPose> cams = servo_cameras(s);
  const std::vector<Eigen::Vector3d> ideal_points = gripper_in_world(s, s.ideal_gripper_pose());

  SetpointOutcome out;
  for (const auto& cam : cams) {
    Rng unused(0);
    out.ground_truth.push_back(FeatureVector::from_points(image_points(cam, ideal_points, 0.0, unused)));
  }

  if (s.setpoint_source == SetpointSource::goal_pose) {
    out.set_points = out.ground_truth;
    out.rms_error_px.assign(cams.size(), 0.0);
    return out;
  }

  // Planning: the rig sees the object with the gripper aligned on it.
  std::vector<Eigen::Vector3d> planning_world = s.object_points_m;
  const std::vector<Eigen::Vector3d> aligned_gripper = gripper_in_world(s, s.goal_gripper_pose.transform());
  planning_world.insert(planning_world.end(), aligned_gripper.begin(), aligned_gripper.end());
  planning_world.insert(planning_world.end(), s.scene_points_m.begin(), s.scene_points_m.end());

  const CameraPose px = s.planning_rig[0].pose();
  const CameraPose px_prime = s.planning_rig[1].pose();
  Rng rng_x = make_stream(s.seed, "planning/0");
  Rng rng_x_prime = make_stream(s.seed, "planning/1");
  const auto planning_matches = zip(image_points(px, planning_world, s.noise_px, rng_x),
                                    image_points(px_prime, planning_world, s.noise_px, rng_x_prime));
  const FundamentalEstimate f_x = estimate_fundamental(planning_matches);
  out.sampson_planning_px = f_x.sampson_rms_px;

  StereoSetup setup_x;
  setup_x.pair = cameras_from_fundamental(f_x.f);
  const std::size_t n_object = s.object_points_m.size();
  const std::size_t n_gripper = s.gripper_points_m.size();
  setup_x.gripper_images.assign(planning_matches.begin() + static_cast<std::ptrdiff_t>(n_object),
                                planning_matches.begin() + static_cast<std::ptrdiff_t>(n_object + n_gripper));

  // Runtime: the object has moved; the gripper waits at its initial pose.
  std::vector<Eigen::Vector3d> runtime_world;
  const RigidTransform motion = s.object_motion.transform();
  for (const auto& a : s.object_points_m) {
    runtime_world.push_back(transform_point(motion, a));
  }
  const std::vector<Eigen::Vector3d> initial_gripper = gripper_in_world(s, s.initial_gripper_pose.transform());
  runtime_world.insert(runtime_world.end(), initial_gripper.begin(), initial_gripper.end());
  runtime_world.insert(runtime_world.end(), s.scene_points_m.begin(), s.scene_points_m.end());

  const CameraPose py = s.runtime_rig[0].pose();
  const CameraPose py_prime = s.runtime_rig[1].pose();
  Rng rng_y = make_stream(s.seed, "runtime/0");
  Rng rng_y_prime = make_stream(s.seed, "runtime/1");
  const auto runtime_matches = zip(image_points(py, runtime_world, s.noise_px, rng_y),
                                   image_points(py_prime, runtime_world, s.noise_px, rng_y_prime));
  const FundamentalEstimate f_y = estimate_fundamental(runtime_matches);
  out.sampson_runtime_px = f_y.sampson_rms_px;
  const ProjectiveCameraPair pair_y = cameras_from_fundamental(f_y.f);

  std::vector<ProjectivePoint> object_x;
  std::vector<ProjectivePoint> object_y;
  for (std::size_t i = 0; i < n_object; ++i) {
    object_x.push_back(triangulate(setup_x.pair, planning_matches[i].left, planning_matches[i].right));
    object_y.push_back(triangulate(pair_y, runtime_matches[i].left, runtime_matches[i].right));
  }

  ProjectiveHomography h_xy;
  if (s.transfer_route == TransferRoute::direct) {
    std::vector<ProjectivePointPair> pairs;
    for (std::size_t i = 0; i < n_object; ++i) {
      pairs.push_back({object_x[i], object_y[i]});
    }
    h_xy = estimate_homography_3d(pairs);
  } else {
    std::vector<ProjectivePoint> basis_x;
    std::vector<ProjectivePoint> basis_y;
    for (const int i : s.basis_indices) {
      basis_x.push_back(object_x[static_cast<std::size_t>(i)]);
      basis_y.push_back(object_y[static_cast<std::size_t>(i)]);
    }
    h_xy = basis_homography(basis_y).inverse() * basis_homography(basis_x);
  }

  const std::vector<TransferredPoint> transferred = transfer_gripper_points(setup_x, h_xy, pair_y);
  out.set_points.push_back(setpoint_from_transfer(transferred, RigCamera::left));
  if (s.cameras_used == 2) {
    out.set_points.push_back(setpoint_from_transfer(transferred, RigCamera::right));
  }
  for (std::size_t c = 0; c < out.set_points.size(); ++c) {
    const double sq = (out.set_points[c].coords - out.ground_truth[c].coords).squaredNorm();
    out.rms_error_px.push_back(std::sqrt(sq / static_cast<double>(n_gripper)));
  }
  return out;
}

std::pair<ServoContext, ServoState> prepare_servo(const Scenario& s,
                                                  std::vector<FeatureVector> set_points) {
  s.validate();
  ServoContext ctx;
  ctx.cameras = servo_cameras(s);
  if (set_points.size() != ctx.cameras.size()) {
    throw Error(ErrorCode::InvalidArgument, "one set-point per servo camera is required");
  }
  for (const auto& sp : set_points) {
    if (sp.point_count() != static_cast<int>(s.gripper_points_m.size())) {
      throw Error(ErrorCode::InvalidArgument, "set-point size does not match the gripper points");
    }
  }
  ctx.set_points = std::move(set_points);
  ctx.gripper_initial_world = s.initial_gripper_pose.transform();
  ctx.ideal_gripper_world = s.ideal_gripper_pose();
  ctx.gains = s.gains(2 * static_cast<Eigen::Index>(s.gripper_points_m.size()) * s.cameras_used);

  ServoState state;
  state.measurement_rng = make_stream(s.seed, "servo/measurement");
  state.actuation_rng = make_stream(s.seed, "servo/actuation");
  Rng init_rng = make_stream(s.seed, "servo/pose_init");
  Rng initial_noise = make_stream(s.seed, "servo/initial_image");

  for (const auto& cam : ctx.cameras) {
    FeatureVector s0 = observe_gripper(s, cam, ctx.gripper_initial_world);
    std::vector<ImagePoint> noisy;
    for (const auto& p : s0.points()) {
      noisy.push_back(add_pixel_noise(p, s.servo_noise_px, initial_noise));
    }
    const RigidTransform truth = compose(cam.extrinsics, ctx.gripper_initial_world);
    const auto matches = correspondences(s, FeatureVector::from_points(noisy));
    const PoseEstimate initial = estimate_pose(matches, cam.intrinsics,
                                               perturbed(truth, s.pose_init_perturbation, init_rng),
                                               kPoseTolerancePx, kPoseMaxIterations);
    state.pose_estimates.push_back(initial);
    ctx.theta.push_back(screw_transform(initial.pose));
  }

  if (s.jacobian_mode == JacobianMode::constant) {
    for (std::size_t c = 0; c < ctx.cameras.size(); ++c) {
      const PoseEstimate goal =
          estimate_pose(correspondences(s, ctx.set_points[c]), ctx.cameras[c].intrinsics,
                        state.pose_estimates[c].pose, kPoseTolerancePx, kPoseMaxIterations);
      ctx.frozen_jacobians.push_back(jacobian_at(s, ctx.cameras[c].intrinsics, goal.pose, ctx.theta[c]));
    }
  }
  return {std::move(ctx), std::move(state)};
}

StepOutput servo_step(const Scenario& s, const ServoContext& ctx, const ServoState& state) {
  StepOutput out;
  out.next = state;
  TraceRow& row = out.row;
  row.step = state.step;
  row.time_s = state.time_s;
  row.displacement = state.displacement;
  row.gripper_world = compose(ctx.gripper_initial_world, state.displacement);

  std::vector<FeatureVector> measured;
  for (const auto& cam : ctx.cameras) {
    FeatureVector f = observe_gripper(s, cam, row.gripper_world);
    if (s.servo_noise_px > 0.0) {
      for (Eigen::Index i = 0; i < f.coords.size(); i += 2) {
        const ImagePoint p = add_pixel_noise({f.coords(i), f.coords(i + 1)}, s.servo_noise_px,
                                             out.next.measurement_rng);
        f.coords(i) = p.u;
        f.coords(i + 1) = p.v;
      }
    }
    measured.push_back(std::move(f));
  }
  const FeatureVector current{stack(measured)};
  const FeatureVector goal{stack(ctx.set_points)};
  row.error_px = (goal.coords - current.coords).norm();
  if (row.error_px < s.convergence_eps_px) {
    out.converged = true;
    return out;
  }

  const auto t0 = Clock::now();
  std::vector<ImageJacobian> per_camera;
  if (s.jacobian_mode == JacobianMode::variable) {
    std::vector<RigidTransform> current_pose;
    double rms = 0.0;
    for (std::size_t c = 0; c < ctx.cameras.size(); ++c) {
      const PoseEstimate est =
          estimate_pose(correspondences(s, measured[c]), ctx.cameras[c].intrinsics,
                        pose_warm_start(state.pose_estimates[c]), kPoseTolerancePx, kPoseMaxIterations);
      out.next.pose_estimates[c] = est;
      current_pose.push_back(est.pose);
      rms += est.rms_reprojection;
      row.pose_iterations = std::max(row.pose_iterations, est.iterations);
    }
    row.pose_rms_px = rms / static_cast<double>(ctx.cameras.size());
    const auto t1 = Clock::now();
    for (std::size_t c = 0; c < ctx.cameras.size(); ++c) {
      per_camera.push_back(jacobian_at(s, ctx.cameras[c].intrinsics, current_pose[c], ctx.theta[c]));
    }
    row.ms_pose = elapsed_ms(t0, t1);
    row.ms_jacobian = elapsed_ms(t1, Clock::now());
  } else {
    per_camera = ctx.frozen_jacobians;
    row.ms_jacobian = elapsed_ms(t0, Clock::now());
  }

  const auto t2 = Clock::now();
  ImageJacobian j_hat;
  j_hat.matrix.resize(current.coords.size(), 6);
  Eigen::Index at = 0;
  for (const auto& j : per_camera) {
    j_hat.matrix.middleRows(at, j.matrix.rows()) = j.matrix;
    at += j.matrix.rows();
  }
  out.screw = control_screw(j_hat, ctx.gains, current, goal);
  row.ms_control = elapsed_ms(t2, Clock::now());
  row.screw = out.screw;

  VelocityScrew executed = out.screw;
  if (s.actuation_noise_rel > 0.0) {
    std::normal_distribution<double> noise(0.0, s.actuation_noise_rel);
    Vector6d v = executed.vector();
    for (int i = 0; i < 6; ++i) {
      v(i) *= 1.0 + noise(out.next.actuation_rng);
    }
    executed = VelocityScrew::from_vector(v);
  }
  out.next.displacement = integrate_screw(state.displacement, executed, s.dt_s);
  out.next.step = state.step + 1;
  out.next.time_s = static_cast<double>(out.next.step) * s.dt_s;
  return out;
}

double alignment_error(const Scenario& s, const RigidTransform& achieved, const RigidTransform& ideal) {
  double sq = 0.0;
  for (const auto& b : s.gripper_points_m) {
    sq += (transform_point(achieved, b) - transform_point(ideal, b)).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(s.gripper_points_m.size()));
}

ServoRun run_servo(const Scenario& s, const std::vector<FeatureVector>& set_points) {
  ServoRun run;
  GraspResult& result = run.result;
  const RigidTransform ideal = s.ideal_gripper_pose();
  RigidTransform last_pose = s.initial_gripper_pose.transform();

  try {
    auto [ctx, state] = prepare_servo(s, set_points);
    for (;;) {
      StepOutput out = servo_step(s, ctx, state);
      last_pose = out.row.gripper_world;
      if (out.converged) {
        run.trace.rows.push_back(out.row);
        result.converged = true;
        result.status = RunStatus::converged;
        break;
      }
      if (state.step >= s.max_steps) {
        // Budget exhausted: keep the final measurement, drop the unexecuted command.
        out.row.screw = VelocityScrew{};
        run.trace.rows.push_back(out.row);
        result.status = RunStatus::not_converged;
        break;
      }
      run.trace.rows.push_back(out.row);
      state = std::move(out.next);
    }
  } catch (const Error& e) {
    result.converged = false;
    result.status = status_for(e.code());
    result.message = e.what();
  }

  if (!run.trace.rows.empty()) {
    const TraceRow& last = run.trace.rows.back();
    result.final_error_px = last.error_px;
    result.steps = last.step;
    last_pose = last.gripper_world;
  }
  result.final_alignment_error_3d_m = alignment_error(s, last_pose, ideal);
  return run;
}

ServoRun run_servo(const Scenario& s) {
  SetpointOutcome setpoints = compute_setpoints(s);
  ServoRun run = run_servo(s, setpoints.set_points);
  run.setpoints = std::move(setpoints);
  return run;
}

ServoRun run_two_camera_servo(const Scenario& s) {
  Scenario two = s;
  two.cameras_used = 2;
  return run_servo(two);
}

ServoRun run_grasp_pipeline(const Scenario& s) {
  Scenario grasp = s;
  grasp.setpoint_source = SetpointSource::transfer;
  return run_servo(grasp);
}

}  // namespace vsgrasp
