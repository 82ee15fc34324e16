#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vsgrasp/control.hpp"
#include "vsgrasp/geometry.hpp"
#include "vsgrasp/pose.hpp"
#include "vsgrasp/projective.hpp"
#include "vsgrasp/rng.hpp"
#include "vsgrasp/scenario.hpp"

namespace vsgrasp {

struct TraceRow {
  int step = 0;
  double time_s = 0.0;
  double error_px = 0.0;          // ||s* - s|| over every camera in use
  VelocityScrew screw;            // command issued at this step (zero once converged)
  RigidTransform displacement;    // gripper motion relative to its initial frame
  RigidTransform gripper_world;   // gripper -> world, ground truth
  double pose_rms_px = 0.0;       // mean over cameras; 0 when no pose is estimated
  int pose_iterations = 0;        // max over cameras
  double ms_pose = 0.0;
  double ms_jacobian = 0.0;
  double ms_control = 0.0;
};

struct ServoTrace {
  std::vector<TraceRow> rows;
};

enum class RunStatus { converged, not_converged, feature_lost, singular_jacobian, pose_failure };

std::string_view to_string(RunStatus status);

struct GraspResult {
  bool converged = false;
  RunStatus status = RunStatus::not_converged;
  double final_error_px = 0.0;
  double final_alignment_error_3d_m = 0.0;
  int steps = 0;
  std::string message;
};

// Goal features for each runtime camera in use, plus how far they are from the
// exact images of the ideally aligned gripper (zero unless transferred).
struct SetpointOutcome {
  std::vector<FeatureVector> set_points;
  std::vector<FeatureVector> ground_truth;
  std::vector<double> rms_error_px;
  double sampson_planning_px = 0.0;
  double sampson_runtime_px = 0.0;
};

// Everything held fixed for the duration of one servo run.
struct ServoContext {
  std::vector<CameraPose> cameras;
  std::vector<FeatureVector> set_points;
  std::vector<ScrewTransform> theta;             // per camera, from the step-0 pose estimate
  std::vector<ImageJacobian> frozen_jacobians;   // per camera, constant mode only
  RigidTransform gripper_initial_world;          // initial gripper frame -> world
  RigidTransform ideal_gripper_world;
  ControlGains gains;
};

struct ServoState {
  int step = 0;
  double time_s = 0.0;
  RigidTransform displacement;              // relative to the initial gripper frame
  std::vector<PoseEstimate> pose_estimates; // last estimate per camera, warm start
  Rng measurement_rng;
  Rng actuation_rng;
};

struct StepOutput {
  VelocityScrew screw;
  ServoState next;
  TraceRow row;
  bool converged = false;  // the error was already below the threshold; nothing was commanded
};

struct ServoRun {
  ServoTrace trace;
  GraspResult result;
  SetpointOutcome setpoints;
};

/// Ground-truth images of the gripper points seen by camera `c` with the
/// gripper at `gripper_world`. Throws FeatureLost when a point is behind the
/// camera or outside its sensor.
FeatureVector observe_gripper(const Scenario& scenario, const CameraPose& c,
                              const RigidTransform& gripper_world);

/// Set-points for the runtime cameras in use: exact goal images, or the
/// planning -> transfer pipeline when the scenario asks for it.
SetpointOutcome compute_setpoints(const Scenario& scenario);

/// Initial pose estimates, frozen screw transforms and (constant mode) the
/// Jacobian frozen at the goal configuration.
std::pair<ServoContext, ServoState> prepare_servo(const Scenario& scenario,
                                                  std::vector<FeatureVector> set_points);

/// One iteration of the control law: measure, rebuild or reuse the Jacobian,
/// compute the screw and integrate it over dt.
StepOutput servo_step(const Scenario& scenario, const ServoContext& ctx, const ServoState& state);

ServoRun run_servo(const Scenario& scenario, const std::vector<FeatureVector>& set_points);
ServoRun run_servo(const Scenario& scenario);
ServoRun run_two_camera_servo(const Scenario& scenario);
ServoRun run_grasp_pipeline(const Scenario& scenario);

/// RMS over gripper points of the distance between achieved and ideal positions.
double alignment_error(const Scenario& scenario, const RigidTransform& achieved,
                       const RigidTransform& ideal);

}  // namespace vsgrasp
