#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "vsgrasp/camera.hpp"
#include "vsgrasp/control.hpp"
#include "vsgrasp/geometry.hpp"

namespace vsgrasp {

enum class JacobianMode { constant, variable };
enum class SetpointSource { goal_pose, transfer };
enum class TransferRoute { direct, basis };

// Rotation vector (axis * angle, degrees) and translation (meters).
struct PoseSpec {
  Eigen::Vector3d rotvec_deg = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation_m = Eigen::Vector3d::Zero();

  RigidTransform transform() const;
};

// Extrinsics are given either as a look-at placement or as an explicit
// world -> camera pose; the raw form is kept so the config echo reproduces it.
struct CameraSpec {
  CameraIntrinsics intrinsics;
  SensorSize sensor;
  bool use_look_at = true;
  Eigen::Vector3d position_m = Eigen::Vector3d::Zero();
  Eigen::Vector3d look_at_m = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d up = -Eigen::Vector3d::UnitY();
  PoseSpec world_to_camera;

  CameraPose pose() const;
};

struct PosePerturbation {
  double rotation_deg = 5.0;
  double translation_m = 0.05;
};

struct Scenario {
  std::string name = "unnamed";

  std::vector<Eigen::Vector3d> gripper_points_m;  // gripper frame
  std::vector<Eigen::Vector3d> object_points_m;   // world frame, planning position
  std::vector<Eigen::Vector3d> scene_points_m;    // static world points, epipolar geometry only
  std::array<int, 5> basis_indices{0, 1, 2, 3, 4};

  std::vector<CameraSpec> planning_rig;  // two cameras when the set-point is transferred
  std::vector<CameraSpec> runtime_rig;   // camera 0 always servos; camera 1 in two-camera mode

  PoseSpec initial_gripper_pose;  // gripper -> world at the start of servoing
  PoseSpec goal_gripper_pose;     // gripper -> world, aligned with the object at planning time
  PoseSpec object_motion;         // world-frame motion of the object between planning and runtime

  SetpointSource setpoint_source = SetpointSource::goal_pose;
  TransferRoute transfer_route = TransferRoute::direct;

  double gain_per_s = 1.0;
  double damping = 0.0;
  std::vector<double> weight_diag;  // empty: identity

  JacobianMode jacobian_mode = JacobianMode::variable;
  int cameras_used = 1;

  double noise_px = 0.0;             // image noise of the planning and transfer stages
  double servo_noise_px = 0.0;       // noise on the feedback features
  double actuation_noise_rel = 0.0;  // multiplicative screw perturbation
  PosePerturbation pose_init_perturbation;

  double dt_s = 0.1;
  int max_steps = 600;
  double convergence_eps_px = 0.1;
  std::uint64_t seed = 1;

  /// Gripper pose the servo must reach: object_motion * goal_gripper_pose.
  RigidTransform ideal_gripper_pose() const;

  /// Weight for `rows` stacked feature rows; the diagonal is tiled across cameras.
  ControlGains gains(Eigen::Index rows) const;

  /// Throws Error(ScenarioInvalid) naming the offending field.
  void validate() const;
};

std::string_view to_string(JacobianMode mode);
std::string_view to_string(SetpointSource source);
std::string_view to_string(TransferRoute route);
JacobianMode parse_jacobian_mode(std::string_view s);

/// Parses a scenario document. Syntax errors and schema violations throw
/// Error(ScenarioInvalid) with "<source>:<line>:<col>: ..." diagnostics.
Scenario parse_scenario(const std::string& text, const std::string& source_name);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::ordered_json scenario_to_json(const Scenario& s);
std::string dump_scenario(const Scenario& s);

}  // namespace vsgrasp
