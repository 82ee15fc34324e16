#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <future>

#include "vsgrasp/analysis.hpp"
#include "vsgrasp/error.hpp"
#include "vsgrasp/servo_sim.hpp"

namespace vsgrasp {
namespace {

const std::filesystem::path kScenarioDir{VSGRASP_SCENARIO_DIR};

Scenario small() { return load_scenario(kScenarioDir / "small_displacement.json"); }
Scenario large() { return load_scenario(kScenarioDir / "large_displacement.json"); }
Scenario grasp() { return load_scenario(kScenarioDir / "grasp.json"); }

bool same_pose(const RigidTransform& a, const RigidTransform& b) {
  return a.rotation == b.rotation && a.translation == b.translation;
}

TEST(ServoStep, AtGoalCommandsNothing) {
  Scenario s = small();
  s.initial_gripper_pose = s.goal_gripper_pose;
  const SetpointOutcome sp = compute_setpoints(s);
  auto [ctx, state] = prepare_servo(s, sp.set_points);
  const StepOutput out = servo_step(s, ctx, state);
  EXPECT_TRUE(out.converged);
  EXPECT_TRUE(out.screw.vector().isZero(0.0));
  EXPECT_LE(out.row.error_px, s.convergence_eps_px);
}

TEST(RunServo, ZeroOffsetConvergesInZeroSteps) {
  Scenario s = small();
  s.initial_gripper_pose = s.goal_gripper_pose;
  const ServoRun run = run_servo(s);
  EXPECT_TRUE(run.result.converged);
  EXPECT_EQ(run.result.steps, 0);
  ASSERT_EQ(run.trace.rows.size(), 1u);
}

// Linearized dynamics: with the exact Jacobian, e' = -g e, so over a tiny dt
// the log-error drops by g dt.
TEST(ServoStep, SmallOffsetDecaysAtRateG) {
  Scenario s = small();
  s.initial_gripper_pose.rotvec_deg = {0.6, 0.8, 0.0};
  s.initial_gripper_pose.translation_m = s.goal_gripper_pose.translation_m + Eigen::Vector3d(0.002, -0.001, 0.01);
  s.pose_init_perturbation = {0.0, 0.0};
  s.dt_s = 1e-4;
  const SetpointOutcome sp = compute_setpoints(s);
  auto [ctx, state] = prepare_servo(s, sp.set_points);
  const StepOutput first = servo_step(s, ctx, state);
  const StepOutput second = servo_step(s, ctx, first.next);
  const double rate = -std::log(second.row.error_px / first.row.error_px) / s.dt_s;
  EXPECT_NEAR(rate, s.gain_per_s, 0.05 * s.gain_per_s);
}

TEST(ServoStep, FrozenJacobianEqualsVariableJacobianAtGoal) {
  Scenario s = small();
  s.jacobian_mode = JacobianMode::constant;
  const SetpointOutcome sp = compute_setpoints(s);
  auto [ctx, state] = prepare_servo(s, sp.set_points);
  ASSERT_EQ(ctx.frozen_jacobians.size(), 1u);
  // Variable mode would evaluate L at the pose observed at the goal.
  const CameraPose& cam = ctx.cameras[0];
  const RigidTransform at_goal = compose(cam.extrinsics, s.ideal_gripper_pose());
  std::vector<Matrix26d> blocks;
  for (const auto& b : s.gripper_points_m) {
    blocks.push_back(point_jacobian(interaction_matrix(cam.intrinsics, transform_point(at_goal, b)), ctx.theta[0]));
  }
  const Eigen::MatrixXd expected = stack_jacobian(blocks).matrix;
  EXPECT_LE((ctx.frozen_jacobians[0].matrix - expected).cwiseAbs().maxCoeff(), 1e-6 * expected.norm());
}

TEST(RunServo, SmallScenarioBothModesConverge) {
  for (const auto mode : {JacobianMode::variable, JacobianMode::constant}) {
    Scenario s = small();
    s.jacobian_mode = mode;
    const ServoRun run = run_servo(s);
    EXPECT_TRUE(run.result.converged) << to_string(mode);
    if (mode == JacobianMode::variable) {
      EXPECT_GE(fit_log_error(run.trace).r_squared, 0.99);
    }
  }
}

TEST(RunServo, LargeScenarioConstantModeDegrades) {
  Scenario var = large();
  Scenario con = large();
  con.jacobian_mode = JacobianMode::constant;
  const ServoRun a = run_servo(var);
  const ServoRun b = run_servo(con);
  ASSERT_TRUE(a.result.converged);
  ASSERT_TRUE(b.result.converged);
  EXPECT_GE(fit_log_error(a.trace).r_squared, 0.99);
  EXPECT_LT(fit_log_error(b.trace).r_squared, fit_log_error(a.trace).r_squared);
  EXPECT_GT(time_to_half_error(b.trace), time_to_half_error(a.trace));
}

TEST(RunServo, ErrorStrictlyDecreasesForSmallSteps) {
  Scenario s = small();
  s.dt_s = 0.01 / s.gain_per_s;
  s.max_steps = 5000;
  const ServoRun run = run_servo(s);
  ASSERT_TRUE(run.result.converged);
  for (std::size_t k = 1; k < run.trace.rows.size(); ++k) {
    EXPECT_LT(run.trace.rows[k].error_px, run.trace.rows[k - 1].error_px) << k;
  }
}

TEST(RunServo, TraceConservation) {
  const Scenario s = large();
  const ServoRun run = run_servo(s);
  const auto& rows = run.trace.rows;
  ASSERT_GT(rows.size(), 2u);
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    EXPECT_TRUE(same_pose(rows[k + 1].displacement, integrate_screw(rows[k].displacement, rows[k].screw, s.dt_s)))
        << k;
    EXPECT_GT(rows[k + 1].time_s, rows[k].time_s);
    EXPECT_EQ(rows[k + 1].step, rows[k].step + 1);
  }
  EXPECT_LE(rows.back().step, s.max_steps);
}

TEST(RunServo, DeterministicTraces) {
  Scenario s = grasp();
  s.servo_noise_px = 0.2;
  s.actuation_noise_rel = 0.05;
  s.max_steps = 80;
  const ServoRun a = run_servo(s);
  const ServoRun b = run_servo(s);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
    EXPECT_EQ(a.trace.rows[k].error_px, b.trace.rows[k].error_px);
    EXPECT_EQ(a.trace.rows[k].screw.vector(), b.trace.rows[k].screw.vector());
    EXPECT_EQ(a.trace.rows[k].pose_rms_px, b.trace.rows[k].pose_rms_px);
  }
  s.seed = 2;
  const ServoRun c = run_servo(s);
  EXPECT_NE(a.trace.rows[1].error_px, c.trace.rows[1].error_px);
}

TEST(RunServo, ThetaIsFixedAtStepZero) {
  const Scenario s = small();
  const SetpointOutcome sp = compute_setpoints(s);
  auto [ctx, state] = prepare_servo(s, sp.set_points);
  EXPECT_EQ(ctx.theta[0].matrix, screw_transform(state.pose_estimates[0].pose).matrix);
  const Matrix6d before = ctx.theta[0].matrix;
  ServoState st = state;
  for (int k = 0; k < 20; ++k) {
    st = servo_step(s, ctx, st).next;
  }
  EXPECT_EQ(ctx.theta[0].matrix, before);
}

TEST(RunServo, WarmStartedPoseNeedsFewIterations) {
  const ServoRun run = run_servo(large());
  for (std::size_t k = 1; k + 1 < run.trace.rows.size(); ++k) {
    EXPECT_LE(run.trace.rows[k].pose_iterations, 5) << k;
  }
}

TEST(RunServo, StepBudgetGivesNotConverged) {
  Scenario s = small();
  s.max_steps = 5;
  const ServoRun run = run_servo(s);
  EXPECT_FALSE(run.result.converged);
  EXPECT_EQ(run.result.status, RunStatus::not_converged);
  EXPECT_EQ(run.result.steps, 5);
  EXPECT_TRUE(run.trace.rows.back().screw.vector().isZero(0.0));
}

TEST(RunServo, GripperOutOfViewIsFeatureLost) {
  Scenario s = small();
  s.initial_gripper_pose.translation_m.x() = 1.0;
  const ServoRun run = run_servo(s);
  EXPECT_EQ(run.result.status, RunStatus::feature_lost);
  EXPECT_GE(run.result.final_alignment_error_3d_m, 0.0);
}

TEST(RunServo, IndependentRunsAreThreadSafe) {
  const Scenario base = large();
  std::vector<std::future<ServoRun>> futures;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    futures.push_back(std::async(std::launch::async, [base, seed] {
      Scenario s = base;
      s.seed = seed;
      s.servo_noise_px = 0.1;
      return run_servo(s);
    }));
  }
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Scenario s = base;
    s.seed = seed;
    s.servo_noise_px = 0.1;
    const ServoRun sequential = run_servo(s);
    const ServoRun parallel = futures[seed - 1].get();
    ASSERT_EQ(sequential.trace.rows.size(), parallel.trace.rows.size());
    EXPECT_EQ(sequential.trace.rows.back().error_px, parallel.trace.rows.back().error_px);
  }
}

TEST(TwoCameraServo, DuplicatedCameraMatchesSingleCamera) {
  Scenario one = large();
  one.runtime_rig[1] = one.runtime_rig[0];
  one.pose_init_perturbation = {0.0, 0.0};
  Scenario two = one;
  two.cameras_used = 2;
  // Stacking the same rows twice doubles the error norm.
  two.convergence_eps_px = one.convergence_eps_px * std::sqrt(2.0);
  const ServoRun a = run_servo(one);
  const ServoRun b = run_servo(two);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
    EXPECT_LE((a.trace.rows[k].gripper_world.matrix() - b.trace.rows[k].gripper_world.matrix()).cwiseAbs().maxCoeff(),
              1e-9)
        << k;
  }
}

TEST(TwoCameraServo, ConvergesOnLargeScenario) {
  const ServoRun run = run_two_camera_servo(large());
  EXPECT_TRUE(run.result.converged);
  EXPECT_LE(run.result.final_alignment_error_3d_m, 1e-3);
}

TEST(TwoCameraServo, ZeroErrorGivesZeroScrew) {
  Scenario s = large();
  s.cameras_used = 2;
  s.initial_gripper_pose = s.goal_gripper_pose;
  const SetpointOutcome sp = compute_setpoints(s);
  auto [ctx, state] = prepare_servo(s, sp.set_points);
  const StepOutput out = servo_step(s, ctx, state);
  EXPECT_TRUE(out.converged);
  EXPECT_TRUE(out.screw.vector().isZero(0.0));
}

TEST(GraspPipeline, NoiselessAlignmentIsSubMillimetre) {
  Scenario s = grasp();
  s.noise_px = 0.0;
  const ServoRun run = run_grasp_pipeline(s);
  EXPECT_TRUE(run.result.converged);
  EXPECT_LE(run.result.final_alignment_error_3d_m, 1e-4);
  EXPECT_LE(run.setpoints.rms_error_px[0], 1e-6);
}

TEST(GraspPipeline, BasisRouteMatchesDirectRouteWithoutNoise) {
  Scenario s = grasp();
  s.noise_px = 0.0;
  s.transfer_route = TransferRoute::basis;
  const SetpointOutcome basis = compute_setpoints(s);
  s.transfer_route = TransferRoute::direct;
  const SetpointOutcome direct = compute_setpoints(s);
  EXPECT_LE((basis.set_points[0].coords - direct.set_points[0].coords).cwiseAbs().maxCoeff(), 1e-6);
}

// Half-pixel noise on every image, 18 object points, two servo cameras.
TEST(GraspPipeline, HalfPixelNoiseMedianAlignmentNearOneMillimetre) {
  std::vector<double> errors;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Scenario s = grasp();
    s.seed = seed;
    s.cameras_used = 2;
    s.max_steps = 200;
    errors.push_back(run_grasp_pipeline(s).result.final_alignment_error_3d_m);
  }
  EXPECT_LE(median(errors), 1.25e-3);
}

TEST(GraspPipeline, RuntimeRigChangeKeepsAlignment) {
  Scenario s = grasp();
  s.noise_px = 0.0;
  s.convergence_eps_px = 1e-6;
  s.max_steps = 2000;
  const ServoRun base = run_grasp_pipeline(s);
  for (auto& cam : s.runtime_rig) {
    cam.intrinsics.alpha_u *= 1.3;
    cam.intrinsics.alpha_v *= 1.3;
  }
  s.runtime_rig[0].position_m = {-0.15, 0.12, -0.3};
  s.runtime_rig[1].position_m = {0.35, -0.1, -0.25};
  const ServoRun moved = run_grasp_pipeline(s);
  ASSERT_TRUE(base.result.converged);
  ASSERT_TRUE(moved.result.converged);
  EXPECT_LE(std::abs(moved.result.final_alignment_error_3d_m - base.result.final_alignment_error_3d_m), 1e-6);
}

TEST(Analysis, FitLineAndMedian) {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, 3, 5, 7};
  const LinearFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-15);
  EXPECT_NEAR(f.intercept, 1.0, 1e-15);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-15);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), Error);
}

TEST(Analysis, TimeToHalfInterpolatesLogLinearly) {
  ServoTrace t;
  for (int k = 0; k < 5; ++k) {
    TraceRow r;
    r.step = k;
    r.time_s = 0.1 * k;
    r.error_px = 100.0 * std::exp(-0.5 * r.time_s * 10.0);
    t.rows.push_back(r);
  }
  EXPECT_NEAR(time_to_half_error(t), std::log(2.0) / 5.0, 1e-12);
  t.rows.resize(1);
  EXPECT_TRUE(std::isinf(time_to_half_error(t)));
}

TEST(Analysis, TraceCsvHeader) {
  std::ostringstream out;
  write_trace_csv(out, ServoTrace{});
  EXPECT_EQ(out.str(), "step,time_s,error_px,vx,vy,vz,wx,wy,wz,pose_rms_px,ms_pose,ms_jacobian,ms_control\n");
}

}  // namespace
}  // namespace vsgrasp
