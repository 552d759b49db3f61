#pragma once

#include <array>
#include <functional>

#include "flexquad/robot/simple_hip.hpp"
#include "flexquad/robot/transmission.hpp"

namespace flexquad::robot {

inline constexpr double kSubstepDt = 5e-5;        // 20 kHz inner loop
inline constexpr int kSubstepsPerPolicyTick = 80;  // 250 Hz policy rate

struct BodyState {
  Vec3 pos = Vec3::Zero();
  UnitQuaternion quat;
  Vec3 vel = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // body frame
};

struct WorldOptions {
  bool contacts = true;
  bool body_fixed = false;
  bool gravity = true;
  dyn::BaumgarteGains baumgarte{};
};

enum class PdMode { kVoltage, kTorque };

// Per-DOF PD on hip angles. Targets are clipped to the joint range; output is
// clamped to the drive range (volts in [-1, 1] or torques in +-torque_limit).
Vec leg_pd_controller(const Vec& targets8, const Vec& q_s8, const Vec& qdot_s8,
                      const RobotParams& params, PdMode mode);

// Contact evaluation shared by all simulator variants.
struct ContactResult {
  std::array<Vec2, kNumLegs> hip_torque = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero(),
                                           Vec2::Zero()};
  std::array<Vec3, kNumLegs> foot_force_world = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                                                 Vec3::Zero()};
  Vec3 body_force_world = Vec3::Zero();
  Vec3 body_torque_body = Vec3::Zero();
};
ContactResult evaluate_contacts(const RobotParams& params, const BodyState& body,
                                const Vec& q_s8, const Vec& qdot_s8);

// State mirroring across the body x-z plane (left/right swap). Under the
// side-folded leg convention hip angles copy over unchanged.
BodyState mirror_body(const BodyState& b);
Vec mirror_leg_vector(const Vec& v8);

// ---------------------------------------------------------------------------

// Full model: four flexure transmissions on a floating rigid body.
class FullWorld {
 public:
  FullWorld(RobotParams params, WorldOptions options);

  void reset();
  // One 20 kHz substep driven by raw voltages (8, leg-major lift/swing).
  void substep_raw(const Vec& u8, double dt = kSubstepDt);
  // One substep with the PD controller mapping targets to voltages.
  void substep_pd(const Vec& targets8, double dt = kSubstepDt);
  // One 250 Hz policy tick = 80 PD substeps.
  void policy_step(const Vec& targets8);

  Vec hip_positions() const;
  Vec hip_velocities() const;
  const Vec& last_hip_accelerations() const { return last_hip_accel_; }
  const Vec& last_drive() const { return last_drive_; }
  double max_constraint_residual() const;

  const BodyState& body() const { return body_; }
  BodyState& mutable_body() { return body_; }
  std::array<TransmissionState, kNumLegs>& legs() { return legs_; }
  const std::array<TransmissionState, kNumLegs>& legs() const { return legs_; }
  double time() const { return time_; }
  const RobotParams& params() const { return params_; }
  const WorldOptions& options() const { return options_; }

  // Free-space ODE view with the body clamped: x = [q x4 legs; qdot x4],
  // u = 0, no contacts. Used by conservation tests via integrate_step.
  Vec pack_clamped_state() const;
  void unpack_clamped_state(const Vec& x);
  Vec clamped_free_derivative(const Vec& x) const;
  double clamped_energy(bool with_gravity) const;

 private:
  void substep_with_drive(const Vec& u8, double dt);

  RobotParams params_;
  WorldOptions options_;
  BodyState body_;
  std::array<TransmissionState, kNumLegs> legs_;
  Vec last_hip_accel_ = Vec::Zero(kActuatedDof);
  Vec last_drive_ = Vec::Zero(kActuatedDof);
  double time_ = 0.0;
};

// ---------------------------------------------------------------------------

// Torque source for the hybrid variant: per leg, maps (q_s, qdot_s, drive
// voltages) to hip torques. Held for hold_substeps between refreshes (the
// residual network is trained at the 1 kHz recording discretization).
struct HipDrive {
  std::function<Vec2(int leg, const Vec2& q_s, const Vec2& qdot_s, const Vec2& u)> map;
  int hold_substeps = 1;
};

enum class LumpedVariant { kSimple, kHybrid };

// Lumped model: four 2-DOF hips on the same floating body and contacts.
// kSimple is torque-PD on the analytic hips; kHybrid drives them through a
// voltage PD and a voltage-to-torque map (learned residual or static map).
class LumpedWorld {
 public:
  LumpedWorld(RobotParams params, WorldOptions options, LumpedVariant variant,
              HipDrive drive = {});

  void reset();
  // Raw torque substep (white-noise data collection for the simple model).
  void substep_torques(const Vec& u_s8, double dt = kSubstepDt);
  // One substep with the PD controller (torque mode or voltage+map).
  void substep_pd(const Vec& targets8, double dt = kSubstepDt);
  void policy_step(const Vec& targets8);

  Vec hip_positions() const;
  Vec hip_velocities() const;
  const Vec& last_hip_accelerations() const { return last_hip_accel_; }
  const Vec& last_drive() const { return last_drive_; }

  const BodyState& body() const { return body_; }
  BodyState& mutable_body() { return body_; }
  double time() const { return time_; }
  const RobotParams& params() const { return params_; }
  RobotParams& mutable_params() { return params_; }
  LumpedVariant variant() const { return variant_; }

  std::array<Vec2, kNumLegs>& hip_q() { return q_s_; }
  std::array<Vec2, kNumLegs>& hip_qdot() { return qdot_s_; }

 private:
  void advance(const Vec& torque8, double dt);

  RobotParams params_;
  WorldOptions options_;
  LumpedVariant variant_;
  HipDrive drive_;
  BodyState body_;
  std::array<Vec2, kNumLegs> q_s_ = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  std::array<Vec2, kNumLegs> qdot_s_ = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  std::array<Vec2, kNumLegs> held_torque_ = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero(),
                                             Vec2::Zero()};
  Vec last_hip_accel_ = Vec::Zero(kActuatedDof);
  Vec last_drive_ = Vec::Zero(kActuatedDof);
  long substep_count_ = 0;
  double time_ = 0.0;
};

// Standing rest height: feet exactly at the ground plane.
double standing_body_height(const RobotParams& params);

}  // namespace flexquad::robot
