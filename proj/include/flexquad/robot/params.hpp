#pragma once

#include <array>
#include <string>

#include "flexquad/config.hpp"
#include "flexquad/numerics.hpp"

namespace flexquad::robot {

// One planar crank-coupler-output chain: actuator coordinate q_a (m) coupled
// to the crank, three links closing a loop at (d_x, d_y), torsional
// spring-dampers at every joint (pseudo-rigid-body flexures).
struct ChainParams {
  double l1 = 0, l2 = 0, l3 = 0;  // link lengths, m
  double d_x = 0, d_y = 0;        // loop closure point, m
  double r_a = 0;                 // actuator lever arm, m (theta1 = q_a / r_a)
  double k_f1 = 0, k_f2 = 0, k_f3 = 0;  // flexure stiffness, N*m/rad
  double b_f1 = 0, b_f2 = 0, b_f3 = 0;  // flexure damping, N*m*s/rad
  double theta_bar1 = 0, theta_bar2 = 0, theta_bar3 = 0;  // rest angles, rad
  double alpha_a = 0;  // actuator gain, N/V (normalized drive |u| <= 1)
  double k_a = 0;      // actuator internal stiffness, N/m
  double b_a = 0;      // actuator damping, N*s/m
  double m_a = 0;      // actuator effective mass, kg
  double I1 = 0, I2 = 0, I3 = 0;  // link inertias about their pivots, kg*m^2

  void validate(const std::string& name) const;
};

// Rigid leg on a two-axis hip: outer axis x (lift), carried axis z (swing),
// rest direction (0, side*dir_y, dir_z), point mass at radius r.
struct LegGeometry {
  double r = 0;      // leg length (hip to foot), m
  double mass = 0;   // lumped leg mass, kg
  double dir_y = 0;  // rest direction y-component (> 0), unit vector
  double dir_z = 0;  // rest direction z-component (< 0), unit vector

  void validate() const;
};

// Lumped 2-DOF hip model. I_lift/I_swing parameterize the universal-joint
// mass matrix directly; m_leg and r_leg only enter the gravity term.
struct SimpleHipParams {
  double I_lift = 0, I_swing = 0;          // kg*m^2, requires I_swing <= I_lift
  double m_leg = 0, r_leg = 0;             // gravity lever, kg / m
  double kappa_lift = 0, kappa_swing = 0;  // torsional stiffness, N*m/rad
  double b_lift = 0, b_swing = 0;          // damping, N*m*s/rad
  double gravity = 9.81;                   // m/s^2, body-frame -z

  void validate() const;
};

struct ContactParams {
  double k_n = 0;  // normal stiffness, N/m
  double b_n = 0;  // normal damping, N*s/m
  double mu = 0;   // Coulomb friction coefficient
  double v_s = 0;  // friction smoothing velocity, m/s

  void validate() const;
};

struct BodyParams {
  double length = 0;  // m, for body-length normalization
  double mass = 0;    // kg
  Vec3 inertia = Vec3::Zero();  // principal moments, kg*m^2
  double mount_fore_x = 0;      // m
  double mount_side_y = 0;      // m
  double mount_z = 0;           // m

  void validate() const;
};

struct PdGains {
  double kp_voltage = 0, kd_voltage = 0;  // V/rad, V*s/rad
  double kp_torque = 0, kd_torque = 0;    // N*m/rad, N*m*s/rad
  // Per-axis drive clamps (and white-noise scales), N*m.
  double torque_limit_lift = 0;
  double torque_limit_swing = 0;

  double torque_limit(int axis) const { return axis == 0 ? torque_limit_lift : torque_limit_swing; }
  Vec2 torque_limits() const { return Vec2(torque_limit_lift, torque_limit_swing); }

  void validate() const;
};

// Leg order used everywhere: 0 = front-left, 1 = front-right, 2 = hind-left,
// 3 = hind-right. Per-leg vectors are leg-major (lift, swing) pairs.
inline constexpr int kNumLegs = 4;
inline constexpr int kActuatedDof = 8;
// +1 for left legs, -1 for right legs; folds the mirror into leg kinematics
// so identical joint angles land mirrored feet.
inline constexpr double kLegSide[kNumLegs] = {1.0, -1.0, 1.0, -1.0};

struct RobotParams {
  static constexpr int kSchemaVersion = 1;

  BodyParams body;
  LegGeometry leg;
  ChainParams lift;   // shared by all four transmissions
  ChainParams swing;
  SimpleHipParams simple;
  ContactParams contact;
  PdGains pd;
  double gravity = 9.81;      // m/s^2
  double joint_range = 0.35;  // rad, symmetric target clip

  Vec3 mount(int leg_index) const;

  void validate() const;

  // Structured-text loader; rejects unknown keys and wrong schema versions.
  static RobotParams load(const std::string& path);
  static RobotParams from_config(const Config& cfg);
};

}  // namespace flexquad::robot
