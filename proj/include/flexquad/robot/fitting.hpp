#pragma once

#include "flexquad/robot/world.hpp"

namespace flexquad::robot {

// Rest-configuration voltage-to-torque map: u_s = Jbar^T alpha_a u per
// transmission, diagonal because the lift/swing chains are separate planes.
Vec2 static_map_torque(const RobotParams& p, const Vec2& u);

// Static equilibrium of one isolated transmission under constant drive,
// found by damped settling (gravity off, no contacts).
Vec2 settle_static_deflection(const RobotParams& p, const Vec2& u, double sim_time = 0.6);

// Lumped parameters derived from the full transmission: inertia/damping
// reflected at rest plus the leg, and stiffness chosen so the simple model
// matches the full model's unloaded static deflection under u = +-0.5 driven
// through the static map.
SimpleHipParams fit_simple_from_full(const RobotParams& p);

// Instantaneous lumped quantities at a full-model state (used by oracle
// domain randomization): reflected chain inertia plus the leg's diagonal
// terms, and the J^T K J projected stiffness.
struct LumpedSample {
  double I_lift, I_swing;
  double kappa_lift, kappa_swing;
};
LumpedSample lumped_sample(const RobotParams& p, const TransmissionState& s);

}  // namespace flexquad::robot
