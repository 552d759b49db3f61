#pragma once

#include "flexquad/dynamics.hpp"
#include "flexquad/robot/chain.hpp"
#include "flexquad/robot/leg.hpp"

namespace flexquad::robot {

// One transmission: lift chain (coords 0-3) and swing chain (coords 4-7),
// q = [q_a, t1, t2, t3 | q_a, t1, t2, t3], six loop constraints. The leg's
// point-mass inertia couples the two output coordinates (rows 3 and 7).
inline constexpr int kTransCoords = 8;
inline constexpr int kTransConstraints = 6;
inline constexpr int kLiftOut = 3;
inline constexpr int kSwingOut = 7;

struct TransmissionState {
  Vec q = Vec::Zero(kTransCoords);
  Vec qdot = Vec::Zero(kTransCoords);
};

struct TransmissionAccel {
  Vec qddot;   // 8
  Vec lambda;  // 6
};

// Hip angles relative to the chain rest outputs: (t3_lift - rest, t3_swing - rest).
Vec2 project_positions(const RobotParams& p, const TransmissionState& s);
Vec2 project_velocities(const TransmissionState& s);
Vec2 project_accelerations(const Vec& qddot);

// Full transmission DAE acceleration. u = (lift, swing) drive voltages in
// [-1, 1]; tau_hip is an external generalized torque on the output rows
// (contact load). Throws ProjectFirst when the constraint residual exceeds
// 1e-4 and ConvergenceError (via RankDeficientConstraints) at singular
// configurations.
TransmissionAccel full_transmission_dynamics(const RobotParams& p, const TransmissionState& s,
                                             const Vec2& u, const Vec2& tau_hip,
                                             const dyn::BaumgarteGains& gains = {});

// Constraint residual max-norm over both chains.
double transmission_constraint_residual(const RobotParams& p, const TransmissionState& s);

// Kinetic + potential (flexure springs, actuator springs, leg gravity when
// with_gravity). Potential reference is the rest configuration.
double transmission_energy(const RobotParams& p, const TransmissionState& s, bool with_gravity);

// Rest configuration (exact loop closure at the rest angles, zero rates).
TransmissionState transmission_at_rest(const RobotParams& p);

// Re-solve both loop closures from hip coordinates; velocities completed so
// H qdot = 0 exactly.
TransmissionState transmission_from_hip(const RobotParams& p, const Vec2& q_s,
                                        const Vec2& qdot_s);

}  // namespace flexquad::robot
