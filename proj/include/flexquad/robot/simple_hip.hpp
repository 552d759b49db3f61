#pragma once

#include "flexquad/robot/leg.hpp"

namespace flexquad::robot {

// Lumped 2-DOF hip: closed-form universal-joint dynamics with torsional
// springs, viscous damping, and gravity on the point-mass leg.
//   qddot = M_s(q)^-1 (u - c_s(q, qdot) - g_s(q) - B qdot)

Mat2 simple_mass_matrix(const SimpleHipParams& p, const Vec2& q_s);
Vec2 simple_coriolis(const SimpleHipParams& p, const Vec2& q_s, const Vec2& qdot_s);
// Gravity + torsional springs (the potential gradient).
Vec2 simple_potential_torque(const SimpleHipParams& p, const Vec2& q_s);

Vec2 simple_hip_dynamics(const SimpleHipParams& p, const Vec2& q_s, const Vec2& qdot_s,
                         const Vec2& u_s);

// Kinetic + potential relative to rest.
double simple_hip_energy(const SimpleHipParams& p, const Vec2& q_s, const Vec2& qdot_s);

}  // namespace flexquad::robot
