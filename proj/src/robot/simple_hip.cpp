#include "flexquad/robot/simple_hip.hpp"

namespace flexquad::robot {

namespace {

// Gravity lever direction implied by the lumped inertias; falls back to the
// geometric leg direction when they disagree (perturbed parameter sets).
void implied_direction(const SimpleHipParams& p, double* dir_y, double* dir_z) {
  const double ratio = std::clamp(p.I_swing / p.I_lift, 0.0, 1.0);
  *dir_y = std::sqrt(ratio);
  *dir_z = -std::sqrt(1.0 - ratio);
}

}  // namespace

Mat2 simple_mass_matrix(const SimpleHipParams& p, const Vec2& q_s) {
  return leg_mass_matrix(p.I_lift, p.I_swing, q_s[1]);
}

Vec2 simple_coriolis(const SimpleHipParams& p, const Vec2& q_s, const Vec2& qdot_s) {
  return leg_coriolis(p.I_lift, p.I_swing, q_s[1], qdot_s[0], qdot_s[1]);
}

Vec2 simple_potential_torque(const SimpleHipParams& p, const Vec2& q_s) {
  double dir_y, dir_z;
  implied_direction(p, &dir_y, &dir_z);
  const Vec2 grav =
      leg_gravity_torque(p.m_leg, p.r_leg, p.gravity, dir_y, dir_z, q_s[0], q_s[1]);
  return grav + Vec2(p.kappa_lift * q_s[0], p.kappa_swing * q_s[1]);
}

Vec2 simple_hip_dynamics(const SimpleHipParams& p, const Vec2& q_s, const Vec2& qdot_s,
                         const Vec2& u_s) {
  const Mat2 M = simple_mass_matrix(p, q_s);
  const Vec2 rhs = u_s - simple_coriolis(p, q_s, qdot_s) - simple_potential_torque(p, q_s) -
                   Vec2(p.b_lift * qdot_s[0], p.b_swing * qdot_s[1]);
  const double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  check<SingularMatrix>(std::abs(det) > 1e-24, "simple_hip_dynamics: singular mass matrix");
  return Vec2((M(1, 1) * rhs[0] - M(0, 1) * rhs[1]) / det,
              (M(0, 0) * rhs[1] - M(1, 0) * rhs[0]) / det);
}

double simple_hip_energy(const SimpleHipParams& p, const Vec2& q_s, const Vec2& qdot_s) {
  double dir_y, dir_z;
  implied_direction(p, &dir_y, &dir_z);
  double e = 0.5 * qdot_s.dot(simple_mass_matrix(p, q_s) * qdot_s);
  e += 0.5 * (p.kappa_lift * q_s[0] * q_s[0] + p.kappa_swing * q_s[1] * q_s[1]);
  e += leg_potential(p.m_leg, p.r_leg, p.gravity, dir_y, dir_z, q_s[0], q_s[1]);
  return e;
}

}  // namespace flexquad::robot
