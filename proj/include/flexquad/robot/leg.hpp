#pragma once

#include "flexquad/robot/params.hpp"

namespace flexquad::robot {

// Point-mass leg on a two-axis hip, parameterized by the lumped inertias
// about the lift/swing axes. Identical for left and right legs because the
// side sign is folded into the kinematics below.

// M(theta_s) of the universal-joint point mass:
//   [ I_l - I_s sin^2(ts)          -sqrt(I_s (I_l - I_s)) sin(ts) ]
//   [ -sqrt(I_s (I_l - I_s)) sin(ts)            I_s               ]
Mat2 leg_mass_matrix(double I_l, double I_s, double theta_s);

// Coriolis/centrifugal generalized-force vector c(q, qdot) (Christoffel form).
Vec2 leg_coriolis(double I_l, double I_s, double theta_s, double dtheta_l, double dtheta_s);

// Gravity torque dV/dq for V = m g r u_z(theta_l, theta_s).
Vec2 leg_gravity_torque(double mass, double r, double g, double dir_y, double dir_z,
                        double theta_l, double theta_s);

// Gravitational potential relative to the rest pose (theta = 0).
double leg_potential(double mass, double r, double g, double dir_y, double dir_z, double theta_l,
                     double theta_s);

// Leg direction unit vector in the body frame. side = +1 left, -1 right.
Vec3 leg_direction(const LegGeometry& geom, double side, double theta_l, double theta_s);

// d(direction)/d(theta_l, theta_s), 3x2.
Eigen::Matrix<double, 3, 2> leg_direction_jacobian(const LegGeometry& geom, double side,
                                                   double theta_l, double theta_s);

// Foot position in the body frame: mount + r * direction.
Vec3 foot_position_body(const RobotParams& params, int leg_index, double theta_l, double theta_s);

// Foot Jacobian in the body frame, r * d(direction)/dq, 3x2.
Eigen::Matrix<double, 3, 2> foot_jacobian_body(const RobotParams& params, int leg_index,
                                               double theta_l, double theta_s);

// Penalty ground contact at z = 0 with smooth Coulomb friction:
//   zero above ground; Fn = max(0, k_n * depth - b_n * zdot) along +z;
//   Ft = -mu * Fn * tanh(|vt| / v_s) * vt_hat.
Vec3 contact_force(const Vec3& foot_pos_world, const Vec3& foot_vel_world,
                   const ContactParams& cp);

}  // namespace flexquad::robot
