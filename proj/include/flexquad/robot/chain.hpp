#pragma once

#include "flexquad/dynamics.hpp"
#include "flexquad/robot/params.hpp"

namespace flexquad::robot {

// Chain coordinates are packed (q_a, theta1, theta2, theta3).
inline constexpr int kChainCoords = 4;
inline constexpr int kChainConstraints = 3;

// Constraint residual, Jacobian, and velocity/acceleration bias terms:
//   h1 = theta1 - q_a / r_a
//   h2 = l1 cos t1 + l2 cos t2 + l3 cos t3 - d_x
//   h3 = l1 sin t1 + l2 sin t2 + l3 sin t3 - d_y
dyn::ConstraintEval chain_constraints(const ChainParams& p, const Vec& q_c, const Vec& qdot_c);

// Actuator force f = alpha_a * u - k_a * q_a - b_a * qdot_a.
// Throws InputOutOfRange when |u| > 1 (normalized drive).
double actuator_force(double u, double q_a, double qdot_a, const ChainParams& p);

// Loop closure solve: given the output angle theta3, recover (q_a, theta1,
// theta2) on the branch continuous with the rest configuration. Throws
// ConvergenceError when the loop cannot close.
struct ChainConfiguration {
  double q_a, theta1, theta2, theta3;
  Vec q() const;
};
ChainConfiguration solve_loop_closure(const ChainParams& p, double theta3);

// Velocity-consistent completion: dependent rates from H qdot = 0 given
// theta3_dot at configuration q_c.
Vec chain_velocity_from_output(const ChainParams& p, const Vec& q_c, double theta3_dot);

// Tangent of the constraint manifold parameterized by theta3:
// dq/dtheta3 = (dq_a, dtheta1, dtheta2, 1).
Vec chain_tangent(const ChainParams& p, const Vec& q_c);

// Scalar quantities reflected onto the output coordinate along the manifold
// tangent v = dq/dtheta3: v^T diag(...) v.
struct ReflectedChain {
  double inertia;    // kg*m^2
  double stiffness;  // N*m/rad
  double damping;    // N*m*s/rad
  double drive;      // N*m per volt: (dq_a/dtheta3) * alpha_a
};
ReflectedChain reflect_chain(const ChainParams& p, const Vec& q_c);

// Rest-configuration drive gain used by the static voltage->torque map.
double static_map_gain(const ChainParams& p);

}  // namespace flexquad::robot
