#include "flexquad/robot/fitting.hpp"

namespace flexquad::robot {

Vec2 static_map_torque(const RobotParams& p, const Vec2& u) {
  return Vec2(static_map_gain(p.lift) * u[0], static_map_gain(p.swing) * u[1]);
}

Vec2 settle_static_deflection(const RobotParams& p, const Vec2& u, double sim_time) {
  // Extra damping for a fast, overshoot-free settle; statics are unaffected.
  RobotParams damped = p;
  for (ChainParams* c : {&damped.lift, &damped.swing}) {
    c->b_f1 *= 10.0;
    c->b_f2 *= 10.0;
    c->b_f3 *= 10.0;
    c->b_a *= 10.0;
  }
  damped.gravity = 1e-12;  // unloaded fit: springs and actuator only

  TransmissionState s = transmission_at_rest(damped);
  const int steps = static_cast<int>(sim_time / kSubstepDt);
  for (int i = 0; i < steps; ++i) {
    const TransmissionAccel acc = full_transmission_dynamics(damped, s, u, Vec2::Zero());
    s.qdot += kSubstepDt * acc.qddot;
    s.q += kSubstepDt * s.qdot;
  }
  check<ConvergenceError>(project_velocities(s).norm() < 1e-3,
                          "settle_static_deflection: transmission did not settle");
  return project_positions(damped, s);
}

SimpleHipParams fit_simple_from_full(const RobotParams& p) {
  SimpleHipParams out;
  out.gravity = p.gravity;
  out.m_leg = p.leg.mass;
  out.r_leg = p.leg.r;

  const TransmissionState rest = transmission_at_rest(p);
  const ReflectedChain lift = reflect_chain(p.lift, rest.q.head(kChainCoords));
  const ReflectedChain swing = reflect_chain(p.swing, rest.q.tail(kChainCoords));

  const double I_leg_lift = p.leg.mass * p.leg.r * p.leg.r;
  const double I_leg_swing = I_leg_lift * p.leg.dir_y * p.leg.dir_y;
  out.I_lift = lift.inertia + I_leg_lift;
  out.I_swing = swing.inertia + I_leg_swing;
  out.b_lift = lift.damping;
  out.b_swing = swing.damping;

  // Match the full model's unloaded static deflection at u = +-0.5 when the
  // simple model is driven through the static map.
  const double u_fit = 0.5;
  const Vec2 d_plus = settle_static_deflection(p, Vec2(u_fit, u_fit));
  const Vec2 d_minus = settle_static_deflection(p, Vec2(-u_fit, -u_fit));
  const Vec2 tau = static_map_torque(p, Vec2(u_fit, u_fit));
  const double defl_lift = 0.5 * (std::abs(d_plus[0]) + std::abs(d_minus[0]));
  const double defl_swing = 0.5 * (std::abs(d_plus[1]) + std::abs(d_minus[1]));
  check<ConvergenceError>(defl_lift > 1e-6 && defl_swing > 1e-6,
                          "fit_simple_from_full: static deflection is degenerate");
  out.kappa_lift = std::abs(tau[0]) / defl_lift;
  out.kappa_swing = std::abs(tau[1]) / defl_swing;
  return out;
}

LumpedSample lumped_sample(const RobotParams& p, const TransmissionState& s) {
  const ReflectedChain lift = reflect_chain(p.lift, s.q.head(kChainCoords));
  const ReflectedChain swing = reflect_chain(p.swing, s.q.tail(kChainCoords));
  const double I_leg_lift = p.leg.mass * p.leg.r * p.leg.r;
  const double I_leg_swing = I_leg_lift * p.leg.dir_y * p.leg.dir_y;
  LumpedSample out;
  out.I_lift = lift.inertia + I_leg_lift;
  out.I_swing = swing.inertia + I_leg_swing;
  out.kappa_lift = lift.stiffness;
  out.kappa_swing = swing.stiffness;
  return out;
}

}  // namespace flexquad::robot
