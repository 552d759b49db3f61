#include "flexquad/robot/chain.hpp"

namespace flexquad::robot {

dyn::ConstraintEval chain_constraints(const ChainParams& p, const Vec& q_c, const Vec& qdot_c) {
  check_dims(q_c.size(), kChainCoords, "chain_constraints: q");
  check_dims(qdot_c.size(), kChainCoords, "chain_constraints: qdot");

  const double t1 = q_c[1], t2 = q_c[2], t3 = q_c[3];
  const double s1 = std::sin(t1), c1 = std::cos(t1);
  const double s2 = std::sin(t2), c2 = std::cos(t2);
  const double s3 = std::sin(t3), c3 = std::cos(t3);

  dyn::ConstraintEval out;
  out.h = Vec(kChainConstraints);
  out.h[0] = t1 - q_c[0] / p.r_a;
  out.h[1] = p.l1 * c1 + p.l2 * c2 + p.l3 * c3 - p.d_x;
  out.h[2] = p.l1 * s1 + p.l2 * s2 + p.l3 * s3 - p.d_y;

  out.H = Mat::Zero(kChainConstraints, kChainCoords);
  out.H(0, 0) = -1.0 / p.r_a;
  out.H(0, 1) = 1.0;
  out.H(1, 1) = -p.l1 * s1;
  out.H(1, 2) = -p.l2 * s2;
  out.H(1, 3) = -p.l3 * s3;
  out.H(2, 1) = p.l1 * c1;
  out.H(2, 2) = p.l2 * c2;
  out.H(2, 3) = p.l3 * c3;

  out.H_qdot = out.H * qdot_c;

  const double w1 = qdot_c[1], w2 = qdot_c[2], w3 = qdot_c[3];
  out.Hdot_qdot = Vec(kChainConstraints);
  out.Hdot_qdot[0] = 0.0;
  out.Hdot_qdot[1] = -p.l1 * c1 * w1 * w1 - p.l2 * c2 * w2 * w2 - p.l3 * c3 * w3 * w3;
  out.Hdot_qdot[2] = -p.l1 * s1 * w1 * w1 - p.l2 * s2 * w2 * w2 - p.l3 * s3 * w3 * w3;
  return out;
}

double actuator_force(double u, double q_a, double qdot_a, const ChainParams& p) {
  if (!(std::abs(u) <= 1.0)) {
    throw InputOutOfRange("actuator_force: |u| = " + std::to_string(std::abs(u)) +
                          " exceeds normalized drive range");
  }
  return p.alpha_a * u - p.k_a * q_a - p.b_a * qdot_a;
}

Vec ChainConfiguration::q() const {
  Vec v(kChainCoords);
  v << q_a, theta1, theta2, theta3;
  return v;
}

ChainConfiguration solve_loop_closure(const ChainParams& p, double theta3) {
  // Two-link IK for (theta1, theta2) reaching T = d - l3 * e(theta3).
  const double tx = p.d_x - p.l3 * std::cos(theta3);
  const double ty = p.d_y - p.l3 * std::sin(theta3);
  const double d2 = tx * tx + ty * ty;
  const double d = std::sqrt(d2);
  const double lo = std::abs(p.l1 - p.l2), hi = p.l1 + p.l2;
  if (!(d > lo + 1e-12 && d < hi - 1e-12)) {
    throw ConvergenceError("solve_loop_closure: loop cannot close at theta3 = " +
                           std::to_string(theta3));
  }
  const double cos_inner = (p.l1 * p.l1 + d2 - p.l2 * p.l2) / (2.0 * p.l1 * d);
  const double inner = std::acos(std::clamp(cos_inner, -1.0, 1.0));
  const double base = std::atan2(ty, tx);

  ChainConfiguration best{};
  double best_err = std::numeric_limits<double>::infinity();
  for (const double sign : {1.0, -1.0}) {
    const double t1 = base + sign * inner;
    const double t2 = std::atan2(ty - p.l1 * std::sin(t1), tx - p.l1 * std::cos(t1));
    // Pick the elbow branch continuous with the rest configuration.
    const double e1 = std::remainder(t1 - p.theta_bar1, 2.0 * M_PI);
    const double e2 = std::remainder(t2 - p.theta_bar2, 2.0 * M_PI);
    const double err = e1 * e1 + e2 * e2;
    if (err < best_err) {
      best_err = err;
      best = ChainConfiguration{p.r_a * t1, t1, t2, theta3};
    }
  }
  return best;
}

Vec chain_velocity_from_output(const ChainParams& p, const Vec& q_c, double theta3_dot) {
  return chain_tangent(p, q_c) * theta3_dot;
}

Vec chain_tangent(const ChainParams& p, const Vec& q_c) {
  // Null-space direction of H normalized to dtheta3 = 1: solve the 2x2
  // closure block for (dtheta1, dtheta2).
  const double t1 = q_c[1], t2 = q_c[2], t3 = q_c[3];
  Mat2 A;
  A << -p.l1 * std::sin(t1), -p.l2 * std::sin(t2), p.l1 * std::cos(t1), p.l2 * std::cos(t2);
  const Vec2 rhs(p.l3 * std::sin(t3), -p.l3 * std::cos(t3));
  const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  if (std::abs(det) < 1e-18) {
    throw RankDeficientConstraints("chain_tangent: singular closure configuration");
  }
  const double dt1 = (rhs[0] * A(1, 1) - A(0, 1) * rhs[1]) / det;
  const double dt2 = (A(0, 0) * rhs[1] - rhs[0] * A(1, 0)) / det;
  Vec v(kChainCoords);
  v << p.r_a * dt1, dt1, dt2, 1.0;
  return v;
}

ReflectedChain reflect_chain(const ChainParams& p, const Vec& q_c) {
  const Vec v = chain_tangent(p, q_c);
  ReflectedChain r;
  r.inertia = p.m_a * v[0] * v[0] + p.I1 * v[1] * v[1] + p.I2 * v[2] * v[2] + p.I3 * v[3] * v[3];
  r.stiffness =
      p.k_a * v[0] * v[0] + p.k_f1 * v[1] * v[1] + p.k_f2 * v[2] * v[2] + p.k_f3 * v[3] * v[3];
  r.damping =
      p.b_a * v[0] * v[0] + p.b_f1 * v[1] * v[1] + p.b_f2 * v[2] * v[2] + p.b_f3 * v[3] * v[3];
  r.drive = v[0] * p.alpha_a;
  return r;
}

double static_map_gain(const ChainParams& p) {
  const ChainConfiguration rest = solve_loop_closure(p, p.theta_bar3);
  return reflect_chain(p, rest.q()).drive;
}

}  // namespace flexquad::robot
