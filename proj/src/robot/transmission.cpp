#include "flexquad/robot/transmission.hpp"

namespace flexquad::robot {

namespace {

struct ChainView {
  const ChainParams* p;
  int offset;
};

std::array<ChainView, 2> chains(const RobotParams& p) {
  return {ChainView{&p.lift, 0}, ChainView{&p.swing, 4}};
}

}  // namespace

Vec2 project_positions(const RobotParams& p, const TransmissionState& s) {
  return Vec2(s.q[kLiftOut] - p.lift.theta_bar3, s.q[kSwingOut] - p.swing.theta_bar3);
}

Vec2 project_velocities(const TransmissionState& s) {
  return Vec2(s.qdot[kLiftOut], s.qdot[kSwingOut]);
}

Vec2 project_accelerations(const Vec& qddot) {
  return Vec2(qddot[kLiftOut], qddot[kSwingOut]);
}

TransmissionAccel full_transmission_dynamics(const RobotParams& p, const TransmissionState& s,
                                             const Vec2& u, const Vec2& tau_hip,
                                             const dyn::BaumgarteGains& gains) {
  check_dims(s.q.size(), kTransCoords, "full_transmission_dynamics: q");
  check_dims(s.qdot.size(), kTransCoords, "full_transmission_dynamics: qdot");

  dyn::ManipulatorTerms terms;
  terms.M = Mat::Zero(kTransCoords, kTransCoords);
  terms.c = Vec::Zero(kTransCoords);
  terms.g = Vec::Zero(kTransCoords);
  terms.f_ext = Vec::Zero(kTransCoords);

  dyn::ConstraintEval con;
  con.h = Vec(kTransConstraints);
  con.H = Mat::Zero(kTransConstraints, kTransCoords);
  con.H_qdot = Vec(kTransConstraints);
  con.Hdot_qdot = Vec(kTransConstraints);

  int chain_idx = 0;
  for (const auto& [cp, off] : chains(p)) {
    const Vec q_c = s.q.segment(off, kChainCoords);
    const Vec qdot_c = s.qdot.segment(off, kChainCoords);
    const dyn::ConstraintEval ce = chain_constraints(*cp, q_c, qdot_c);
    if (ce.h.lpNorm<Eigen::Infinity>() > 1e-4) {
      throw ProjectFirst("full_transmission_dynamics: constraint residual " +
                         std::to_string(ce.h.lpNorm<Eigen::Infinity>()) +
                         " exceeds 1e-4; project the state first");
    }
    con.h.segment(3 * chain_idx, 3) = ce.h;
    con.H.block(3 * chain_idx, off, 3, kChainCoords) = ce.H;
    con.H_qdot.segment(3 * chain_idx, 3) = ce.H_qdot;
    con.Hdot_qdot.segment(3 * chain_idx, 3) = ce.Hdot_qdot;

    terms.M(off + 0, off + 0) = cp->m_a;
    terms.M(off + 1, off + 1) = cp->I1;
    terms.M(off + 2, off + 2) = cp->I2;
    terms.M(off + 3, off + 3) = cp->I3;

    terms.g[off + 1] = cp->k_f1 * (q_c[1] - cp->theta_bar1);
    terms.g[off + 2] = cp->k_f2 * (q_c[2] - cp->theta_bar2);
    terms.g[off + 3] = cp->k_f3 * (q_c[3] - cp->theta_bar3);

    terms.f_ext[off + 0] = actuator_force(u[chain_idx], q_c[0], qdot_c[0], *cp);
    terms.f_ext[off + 1] = -cp->b_f1 * qdot_c[1];
    terms.f_ext[off + 2] = -cp->b_f2 * qdot_c[2];
    terms.f_ext[off + 3] = -cp->b_f3 * qdot_c[3] + tau_hip[chain_idx];
    ++chain_idx;
  }

  // Leg point mass couples the two output coordinates.
  const double I_l = p.leg.mass * p.leg.r * p.leg.r;
  const double I_s = I_l * p.leg.dir_y * p.leg.dir_y;
  const Vec2 hip = project_positions(p, s);
  const Vec2 hip_dot = project_velocities(s);
  const Mat2 Ml = leg_mass_matrix(I_l, I_s, hip[1]);
  terms.M(kLiftOut, kLiftOut) += Ml(0, 0);
  terms.M(kLiftOut, kSwingOut) += Ml(0, 1);
  terms.M(kSwingOut, kLiftOut) += Ml(1, 0);
  terms.M(kSwingOut, kSwingOut) += Ml(1, 1);

  const Vec2 cl = leg_coriolis(I_l, I_s, hip[1], hip_dot[0], hip_dot[1]);
  terms.c[kLiftOut] += cl[0];
  terms.c[kSwingOut] += cl[1];

  const Vec2 gl = leg_gravity_torque(p.leg.mass, p.leg.r, p.gravity, p.leg.dir_y, p.leg.dir_z,
                                     hip[0], hip[1]);
  terms.g[kLiftOut] += gl[0];
  terms.g[kSwingOut] += gl[1];

  dyn::ConstrainedAccel sol;
  try {
    sol = dyn::constrained_accel(terms, con, gains);
  } catch (const RankDeficientConstraints& e) {
    throw ConvergenceError(std::string("full_transmission_dynamics: ") + e.what());
  }
  return TransmissionAccel{std::move(sol.qddot), std::move(sol.lambda)};
}

double transmission_constraint_residual(const RobotParams& p, const TransmissionState& s) {
  double r = 0.0;
  for (const auto& [cp, off] : chains(p)) {
    const dyn::ConstraintEval ce =
        chain_constraints(*cp, s.q.segment(off, kChainCoords), s.qdot.segment(off, kChainCoords));
    r = std::max(r, ce.h.lpNorm<Eigen::Infinity>());
  }
  return r;
}

double transmission_energy(const RobotParams& p, const TransmissionState& s, bool with_gravity) {
  double e = 0.0;
  for (const auto& [cp, off] : chains(p)) {
    const Vec q_c = s.q.segment(off, kChainCoords);
    const Vec qd = s.qdot.segment(off, kChainCoords);
    e += 0.5 * (cp->m_a * qd[0] * qd[0] + cp->I1 * qd[1] * qd[1] + cp->I2 * qd[2] * qd[2] +
                cp->I3 * qd[3] * qd[3]);
    e += 0.5 * cp->k_a * q_c[0] * q_c[0];
    const double d1 = q_c[1] - cp->theta_bar1;
    const double d2 = q_c[2] - cp->theta_bar2;
    const double d3 = q_c[3] - cp->theta_bar3;
    e += 0.5 * (cp->k_f1 * d1 * d1 + cp->k_f2 * d2 * d2 + cp->k_f3 * d3 * d3);
  }
  const double I_l = p.leg.mass * p.leg.r * p.leg.r;
  const double I_s = I_l * p.leg.dir_y * p.leg.dir_y;
  const Vec2 hip = project_positions(p, s);
  const Vec2 hip_dot = project_velocities(s);
  e += 0.5 * hip_dot.dot(leg_mass_matrix(I_l, I_s, hip[1]) * hip_dot);
  if (with_gravity) {
    e += leg_potential(p.leg.mass, p.leg.r, p.gravity, p.leg.dir_y, p.leg.dir_z, hip[0], hip[1]);
  }
  return e;
}

TransmissionState transmission_at_rest(const RobotParams& p) {
  return transmission_from_hip(p, Vec2::Zero(), Vec2::Zero());
}

TransmissionState transmission_from_hip(const RobotParams& p, const Vec2& q_s,
                                        const Vec2& qdot_s) {
  TransmissionState s;
  int chain_idx = 0;
  for (const auto& [cp, off] : chains(p)) {
    const ChainConfiguration conf =
        solve_loop_closure(*cp, cp->theta_bar3 + q_s[chain_idx]);
    s.q.segment(off, kChainCoords) = conf.q();
    s.qdot.segment(off, kChainCoords) =
        chain_velocity_from_output(*cp, conf.q(), qdot_s[chain_idx]);
    ++chain_idx;
  }
  return s;
}

}  // namespace flexquad::robot
