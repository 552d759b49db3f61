#include "doctest.h"
#include "flexquad/robot/fitting.hpp"
#include "flexquad/robot/world.hpp"

using namespace flexquad;
using namespace flexquad::robot;

namespace {

RobotParams default_params() {
  static RobotParams p = RobotParams::load(std::string(FQ_SOURCE_DIR) + "/config/robot_default.cfg");
  return p;
}

RobotParams undamped_params() {
  RobotParams p = default_params();
  for (ChainParams* c : {&p.lift, &p.swing}) {
    c->b_f1 = c->b_f2 = c->b_f3 = 0.0;
    c->b_a = 0.0;
  }
  p.gravity = 1e-12;
  p.simple.gravity = p.gravity;
  return p;
}

}  // namespace

TEST_CASE("robot params load and reject unknown keys") {
  const RobotParams p = default_params();
  CHECK(p.body.length == doctest::Approx(0.045));
  CHECK(p.body.mass == doctest::Approx(1.43e-3));

  Config bad = Config::parse_string("schema_version = 1\nbodyy.mass = 2\n");
  CHECK_THROWS_AS(RobotParams::from_config(bad), ConfigError);

  Config wrong_version = Config::parse_string("schema_version = 99\n");
  CHECK_THROWS_AS(RobotParams::from_config(wrong_version), ConfigError);
}

TEST_CASE("chain_constraints closed symmetric configuration") {
  ChainParams c;
  c.l1 = c.l2 = c.l3 = 1.0;
  c.d_x = 1.0;
  c.d_y = 0.0;
  c.r_a = 0.5;
  Vec q(4);
  q << 0.5 * M_PI / 2.0 * 2.0, M_PI / 2.0, 0.0, -M_PI / 2.0;  // q_a = r_a * pi/2
  q[0] = c.r_a * M_PI / 2.0;
  const auto ce = chain_constraints(c, q, Vec::Zero(4));
  CHECK(ce.h.lpNorm<Eigen::Infinity>() < 1e-15);

  // q_a perturbed by delta with angles fixed: h1 = -delta / r_a exactly.
  Vec q2 = q;
  q2[0] += 1e-3;
  const auto ce2 = chain_constraints(c, q2, Vec::Zero(4));
  CHECK(ce2.h[0] == doctest::Approx(-1e-3 / c.r_a).epsilon(1e-12));
}

TEST_CASE("chain Jacobian and acceleration bias match finite differences") {
  const RobotParams p = default_params();
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const double t3 = p.lift.theta_bar3 + rng.uniform(-0.3, 0.3);
    const ChainConfiguration conf = solve_loop_closure(p.lift, t3);
    Vec q = conf.q();
    Vec qd = chain_velocity_from_output(p.lift, q, rng.uniform(-20, 20));
    const auto ce = chain_constraints(p.lift, q, qd);

    const double eps = 1e-7;
    for (int j = 0; j < kChainCoords; ++j) {
      Vec qp = q, qm = q;
      qp[j] += eps;
      qm[j] -= eps;
      const Vec col = (chain_constraints(p.lift, qp, Vec::Zero(4)).h -
                       chain_constraints(p.lift, qm, Vec::Zero(4)).h) /
                      (2.0 * eps);
      for (int i = 0; i < kChainConstraints; ++i) {
        const double denom = std::max(1.0, std::abs(col[i]));
        CHECK(std::abs(ce.H(i, j) - col[i]) / denom < 1e-6);
      }
    }

    // Hdot qdot via finite difference of H(q(t)) qdot along the motion.
    Vec qp = q + eps * qd, qm = q - eps * qd;
    const Vec hd_fd = ((chain_constraints(p.lift, qp, Vec::Zero(4)).H -
                        chain_constraints(p.lift, qm, Vec::Zero(4)).H) /
                       (2.0 * eps)) *
                      qd;
    CHECK((ce.Hdot_qdot - hd_fd).lpNorm<Eigen::Infinity>() <
          1e-5 * (1.0 + hd_fd.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("actuator force definition and isolated equilibrium") {
  const ChainParams& c = default_params().lift;
  CHECK(actuator_force(0.0, 0.0, 0.0, c) == 0.0);
  CHECK(actuator_force(1.0, 0.0, 0.0, c) == doctest::Approx(c.alpha_a));
  CHECK_THROWS_AS(actuator_force(1.2, 0.0, 0.0, c), InputOutOfRange);

  // Unloaded static deflection of the isolated actuator spring.
  const double u = 0.6;
  const double q_star = c.alpha_a * u / c.k_a;
  CHECK(actuator_force(u, q_star, 0.0, c) == doctest::Approx(0.0));
}

TEST_CASE("loop closure solves to rest and fails out of reach") {
  const RobotParams p = default_params();
  const ChainConfiguration rest = solve_loop_closure(p.lift, p.lift.theta_bar3);
  CHECK(rest.theta1 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rest.theta2 == doctest::Approx(p.lift.theta_bar2).epsilon(1e-9));
  CHECK(rest.q_a == doctest::Approx(0.0).epsilon(1e-9));

  // Pointing the output link at the closure point collapses the two-link
  // reach below |l1 - l2|.
  CHECK_THROWS_AS(solve_loop_closure(p.lift, std::atan2(p.lift.d_y, p.lift.d_x)),
                  ConvergenceError);

  // Velocity completion satisfies H qdot = 0.
  const Vec qd = chain_velocity_from_output(p.lift, rest.q(), 3.0);
  const auto ce = chain_constraints(p.lift, rest.q(), qd);
  CHECK(ce.H_qdot.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("transmission rest equilibrium (gravity-free)") {
  const RobotParams p = undamped_params();
  const TransmissionState rest = transmission_at_rest(p);
  const TransmissionAccel acc = full_transmission_dynamics(p, rest, Vec2::Zero(), Vec2::Zero());
  CHECK(acc.qddot.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(acc.lambda.lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("transmission responds along the kinematic sensitivity direction") {
  const RobotParams p = undamped_params();
  const TransmissionState rest = transmission_at_rest(p);
  const Vec tangent = chain_tangent(p.lift, rest.q.head(4));
  const double dtheta3_dqa = 1.0 / tangent[0];  // d theta3 / d q_a along the manifold

  const double u = 0.2;
  const TransmissionAccel acc =
      full_transmission_dynamics(p, rest, Vec2(u, 0.0), Vec2::Zero());
  CHECK(std::abs(acc.qddot[kLiftOut]) > 1e-3);
  CHECK(acc.qddot[kLiftOut] * (u * dtheta3_dqa) > 0.0);
}

TEST_CASE("transmission dynamics pre-check demands small constraint residual") {
  const RobotParams p = default_params();
  TransmissionState s = transmission_at_rest(p);
  s.q[1] += 0.05;  // off-manifold
  CHECK_THROWS_AS(full_transmission_dynamics(p, s, Vec2::Zero(), Vec2::Zero()), ProjectFirst);
}

TEST_CASE("undamped unactuated transmission conserves energy over 100 ms") {
  RobotParams p = undamped_params();
  FullWorld world(p, WorldOptions{.contacts = false, .body_fixed = true});
  for (int leg = 0; leg < kNumLegs; ++leg) {
    world.legs()[leg] =
        transmission_from_hip(p, Vec2(0.12 - 0.03 * leg, -0.10 + 0.02 * leg), Vec2(1.5, -1.0));
  }
  Vec x = world.pack_clamped_state();
  const auto deriv = [&](const Vec& s) { return world.clamped_free_derivative(s); };

  world.unpack_clamped_state(x);
  const double e0 = world.clamped_energy(false);
  REQUIRE(e0 > 0.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    x = integrate_step(deriv, x, kSubstepDt, IntegrationMethod::kRk4);
    world.unpack_clamped_state(x);
    worst = std::max(worst, std::abs(world.clamped_energy(false) - e0));
  }
  CHECK(worst / e0 < 1e-3);
}

TEST_CASE("simple hip equilibrium and decoupled response") {
  const RobotParams p = default_params();
  const Vec2 balance = simple_potential_torque(p.simple, Vec2::Zero());
  const Vec2 acc = simple_hip_dynamics(p.simple, Vec2::Zero(), Vec2::Zero(), balance);
  CHECK(acc.norm() < 1e-9);

  SimpleHipParams free = p.simple;
  free.kappa_lift = free.kappa_swing = 0.0;
  free.b_lift = free.b_swing = 0.0;
  free.gravity = 1e-300;
  const Vec2 u(3e-5, -2e-5);
  const Vec2 a = simple_hip_dynamics(free, Vec2(0.2, 0.0), Vec2::Zero(), u);
  CHECK(a[0] == doctest::Approx(u[0] / free.I_lift));
  CHECK(a[1] == doctest::Approx(u[1] / free.I_swing));
}

TEST_CASE("simple hip mass matrix and Coriolis match the Lagrangian oracle") {
  const RobotParams p = default_params();
  const SimpleHipParams& sp = p.simple;
  const double uy = std::sqrt(sp.I_swing / sp.I_lift);
  const double uz = -std::sqrt(1.0 - uy * uy);
  LegGeometry geom;
  geom.r = 1.0;
  geom.mass = 1.0;
  geom.dir_y = uy;
  geom.dir_z = uz;

  // Kinetic energy from raw kinematics: T = 1/2 I_l |d/dt dir(q(t))|^2 with
  // the direction differentiated numerically along the motion.
  const auto kinetic = [&](const Vec2& q, const Vec2& qd) {
    const double eps = 1e-6;
    const Vec3 up = leg_direction(geom, 1.0, q[0] + eps * qd[0], q[1] + eps * qd[1]);
    const Vec3 um = leg_direction(geom, 1.0, q[0] - eps * qd[0], q[1] - eps * qd[1]);
    const Vec3 v = (up - um) / (2.0 * eps);
    return 0.5 * sp.I_lift * v.squaredNorm();
  };

  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec2 q(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    const Vec2 qd(rng.uniform(-20, 20), rng.uniform(-20, 20));

    // Mass matrix via second differences of T in the rates.
    const Mat2 M = simple_mass_matrix(sp, q);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double eps = 1e-4;
        Vec2 ei = Vec2::Zero(), ej = Vec2::Zero();
        ei[i] = eps;
        ej[j] = eps;
        const double tpp = kinetic(q, ei + ej), tpm = kinetic(q, ei - ej);
        const double tmp = kinetic(q, -ei + ej), tmm = kinetic(q, -ei - ej);
        const double Mij = (tpp - tpm - tmp + tmm) / (4.0 * eps * eps);
        CHECK(std::abs(M(i, j) - Mij) / sp.I_lift < 1e-4);
      }
    }

    // Coriolis vector: c = Mdot qd - 1/2 d/dq (qd^T M qd).
    const double eps = 1e-6;
    Mat2 Mdot = Mat2::Zero();
    Vec2 grad_quad = Vec2::Zero();
    for (int k = 0; k < 2; ++k) {
      Vec2 qp = q, qm = q;
      qp[k] += eps;
      qm[k] -= eps;
      const Mat2 dM = (simple_mass_matrix(sp, qp) - simple_mass_matrix(sp, qm)) / (2.0 * eps);
      Mdot += dM * qd[k];
      grad_quad[k] = qd.dot(dM * qd);
    }
    const Vec2 c_oracle = Mdot * qd - 0.5 * grad_quad;
    const Vec2 c = simple_coriolis(sp, q, qd);
    CHECK((c - c_oracle).norm() <= 1e-6 * (1.0 + c_oracle.norm()));
  }
}

TEST_CASE("projection: rest is zero and velocities match trajectory differences") {
  RobotParams p = undamped_params();
  FullWorld world(p, WorldOptions{.contacts = false, .body_fixed = true});
  CHECK(world.hip_positions().lpNorm<Eigen::Infinity>() < 1e-12);

  world.legs()[0] = transmission_from_hip(p, Vec2(0.15, -0.08), Vec2::Zero());
  Vec x = world.pack_clamped_state();
  const auto deriv = [&](const Vec& s) { return world.clamped_free_derivative(s); };

  std::vector<Vec> qs_hist, qsdot_hist;
  for (int i = 0; i < 400; ++i) {
    x = integrate_step(deriv, x, kSubstepDt, IntegrationMethod::kRk4);
    world.unpack_clamped_state(x);
    qs_hist.push_back(world.hip_positions());
    qsdot_hist.push_back(world.hip_velocities());
  }
  // Five-point stencil in time vs the projected velocities.
  double num = 0.0, den = 0.0;
  for (std::size_t k = 2; k + 2 < qs_hist.size(); ++k) {
    const Vec fd = (-qs_hist[k + 2] + 8.0 * qs_hist[k + 1] - 8.0 * qs_hist[k - 1] +
                    qs_hist[k - 2]) /
                   (12.0 * kSubstepDt);
    num += (fd - qsdot_hist[k]).squaredNorm();
    den += qsdot_hist[k].squaredNorm();
  }
  CHECK(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("projection is invariant to re-solving the loop closure from q_a") {
  const RobotParams p = default_params();
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec2 q_s(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    const TransmissionState s = transmission_from_hip(p, q_s, Vec2::Zero());

    // Re-solve (theta2, theta3) from the actuator coordinates alone.
    int idx = 0;
    for (const ChainParams* cp : {&p.lift, &p.swing}) {
      const double q_a = s.q[4 * idx + 0];
      const double t1 = q_a / cp->r_a;
      const double tx = cp->d_x - cp->l1 * std::cos(t1);
      const double ty = cp->d_y - cp->l1 * std::sin(t1);
      const double d2 = tx * tx + ty * ty;
      const double cos_inner = (cp->l2 * cp->l2 + d2 - cp->l3 * cp->l3) /
                               (2.0 * cp->l2 * std::sqrt(d2));
      const double inner = std::acos(std::clamp(cos_inner, -1.0, 1.0));
      const double base = std::atan2(ty, tx);
      double best_t3 = 0.0, best_err = 1e9;
      for (const double sign : {1.0, -1.0}) {
        const double t2 = base + sign * inner;
        const double t3 = std::atan2(ty - cp->l2 * std::sin(t2), tx - cp->l2 * std::cos(t2));
        const double err = std::abs(std::remainder(t3 - cp->theta_bar3, 2.0 * M_PI) - q_s[idx]);
        if (err < best_err) {
          best_err = err;
          best_t3 = t3;
        }
      }
      const double resolved = std::remainder(best_t3 - cp->theta_bar3, 2.0 * M_PI);
      CHECK(resolved == doctest::Approx(q_s[idx]).epsilon(1e-9));
      ++idx;
    }
  }
}

TEST_CASE("contact force model") {
  ContactParams cp;
  cp.k_n = 1000.0;
  cp.b_n = 0.0;
  cp.mu = 0.6;
  cp.v_s = 0.001;

  CHECK(contact_force(Vec3(0, 0, 0.01), Vec3(1, 1, -1), cp).norm() == 0.0);

  const Vec3 static_pen = contact_force(Vec3(0, 0, -1e-4), Vec3::Zero(), cp);
  CHECK(static_pen.z() == doctest::Approx(0.1));
  CHECK(static_pen.head(2).norm() == 0.0);

  // Fast sliding saturates at mu * Fn.
  const Vec3 sliding = contact_force(Vec3(0, 0, -1e-4), Vec3(0.5, 0, 0), cp);
  CHECK(std::abs(std::abs(sliding.x()) - cp.mu * 0.1) / (cp.mu * 0.1) < 0.01);
  CHECK(sliding.x() < 0.0);

  // Tangential never exceeds mu * Fn; force is continuous in depth.
  Rng rng(43);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 pos(0, 0, rng.uniform(-2e-4, 1e-5));
    const Vec3 vel(rng.gaussian(0, 0.1), rng.gaussian(0, 0.1), rng.gaussian(0, 0.05));
    const Vec3 f = contact_force(pos, vel, cp);
    CHECK(f.head(2).norm() <= cp.mu * f.z() + 1e-12);
  }
  const Vec3 just_below = contact_force(Vec3(0, 0, -1e-12), Vec3::Zero(), cp);
  CHECK(just_below.norm() < 1e-8);
}

TEST_CASE("leg PD controller law and saturation") {
  RobotParams p = default_params();
  const Vec zero = Vec::Zero(kActuatedDof);

  CHECK(leg_pd_controller(zero, zero, zero, p, PdMode::kVoltage).norm() == 0.0);

  p.pd.kp_voltage = 1.0;
  p.pd.kd_voltage = 0.0;
  Vec targets = zero;
  targets[0] = 0.1;
  const Vec u = leg_pd_controller(targets, zero, zero, p, PdMode::kVoltage);
  CHECK(u[0] == doctest::Approx(0.1));

  // Targets beyond the joint range are clipped, not an error.
  targets[0] = 10.0;
  const Vec clipped = leg_pd_controller(targets, zero, zero, p, PdMode::kVoltage);
  CHECK(clipped[0] == doctest::Approx(std::min(1.0, p.joint_range * p.pd.kp_voltage)));
}

TEST_CASE("torque PD step response settles within 40 ms") {
  const RobotParams p = default_params();
  Vec2 q = Vec2::Zero(), qd = Vec2::Zero();
  const double target = 0.2;
  Vec targets = Vec::Zero(kActuatedDof);
  targets[0] = target;
  targets[1] = -target;

  double settle_time = -1.0;
  for (int i = 0; i < 1600; ++i) {
    Vec q8 = Vec::Zero(kActuatedDof), qd8 = Vec::Zero(kActuatedDof);
    q8.segment(0, 2) = q;
    qd8.segment(0, 2) = qd;
    const Vec u = leg_pd_controller(targets, q8, qd8, p, PdMode::kTorque);
    const Vec2 acc = simple_hip_dynamics(p.simple, q, qd, Vec2(u.segment(0, 2)));
    qd += kSubstepDt * acc;
    q += kSubstepDt * qd;
    const double err = std::max(std::abs(q[0] - target), std::abs(q[1] + target));
    if (err < 0.02 * target) {
      settle_time = (i + 1) * kSubstepDt;
      break;
    }
  }
  CHECK(settle_time > 0.0);
  CHECK(settle_time < 0.040);
}

TEST_CASE("full robot settles to the static penetration on flat ground") {
  const RobotParams p = default_params();
  FullWorld world(p, WorldOptions{});
  const Vec targets = Vec::Zero(kActuatedDof);
  for (int i = 0; i < 8000; ++i) world.substep_pd(targets);

  // Total normal load carries the weight: mean penetration = m g / (4 k_n).
  const double expected = p.body.mass * p.gravity / (4.0 * p.contact.k_n);
  const Mat3 R = world.body().quat.rotation_matrix();
  double mean_pen = 0.0;
  const Vec q_s = world.hip_positions();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 foot =
        world.body().pos + R * foot_position_body(p, leg, q_s[2 * leg], q_s[2 * leg + 1]);
    mean_pen += -foot.z() / kNumLegs;
  }
  CHECK(std::abs(mean_pen - expected) / expected < 0.05);
  CHECK(world.body().vel.norm() < 1e-3);
}

TEST_CASE("free-floating body conserves momentum with no forces") {
  RobotParams p = default_params();
  FullWorld world(p, WorldOptions{.contacts = false, .body_fixed = false, .gravity = false});
  world.mutable_body().vel = Vec3(0.05, -0.02, 0.01);
  world.mutable_body().omega = Vec3(0, 0, 2.0);  // principal axis spin
  const Vec3 p0 = p.body.mass * world.body().vel;

  const Vec targets = Vec::Zero(kActuatedDof);
  for (int i = 0; i < 200; ++i) {
    const Vec3 before = p.body.mass * world.body().vel;
    world.substep_pd(targets);
    const Vec3 after = p.body.mass * world.body().vel;
    CHECK((after - before).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  CHECK((p.body.mass * world.body().vel - p0).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(world.body().omega[2] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("identical inputs give bit-identical trajectories") {
  const RobotParams p = default_params();
  FullWorld a(p, WorldOptions{}), b(p, WorldOptions{});
  Rng rng(47);
  for (int tick = 0; tick < 3; ++tick) {
    Vec targets(kActuatedDof);
    for (int i = 0; i < kActuatedDof; ++i) targets[i] = rng.uniform(-0.2, 0.2);
    a.policy_step(targets);
    b.policy_step(targets);
  }
  CHECK((a.body().pos - b.body().pos).norm() == 0.0);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    CHECK((a.legs()[leg].q - b.legs()[leg].q).norm() == 0.0);
  }
}

TEST_CASE("mirroring the world mirrors the next state (full model)") {
  const RobotParams p = default_params();
  FullWorld world(p, WorldOptions{});
  FullWorld mirrored(p, WorldOptions{});

  // Drive into an asymmetric state first.
  Rng rng(53);
  Vec targets(kActuatedDof);
  for (int i = 0; i < kActuatedDof; ++i) targets[i] = rng.uniform(-0.25, 0.25);
  for (int i = 0; i < 400; ++i) world.substep_pd(targets);

  mirrored.mutable_body() = mirror_body(world.body());
  mirrored.legs()[0] = world.legs()[1];
  mirrored.legs()[1] = world.legs()[0];
  mirrored.legs()[2] = world.legs()[3];
  mirrored.legs()[3] = world.legs()[2];

  const Vec mirrored_targets = mirror_leg_vector(targets);
  for (int i = 0; i < 100; ++i) {
    world.substep_pd(targets);
    mirrored.substep_pd(mirrored_targets);
  }

  const BodyState expect = mirror_body(world.body());
  CHECK((mirrored.body().pos - expect.pos).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((mirrored.body().vel - expect.vel).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((mirrored.body().omega - expect.omega).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(std::abs(mirrored.body().quat.w - expect.quat.w) <= 1e-10);
  CHECK(std::abs(mirrored.body().quat.x - expect.quat.x) <= 1e-10);
  CHECK(std::abs(mirrored.body().quat.y - expect.quat.y) <= 1e-10);
  CHECK(std::abs(mirrored.body().quat.z - expect.quat.z) <= 1e-10);
  CHECK((mirrored.hip_positions() - mirror_leg_vector(world.hip_positions()))
            .lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("constraint drift stays below 1e-6 over a 300 ms actuated rollout") {
  const RobotParams p = default_params();
  FullWorld world(p, WorldOptions{});
  Rng rng(59);
  double drift = 0.0;
  for (int tick = 0; tick < 75; ++tick) {
    Vec targets(kActuatedDof);
    for (int i = 0; i < kActuatedDof; ++i) targets[i] = rng.uniform(-0.3, 0.3);
    for (int i = 0; i < kSubstepsPerPolicyTick; ++i) {
      world.substep_pd(targets);
      drift = std::max(drift, world.max_constraint_residual());
    }
  }
  CHECK(drift < 1e-6);
}

TEST_CASE("lumped simple robot stands still under zero targets") {
  const RobotParams p = default_params();
  LumpedWorld world(p, WorldOptions{}, LumpedVariant::kSimple);
  const Vec targets = Vec::Zero(kActuatedDof);
  for (int i = 0; i < 2000; ++i) world.substep_pd(targets);
  CHECK(world.body().vel.norm() < 1e-3);
  CHECK(std::abs(world.body().pos.z() - standing_body_height(p)) < 5e-4);
}

TEST_CASE("hybrid world with the static map moves like the simple world") {
  const RobotParams p = default_params();
  HipDrive static_drive;
  static_drive.hold_substeps = 1;
  static_drive.map = [&p](int, const Vec2&, const Vec2&, const Vec2& u) {
    return static_map_torque(p, u);
  };
  LumpedWorld hybrid(p, WorldOptions{}, LumpedVariant::kHybrid, static_drive);
  LumpedWorld simple(p, WorldOptions{}, LumpedVariant::kSimple);

  Vec targets = Vec::Zero(kActuatedDof);
  for (int i = 0; i < kActuatedDof; ++i) targets[i] = (i % 2 == 0) ? 0.15 : -0.1;
  for (int i = 0; i < 4000; ++i) {
    hybrid.substep_pd(targets);
    simple.substep_pd(targets);
  }
  const Vec qh = hybrid.hip_positions();
  const Vec qs = simple.hip_positions();
  for (int i = 0; i < kActuatedDof; ++i) {
    CHECK(qh[i] * targets[i] > 0.0);  // deflects toward the target
    CHECK(std::abs(qh[i] - qs[i]) < 0.5 * std::abs(targets[i]));
  }
}

TEST_CASE("mirror symmetry holds for the lumped world too") {
  const RobotParams p = default_params();
  LumpedWorld world(p, WorldOptions{}, LumpedVariant::kSimple);
  LumpedWorld mirrored(p, WorldOptions{}, LumpedVariant::kSimple);

  Rng rng(61);
  Vec targets(kActuatedDof);
  for (int i = 0; i < kActuatedDof; ++i) targets[i] = rng.uniform(-0.25, 0.25);
  for (int i = 0; i < 1000; ++i) world.substep_pd(targets);

  mirrored.mutable_body() = mirror_body(world.body());
  const Vec q = world.hip_positions(), qd = world.hip_velocities();
  const Vec qm = mirror_leg_vector(q), qdm = mirror_leg_vector(qd);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    mirrored.hip_q()[leg] = qm.segment(2 * leg, 2);
    mirrored.hip_qdot()[leg] = qdm.segment(2 * leg, 2);
  }
  const Vec mt = mirror_leg_vector(targets);
  for (int i = 0; i < 500; ++i) {
    world.substep_pd(targets);
    mirrored.substep_pd(mt);
  }
  const BodyState expect = mirror_body(world.body());
  CHECK((mirrored.body().pos - expect.pos).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((mirrored.hip_positions() - mirror_leg_vector(world.hip_positions()))
            .lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("fitted simple parameters reproduce the full model's statics") {
  const RobotParams p = default_params();
  const SimpleHipParams fit = fit_simple_from_full(p);

  // The shipped config was generated by this fit.
  CHECK(std::abs(fit.I_lift - p.simple.I_lift) / fit.I_lift < 0.05);
  CHECK(std::abs(fit.I_swing - p.simple.I_swing) / fit.I_swing < 0.05);
  CHECK(std::abs(fit.kappa_lift - p.simple.kappa_lift) / fit.kappa_lift < 0.05);
  CHECK(std::abs(fit.kappa_swing - p.simple.kappa_swing) / fit.kappa_swing < 0.05);

  // Static deflections match under the static map at the fit point.
  const Vec2 defl_full = settle_static_deflection(p, Vec2(0.5, 0.5));
  const Vec2 tau = static_map_torque(p, Vec2(0.5, 0.5));
  const Vec2 defl_simple(tau[0] / fit.kappa_lift, tau[1] / fit.kappa_swing);
  CHECK(std::abs(defl_full[0] - defl_simple[0]) / std::abs(defl_full[0]) < 0.02);
  CHECK(std::abs(defl_full[1] - defl_simple[1]) / std::abs(defl_full[1]) < 0.02);
}

TEST_CASE("oracle lumped sample matches a hand composition at rest") {
  const RobotParams p = default_params();
  const TransmissionState rest = transmission_at_rest(p);
  const LumpedSample sample = lumped_sample(p, rest);

  // Hand composition: finite-difference the closure solve for the dependent
  // rates, then sum m v^2 / I w^2 contributions term by term.
  const double eps = 1e-6;
  const ChainConfiguration plus = solve_loop_closure(p.lift, p.lift.theta_bar3 + eps);
  const ChainConfiguration minus = solve_loop_closure(p.lift, p.lift.theta_bar3 - eps);
  const double dqa = (plus.q_a - minus.q_a) / (2.0 * eps);
  const double dt1 = (plus.theta1 - minus.theta1) / (2.0 * eps);
  const double dt2 = (plus.theta2 - minus.theta2) / (2.0 * eps);
  const double I_leg = p.leg.mass * p.leg.r * p.leg.r;
  const double by_hand = p.lift.m_a * dqa * dqa + p.lift.I1 * dt1 * dt1 +
                         p.lift.I2 * dt2 * dt2 + p.lift.I3 + I_leg;
  CHECK(sample.I_lift == doctest::Approx(by_hand).epsilon(1e-4));

  const double kappa_hand =
      p.lift.k_a * dqa * dqa + p.lift.k_f1 * dt1 * dt1 + p.lift.k_f2 * dt2 * dt2 + p.lift.k_f3;
  CHECK(sample.kappa_lift == doctest::Approx(kappa_hand).epsilon(1e-4));

  // Configuration dependence exists: deflected samples differ from rest.
  const LumpedSample deflected =
      lumped_sample(p, transmission_from_hip(p, Vec2(0.25, 0.2), Vec2::Zero()));
  CHECK(std::abs(deflected.kappa_lift - sample.kappa_lift) / sample.kappa_lift > 0.01);
}
