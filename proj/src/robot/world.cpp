#include "flexquad/robot/world.hpp"

namespace flexquad::robot {

Vec leg_pd_controller(const Vec& targets8, const Vec& q_s8, const Vec& qdot_s8,
                      const RobotParams& params, PdMode mode) {
  check_dims(targets8.size(), kActuatedDof, "leg_pd_controller: targets");
  const double range = params.joint_range;
  Vec u(kActuatedDof);
  for (int i = 0; i < kActuatedDof; ++i) {
    const double target = std::clamp(targets8[i], -range, range);
    const double err = target - q_s8[i];
    if (mode == PdMode::kVoltage) {
      u[i] = std::clamp(params.pd.kp_voltage * err - params.pd.kd_voltage * qdot_s8[i], -1.0, 1.0);
    } else {
      const double limit = params.pd.torque_limit(i % 2);
      u[i] = std::clamp(params.pd.kp_torque * err - params.pd.kd_torque * qdot_s8[i], -limit,
                        limit);
    }
  }
  return u;
}

ContactResult evaluate_contacts(const RobotParams& params, const BodyState& body,
                                const Vec& q_s8, const Vec& qdot_s8) {
  ContactResult out;
  const Mat3 R = body.quat.rotation_matrix();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double tl = q_s8[2 * leg], ts = q_s8[2 * leg + 1];
    const Vec3 foot_body = foot_position_body(params, leg, tl, ts);
    const Eigen::Matrix<double, 3, 2> J = foot_jacobian_body(params, leg, tl, ts);
    const Vec2 hip_dot(qdot_s8[2 * leg], qdot_s8[2 * leg + 1]);

    const Vec3 foot_world = body.pos + R * foot_body;
    const Vec3 foot_vel_world = body.vel + R * (body.omega.cross(foot_body) + J * hip_dot);

    const Vec3 F = contact_force(foot_world, foot_vel_world, params.contact);
    out.foot_force_world[leg] = F;
    if (F.isZero(0.0)) continue;
    const Vec3 F_body = R.transpose() * F;
    out.hip_torque[leg] = J.transpose() * F_body;
    out.body_force_world += F;
    out.body_torque_body += foot_body.cross(F_body);
  }
  return out;
}

BodyState mirror_body(const BodyState& b) {
  BodyState m;
  m.pos = Vec3(b.pos.x(), -b.pos.y(), b.pos.z());
  m.quat = UnitQuaternion{b.quat.w, -b.quat.x, b.quat.y, -b.quat.z};
  m.vel = Vec3(b.vel.x(), -b.vel.y(), b.vel.z());
  m.omega = Vec3(-b.omega.x(), b.omega.y(), -b.omega.z());
  return m;
}

Vec mirror_leg_vector(const Vec& v8) {
  check_dims(v8.size(), kActuatedDof, "mirror_leg_vector");
  Vec m(kActuatedDof);
  m.segment(0, 2) = v8.segment(2, 2);  // FL <- FR
  m.segment(2, 2) = v8.segment(0, 2);
  m.segment(4, 2) = v8.segment(6, 2);  // HL <- HR
  m.segment(6, 2) = v8.segment(4, 2);
  return m;
}

double standing_body_height(const RobotParams& params) {
  return -(params.body.mount_z + params.leg.r * params.leg.dir_z);
}

namespace {

void body_semi_implicit_step(const RobotParams& params, const WorldOptions& options,
                             BodyState* body, const Vec3& force_world, const Vec3& torque_body,
                             double dt) {
  if (options.body_fixed) return;
  Vec3 accel = force_world / params.body.mass;
  if (options.gravity) accel.z() -= params.gravity;
  const Vec3& I = params.body.inertia;
  const Vec3 Iw(I.x() * body->omega.x(), I.y() * body->omega.y(), I.z() * body->omega.z());
  const Vec3 ang_accel =
      (torque_body - body->omega.cross(Iw)).cwiseQuotient(I);

  body->vel += dt * accel;
  body->omega += dt * ang_accel;
  body->pos += dt * body->vel;
  body->quat = quat_step(body->quat, body->omega, dt);
}

}  // namespace

// ---------------------------------------------------------------------------

FullWorld::FullWorld(RobotParams params, WorldOptions options)
    : params_(std::move(params)), options_(options) {
  reset();
}

void FullWorld::reset() {
  body_ = BodyState{};
  body_.pos.z() = standing_body_height(params_);
  for (auto& leg : legs_) leg = transmission_at_rest(params_);
  last_hip_accel_.setZero();
  last_drive_.setZero();
  time_ = 0.0;
}

Vec FullWorld::hip_positions() const {
  Vec q_s(kActuatedDof);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    q_s.segment(2 * leg, 2) = project_positions(params_, legs_[leg]);
  }
  return q_s;
}

Vec FullWorld::hip_velocities() const {
  Vec qd(kActuatedDof);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    qd.segment(2 * leg, 2) = project_velocities(legs_[leg]);
  }
  return qd;
}

double FullWorld::max_constraint_residual() const {
  double r = 0.0;
  for (const auto& leg : legs_) {
    r = std::max(r, transmission_constraint_residual(params_, leg));
  }
  return r;
}

void FullWorld::substep_raw(const Vec& u8, double dt) { substep_with_drive(u8, dt); }

void FullWorld::substep_pd(const Vec& targets8, double dt) {
  substep_with_drive(
      leg_pd_controller(targets8, hip_positions(), hip_velocities(), params_, PdMode::kVoltage),
      dt);
}

void FullWorld::policy_step(const Vec& targets8) {
  for (int i = 0; i < kSubstepsPerPolicyTick; ++i) substep_pd(targets8);
}

void FullWorld::substep_with_drive(const Vec& u8, double dt) {
  check_dims(u8.size(), kActuatedDof, "FullWorld::substep: drive");
  ContactResult contacts;
  if (options_.contacts) {
    contacts = evaluate_contacts(params_, body_, hip_positions(), hip_velocities());
  }

  std::array<TransmissionAccel, kNumLegs> accels;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    accels[leg] = full_transmission_dynamics(params_, legs_[leg], u8.segment(2 * leg, 2),
                                             contacts.hip_torque[leg], options_.baumgarte);
    last_hip_accel_.segment(2 * leg, 2) = project_accelerations(accels[leg].qddot);
  }
  last_drive_ = u8;

  body_semi_implicit_step(params_, options_, &body_, contacts.body_force_world,
                          contacts.body_torque_body, dt);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    legs_[leg].qdot += dt * accels[leg].qddot;
    legs_[leg].q += dt * legs_[leg].qdot;
  }
  time_ += dt;
}

Vec FullWorld::pack_clamped_state() const {
  Vec x(2 * kNumLegs * kTransCoords);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    x.segment(leg * kTransCoords, kTransCoords) = legs_[leg].q;
    x.segment((kNumLegs + leg) * kTransCoords, kTransCoords) = legs_[leg].qdot;
  }
  return x;
}

void FullWorld::unpack_clamped_state(const Vec& x) {
  check_dims(x.size(), 2 * kNumLegs * kTransCoords, "FullWorld::unpack_clamped_state");
  for (int leg = 0; leg < kNumLegs; ++leg) {
    legs_[leg].q = x.segment(leg * kTransCoords, kTransCoords);
    legs_[leg].qdot = x.segment((kNumLegs + leg) * kTransCoords, kTransCoords);
  }
}

Vec FullWorld::clamped_free_derivative(const Vec& x) const {
  check_dims(x.size(), 2 * kNumLegs * kTransCoords, "FullWorld::clamped_free_derivative");
  Vec dx(x.size());
  const int half = kNumLegs * kTransCoords;
  dx.head(half) = x.tail(half);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    TransmissionState s;
    s.q = x.segment(leg * kTransCoords, kTransCoords);
    s.qdot = x.segment(half + leg * kTransCoords, kTransCoords);
    const TransmissionAccel acc = full_transmission_dynamics(params_, s, Vec2::Zero(),
                                                             Vec2::Zero(), options_.baumgarte);
    dx.segment(half + leg * kTransCoords, kTransCoords) = acc.qddot;
  }
  return dx;
}

double FullWorld::clamped_energy(bool with_gravity) const {
  double e = 0.0;
  for (const auto& leg : legs_) e += transmission_energy(params_, leg, with_gravity);
  return e;
}

// ---------------------------------------------------------------------------

LumpedWorld::LumpedWorld(RobotParams params, WorldOptions options, LumpedVariant variant,
                         HipDrive drive)
    : params_(std::move(params)), options_(options), variant_(variant), drive_(std::move(drive)) {
  if (variant_ == LumpedVariant::kHybrid) {
    check<Error>(static_cast<bool>(drive_.map), "LumpedWorld: hybrid variant needs a drive map");
    check<Error>(drive_.hold_substeps >= 1, "LumpedWorld: hold_substeps must be >= 1");
  }
  reset();
}

void LumpedWorld::reset() {
  body_ = BodyState{};
  body_.pos.z() = standing_body_height(params_);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    q_s_[leg].setZero();
    qdot_s_[leg].setZero();
    held_torque_[leg].setZero();
  }
  last_hip_accel_.setZero();
  last_drive_.setZero();
  substep_count_ = 0;
  time_ = 0.0;
}

Vec LumpedWorld::hip_positions() const {
  Vec q(kActuatedDof);
  for (int leg = 0; leg < kNumLegs; ++leg) q.segment(2 * leg, 2) = q_s_[leg];
  return q;
}

Vec LumpedWorld::hip_velocities() const {
  Vec q(kActuatedDof);
  for (int leg = 0; leg < kNumLegs; ++leg) q.segment(2 * leg, 2) = qdot_s_[leg];
  return q;
}

void LumpedWorld::substep_torques(const Vec& u_s8, double dt) { advance(u_s8, dt); }

void LumpedWorld::substep_pd(const Vec& targets8, double dt) {
  const Vec q_s = hip_positions();
  const Vec qdot_s = hip_velocities();
  if (variant_ == LumpedVariant::kSimple) {
    advance(leg_pd_controller(targets8, q_s, qdot_s, params_, PdMode::kTorque), dt);
    return;
  }
  const Vec u = leg_pd_controller(targets8, q_s, qdot_s, params_, PdMode::kVoltage);
  if (substep_count_ % drive_.hold_substeps == 0) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      held_torque_[leg] = drive_.map(leg, q_s_[leg], qdot_s_[leg], u.segment(2 * leg, 2));
    }
  }
  Vec torque(kActuatedDof);
  for (int leg = 0; leg < kNumLegs; ++leg) torque.segment(2 * leg, 2) = held_torque_[leg];
  advance(torque, dt);
}

void LumpedWorld::policy_step(const Vec& targets8) {
  for (int i = 0; i < kSubstepsPerPolicyTick; ++i) substep_pd(targets8);
}

void LumpedWorld::advance(const Vec& torque8, double dt) {
  check_dims(torque8.size(), kActuatedDof, "LumpedWorld::advance: torque");
  ContactResult contacts;
  if (options_.contacts) {
    contacts = evaluate_contacts(params_, body_, hip_positions(), hip_velocities());
  }
  last_drive_ = torque8;

  std::array<Vec2, kNumLegs> accel;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    // Approaching the swing gimbal singularity is an invalid robot state.
    if (std::abs(q_s_[leg][1]) > 1.4) {
      throw ConvergenceError("LumpedWorld: hip left the valid configuration range");
    }
    const Vec2 u_total = Vec2(torque8.segment(2 * leg, 2)) + contacts.hip_torque[leg];
    try {
      accel[leg] = simple_hip_dynamics(params_.simple, q_s_[leg], qdot_s_[leg], u_total);
    } catch (const SingularMatrix& e) {
      throw ConvergenceError(std::string("LumpedWorld: ") + e.what());
    }
    last_hip_accel_.segment(2 * leg, 2) = accel[leg];
  }

  body_semi_implicit_step(params_, options_, &body_, contacts.body_force_world,
                          contacts.body_torque_body, dt);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    qdot_s_[leg] += dt * accel[leg];
    q_s_[leg] += dt * qdot_s_[leg];
  }
  ++substep_count_;
  time_ += dt;
}

}  // namespace flexquad::robot
