#include "flexquad/robot/params.hpp"

namespace flexquad::robot {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError("robot params: " + msg);
}

}  // namespace

void ChainParams::validate(const std::string& name) const {
  require(l1 > 0 && l2 > 0 && l3 > 0, name + ": link lengths must be positive");
  require(r_a > 0, name + ": actuator lever arm must be positive");
  require(k_f1 > 0 && k_f2 > 0 && k_f3 > 0, name + ": flexure stiffness must be positive");
  require(b_f1 >= 0 && b_f2 >= 0 && b_f3 >= 0, name + ": flexure damping must be >= 0");
  require(alpha_a > 0, name + ": actuator gain must be positive");
  require(k_a > 0 && b_a >= 0 && m_a > 0, name + ": actuator spring/mass invalid");
  require(I1 > 0 && I2 > 0 && I3 > 0, name + ": link inertias must be positive");
  // The coupling row h1 = theta1 - q_a / r_a forces the rest crank angle to
  // zero (rest actuator deflection is zero by definition).
  require(std::abs(theta_bar1) < 1e-12, name + ": rest crank angle must be zero");
  // Loop closure must hold exactly at rest.
  const double hx = l1 * std::cos(theta_bar1) + l2 * std::cos(theta_bar2) +
                    l3 * std::cos(theta_bar3) - d_x;
  const double hy = l1 * std::sin(theta_bar1) + l2 * std::sin(theta_bar2) +
                    l3 * std::sin(theta_bar3) - d_y;
  require(std::abs(hx) < 1e-6 && std::abs(hy) < 1e-6,
          name + ": rest configuration does not close the loop");
}

void LegGeometry::validate() const {
  require(r > 0 && mass > 0, "leg: length and mass must be positive");
  require(dir_y > 0 && dir_z < 0, "leg: rest direction must point outboard and down");
  require(std::abs(dir_y * dir_y + dir_z * dir_z - 1.0) < 1e-9,
          "leg: rest direction must be a unit vector");
}

void SimpleHipParams::validate() const {
  require(I_lift > 0 && I_swing > 0, "simple: inertias must be positive");
  require(I_swing <= I_lift, "simple: I_swing must not exceed I_lift");
  require(m_leg > 0 && r_leg > 0, "simple: leg mass/radius must be positive");
  require(kappa_lift >= 0 && kappa_swing >= 0, "simple: stiffness must be >= 0");
  require(b_lift >= 0 && b_swing >= 0, "simple: damping must be >= 0");
}

void ContactParams::validate() const {
  require(k_n > 0, "contact: k_n must be positive");
  require(b_n >= 0, "contact: b_n must be >= 0");
  require(mu >= 0, "contact: mu must be >= 0");
  require(v_s > 0, "contact: v_s must be positive");
}

void BodyParams::validate() const {
  require(length > 0 && mass > 0, "body: length and mass must be positive");
  require(inertia.minCoeff() > 0, "body: inertia must be positive");
  require(mount_fore_x > 0 && mount_side_y > 0, "body: mounts must be symmetric and offset");
}

void PdGains::validate() const {
  require(kp_voltage > 0 && kd_voltage >= 0, "pd: voltage gains invalid");
  require(kp_torque > 0 && kd_torque >= 0, "pd: torque gains invalid");
  require(torque_limit_lift > 0 && torque_limit_swing > 0,
          "pd: torque limits must be positive");
}

Vec3 RobotParams::mount(int leg_index) const {
  const double fx = (leg_index < 2) ? body.mount_fore_x : -body.mount_fore_x;
  const double sy = kLegSide[leg_index] * body.mount_side_y;
  return Vec3(fx, sy, body.mount_z);
}

void RobotParams::validate() const {
  body.validate();
  leg.validate();
  lift.validate("chain.lift");
  swing.validate("chain.swing");
  simple.validate();
  contact.validate();
  pd.validate();
  require(gravity > 0, "gravity must be positive");
  require(joint_range > 0, "joint range must be positive");
}

namespace {

ChainParams chain_from(const Config& cfg, const std::string& p) {
  ChainParams c;
  c.l1 = cfg.get_double(p + ".l1");
  c.l2 = cfg.get_double(p + ".l2");
  c.l3 = cfg.get_double(p + ".l3");
  c.d_x = cfg.get_double(p + ".d_x");
  c.d_y = cfg.get_double(p + ".d_y");
  c.r_a = cfg.get_double(p + ".r_a");
  c.k_f1 = cfg.get_double(p + ".k_f1");
  c.k_f2 = cfg.get_double(p + ".k_f2");
  c.k_f3 = cfg.get_double(p + ".k_f3");
  c.b_f1 = cfg.get_double(p + ".b_f1");
  c.b_f2 = cfg.get_double(p + ".b_f2");
  c.b_f3 = cfg.get_double(p + ".b_f3");
  c.theta_bar1 = cfg.get_double(p + ".theta_bar1");
  c.theta_bar2 = cfg.get_double(p + ".theta_bar2");
  c.theta_bar3 = cfg.get_double(p + ".theta_bar3");
  c.alpha_a = cfg.get_double(p + ".alpha_a");
  c.k_a = cfg.get_double(p + ".k_a");
  c.b_a = cfg.get_double(p + ".b_a");
  c.m_a = cfg.get_double(p + ".m_a");
  c.I1 = cfg.get_double(p + ".i1");
  c.I2 = cfg.get_double(p + ".i2");
  c.I3 = cfg.get_double(p + ".i3");
  return c;
}

}  // namespace

RobotParams RobotParams::load(const std::string& path) {
  return from_config(Config::parse_file(path));
}

RobotParams RobotParams::from_config(const Config& cfg) {
  const int64_t version = cfg.get_int("schema_version");
  if (version != kSchemaVersion) {
    throw ConfigError("robot params: schema_version " + std::to_string(version) +
                      " unsupported (want " + std::to_string(kSchemaVersion) + ")");
  }
  RobotParams p;
  p.body.length = cfg.get_double("body.length");
  p.body.mass = cfg.get_double("body.mass");
  p.body.inertia =
      Vec3(cfg.get_double("body.ixx"), cfg.get_double("body.iyy"), cfg.get_double("body.izz"));
  p.body.mount_fore_x = cfg.get_double("body.mount_fore_x");
  p.body.mount_side_y = cfg.get_double("body.mount_side_y");
  p.body.mount_z = cfg.get_double("body.mount_z");

  p.leg.r = cfg.get_double("leg.length");
  p.leg.mass = cfg.get_double("leg.mass");
  p.leg.dir_y = cfg.get_double("leg.dir_y");
  p.leg.dir_z = cfg.get_double("leg.dir_z");

  p.lift = chain_from(cfg, "chain.lift");
  p.swing = chain_from(cfg, "chain.swing");

  p.simple.I_lift = cfg.get_double("simple.i_lift");
  p.simple.I_swing = cfg.get_double("simple.i_swing");
  p.simple.kappa_lift = cfg.get_double("simple.kappa_lift");
  p.simple.kappa_swing = cfg.get_double("simple.kappa_swing");
  p.simple.b_lift = cfg.get_double("simple.b_lift");
  p.simple.b_swing = cfg.get_double("simple.b_swing");
  p.simple.m_leg = p.leg.mass;
  p.simple.r_leg = p.leg.r;

  p.contact.k_n = cfg.get_double("contact.k_n");
  p.contact.b_n = cfg.get_double("contact.b_n");
  p.contact.mu = cfg.get_double("contact.mu");
  p.contact.v_s = cfg.get_double("contact.v_s");

  p.pd.kp_voltage = cfg.get_double("pd.kp_voltage");
  p.pd.kd_voltage = cfg.get_double("pd.kd_voltage");
  p.pd.kp_torque = cfg.get_double("pd.kp_torque");
  p.pd.kd_torque = cfg.get_double("pd.kd_torque");
  p.pd.torque_limit_lift = cfg.get_double("pd.torque_limit_lift");
  p.pd.torque_limit_swing = cfg.get_double("pd.torque_limit_swing");

  p.gravity = cfg.get_double("gravity");
  p.joint_range = cfg.get_double("joint.range");
  p.simple.gravity = p.gravity;

  cfg.check_all_consumed();
  p.validate();
  return p;
}

}  // namespace flexquad::robot
