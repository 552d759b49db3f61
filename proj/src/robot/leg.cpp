#include "flexquad/robot/leg.hpp"

namespace flexquad::robot {

Mat2 leg_mass_matrix(double I_l, double I_s, double theta_s) {
  const double st = std::sin(theta_s);
  const double coupling = -std::sqrt(std::max(0.0, I_s * (I_l - I_s))) * st;
  Mat2 M;
  M << I_l - I_s * st * st, coupling, coupling, I_s;
  return M;
}

Vec2 leg_coriolis(double I_l, double I_s, double theta_s, double dtheta_l, double dtheta_s) {
  const double st = std::sin(theta_s), ct = std::cos(theta_s);
  const double dM11 = -2.0 * I_s * st * ct;
  const double dM12 = -std::sqrt(std::max(0.0, I_s * (I_l - I_s))) * ct;
  Vec2 c;
  c[0] = dM11 * dtheta_l * dtheta_s + dM12 * dtheta_s * dtheta_s;
  c[1] = -0.5 * dM11 * dtheta_l * dtheta_l;
  return c;
}

Vec2 leg_gravity_torque(double mass, double r, double g, double dir_y, double dir_z,
                        double theta_l, double theta_s) {
  const double sl = std::sin(theta_l), cl = std::cos(theta_l);
  const double ss = std::sin(theta_s), cs = std::cos(theta_s);
  const double mgr = mass * g * r;
  return Vec2(mgr * (dir_y * cl * cs - dir_z * sl), -mgr * dir_y * sl * ss);
}

double leg_potential(double mass, double r, double g, double dir_y, double dir_z, double theta_l,
                     double theta_s) {
  const double uz = dir_y * std::sin(theta_l) * std::cos(theta_s) + dir_z * std::cos(theta_l);
  return mass * g * r * (uz - dir_z);
}

Vec3 leg_direction(const LegGeometry& geom, double side, double theta_l, double theta_s) {
  const double sl = std::sin(theta_l), cl = std::cos(theta_l);
  const double ss = std::sin(theta_s), cs = std::cos(theta_s);
  return Vec3(-geom.dir_y * ss, side * (geom.dir_y * cs * cl - geom.dir_z * sl),
              geom.dir_y * cs * sl + geom.dir_z * cl);
}

Eigen::Matrix<double, 3, 2> leg_direction_jacobian(const LegGeometry& geom, double side,
                                                   double theta_l, double theta_s) {
  const double sl = std::sin(theta_l), cl = std::cos(theta_l);
  const double ss = std::sin(theta_s), cs = std::cos(theta_s);
  Eigen::Matrix<double, 3, 2> J;
  J(0, 0) = 0.0;
  J(0, 1) = -geom.dir_y * cs;
  J(1, 0) = side * (-geom.dir_y * cs * sl - geom.dir_z * cl);
  J(1, 1) = side * (-geom.dir_y * ss * cl);
  J(2, 0) = geom.dir_y * cs * cl - geom.dir_z * sl;
  J(2, 1) = -geom.dir_y * ss * sl;
  return J;
}

Vec3 foot_position_body(const RobotParams& params, int leg_index, double theta_l,
                        double theta_s) {
  return params.mount(leg_index) +
         params.leg.r * leg_direction(params.leg, kLegSide[leg_index], theta_l, theta_s);
}

Eigen::Matrix<double, 3, 2> foot_jacobian_body(const RobotParams& params, int leg_index,
                                               double theta_l, double theta_s) {
  return params.leg.r * leg_direction_jacobian(params.leg, kLegSide[leg_index], theta_l, theta_s);
}

Vec3 contact_force(const Vec3& foot_pos_world, const Vec3& foot_vel_world,
                   const ContactParams& cp) {
  const double z = foot_pos_world.z();
  if (z > 0.0) return Vec3::Zero();
  const double depth = -z;
  const double fn = std::max(0.0, cp.k_n * depth - cp.b_n * foot_vel_world.z());
  if (fn == 0.0) return Vec3::Zero();
  Vec3 f(0.0, 0.0, fn);
  const double vt = std::hypot(foot_vel_world.x(), foot_vel_world.y());
  if (vt > 1e-12) {
    const double ft = cp.mu * fn * std::tanh(vt / cp.v_s);
    f.x() = -ft * foot_vel_world.x() / vt;
    f.y() = -ft * foot_vel_world.y() / vt;
  }
  return f;
}

}  // namespace flexquad::robot
