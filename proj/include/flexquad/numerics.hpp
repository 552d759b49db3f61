#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "flexquad/errors.hpp"

namespace flexquad {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// All physical quantities are SI (m, rad, s, N, V) unless noted.

void check_finite(const Vec& v, const char* context);
void check_finite(const Mat& m, const char* context);
void check_dims(Eigen::Index got, Eigen::Index want, const char* context);

// ---------------------------------------------------------------------------
// Linear solves

// General square solve via partially pivoted LU. Throws SingularMatrix when a
// pivot falls below 1e-14 or the LU-based condition estimate exceeds 1e12.
// The returned x satisfies ||Ax - b||_inf <= 1e-9 * (1 + ||b||_inf); the bound
// is verified before returning.
Vec solve_linear(const Mat& A, const Vec& b);

// Cholesky path for matrices the caller asserts to be SPD.
Vec solve_linear_spd(const Mat& A, const Vec& b);

// ---------------------------------------------------------------------------
// Quaternion kinematics

// Unit quaternion, renormalized after every operation (norm kept within 1e-9
// of one).
struct UnitQuaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);

  UnitQuaternion normalized() const;
  UnitQuaternion operator*(const UnitQuaternion& rhs) const;
  UnitQuaternion conjugate() const { return {w, -x, -y, -z}; }

  Mat3 rotation_matrix() const;
  Vec3 rotate(const Vec3& v) const;
  Vec3 rotate_inverse(const Vec3& v) const;

  // Intrinsic Z-Y-X (yaw, pitch, roll) extraction; returns (roll, pitch, yaw).
  // Only defined for |pitch| < pi/2 - 1e-3.
  Vec3 roll_pitch_yaw() const;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
};

// Exact exponential-map rotation by |omega|*dt about omega-hat, body-frame
// angular velocity. omega = 0 falls back to the identity limit.
UnitQuaternion quat_step(const UnitQuaternion& q, const Vec3& omega_body, double dt);

// ---------------------------------------------------------------------------
// ODE stepping

enum class IntegrationMethod { kSemiImplicitEuler, kRk4 };

// Derivative of a [position; velocity] state vector. Must return a vector of
// the same size whose first half is the velocities and second half the
// accelerations.
using StateDerivative = std::function<Vec(const Vec&)>;

// One explicit step of the selected scheme. x stacks [positions; velocities]
// (even length). Semi-implicit Euler updates velocities before positions.
// Throws NonFiniteDerivative if deriv produces NaN/Inf.
Vec integrate_step(const StateDerivative& deriv, const Vec& x, double dt,
                   IntegrationMethod method);

// ---------------------------------------------------------------------------
// Seeded sampling

// Counter-based generator: streams derived from (seed, stream) are disjoint
// and the sample sequence is a pure function of the counter. Identical seeds
// give identical streams across runs and processes.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint64_t next_u64();
  double uniform(double a, double b);   // requires b > a
  double gaussian(double mu, double sigma);  // requires sigma >= 0
  // Uniform over {0, ..., n-1}.
  uint64_t uniform_index(uint64_t n);

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  uint64_t seed_;
  uint64_t stream_;
};

}  // namespace flexquad
