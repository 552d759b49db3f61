#include "flexquad/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace flexquad {

void check_finite(const Vec& v, const char* context) {
  if (!v.allFinite()) throw NonFiniteValue(std::string(context) + ": non-finite value");
}

void check_finite(const Mat& m, const char* context) {
  if (!m.allFinite()) throw NonFiniteValue(std::string(context) + ": non-finite value");
}

void check_dims(Eigen::Index got, Eigen::Index want, const char* context) {
  if (got != want) {
    throw DimensionMismatch(std::string(context) + ": got dimension " + std::to_string(got) +
                            ", want " + std::to_string(want));
  }
}

// ---------------------------------------------------------------------------

Vec solve_linear(const Mat& A, const Vec& b) {
  check_dims(A.rows(), A.cols(), "solve_linear: A must be square");
  check_dims(b.size(), A.rows(), "solve_linear: b");
  check_finite(A, "solve_linear: A");
  check_finite(b, "solve_linear: b");

  Eigen::PartialPivLU<Mat> lu(A);
  const Mat& lu_matrix = lu.matrixLU();
  double max_pivot = 0.0, min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lu_matrix.rows(); ++i) {
    const double p = std::abs(lu_matrix(i, i));
    max_pivot = std::max(max_pivot, p);
    min_pivot = std::min(min_pivot, p);
  }
  if (!(min_pivot >= 1e-14)) {
    throw SingularMatrix("solve_linear: pivot magnitude " + std::to_string(min_pivot) +
                         " below 1e-14");
  }
  // Cheap condition estimate from the pivot spread of U.
  if (max_pivot / min_pivot > 1e12) {
    throw SingularMatrix("solve_linear: condition estimate above 1e12");
  }

  Vec x = lu.solve(b);
  check_finite(x, "solve_linear: x");
  const double residual = (A * x - b).lpNorm<Eigen::Infinity>();
  const double bound = 1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>());
  if (!(residual <= bound)) {
    throw SingularMatrix("solve_linear: residual " + std::to_string(residual) +
                         " exceeds bound " + std::to_string(bound));
  }
  return x;
}

Vec solve_linear_spd(const Mat& A, const Vec& b) {
  check_dims(A.rows(), A.cols(), "solve_linear_spd: A must be square");
  check_dims(b.size(), A.rows(), "solve_linear_spd: b");
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("solve_linear_spd: Cholesky failed (matrix not SPD)");
  }
  Vec x = llt.solve(b);
  check_finite(x, "solve_linear_spd: x");
  return x;
}

// ---------------------------------------------------------------------------

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-300) return identity();
  const double half = 0.5 * angle;
  const double s = std::sin(half) / n;
  return UnitQuaternion{std::cos(half), axis.x() * s, axis.y() * s, axis.z() * s}.normalized();
}

UnitQuaternion UnitQuaternion::normalized() const {
  const double n = norm();
  check<NonFiniteValue>(n > 1e-300 && std::isfinite(n), "UnitQuaternion: degenerate norm");
  return {w / n, x / n, y / n, z / n};
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& r) const {
  return UnitQuaternion{w * r.w - x * r.x - y * r.y - z * r.z,
                        w * r.x + x * r.w + y * r.z - z * r.y,
                        w * r.y - x * r.z + y * r.w + z * r.x,
                        w * r.z + x * r.y - y * r.x + z * r.w}
      .normalized();
}

Mat3 UnitQuaternion::rotation_matrix() const {
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
  // q v q* expanded (no temporary quaternion normalization).
  const Vec3 u(x, y, z);
  return v + 2.0 * u.cross(u.cross(v) + w * v);
}

Vec3 UnitQuaternion::rotate_inverse(const Vec3& v) const {
  const Vec3 u(-x, -y, -z);
  return v + 2.0 * u.cross(u.cross(v) + w * v);
}

Vec3 UnitQuaternion::roll_pitch_yaw() const {
  const double sin_pitch = 2.0 * (w * y - z * x);
  const double clamped = std::clamp(sin_pitch, -1.0, 1.0);
  const double pitch = std::asin(clamped);
  const double roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  const double yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  return Vec3(roll, pitch, yaw);
}

UnitQuaternion quat_step(const UnitQuaternion& q, const Vec3& omega_body, double dt) {
  check<Error>(dt > 0.0, "quat_step: dt must be positive");
  const double angle = omega_body.norm() * dt;
  if (angle == 0.0) return q;
  const UnitQuaternion dq = UnitQuaternion::from_axis_angle(omega_body, angle);
  // Body-frame angular velocity composes on the right.
  return (q * dq).normalized();
}

// ---------------------------------------------------------------------------

static Vec eval_deriv(const StateDerivative& deriv, const Vec& x) {
  Vec d = deriv(x);
  check_dims(d.size(), x.size(), "integrate_step: derivative size");
  if (!d.allFinite()) throw NonFiniteDerivative("integrate_step: derivative not finite");
  return d;
}

Vec integrate_step(const StateDerivative& deriv, const Vec& x, double dt,
                   IntegrationMethod method) {
  check<Error>(dt > 0.0, "integrate_step: dt must be positive");
  check<DimensionMismatch>(x.size() % 2 == 0, "integrate_step: state must stack [q; qdot]");
  const Eigen::Index n = x.size() / 2;

  switch (method) {
    case IntegrationMethod::kSemiImplicitEuler: {
      const Vec d = eval_deriv(deriv, x);
      Vec out(x.size());
      out.tail(n) = x.tail(n) + dt * d.tail(n);   // velocities first
      out.head(n) = x.head(n) + dt * out.tail(n);  // positions see new velocities
      return out;
    }
    case IntegrationMethod::kRk4: {
      const Vec k1 = eval_deriv(deriv, x);
      const Vec k2 = eval_deriv(deriv, x + 0.5 * dt * k1);
      const Vec k3 = eval_deriv(deriv, x + 0.5 * dt * k2);
      const Vec k4 = eval_deriv(deriv, x + dt * k3);
      return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  throw Error("integrate_step: unknown method");
}

// ---------------------------------------------------------------------------

namespace {

// SplitMix64 finalizer; full-period bijective mixer.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {
  key_ = mix64(mix64(seed) ^ mix64(0x6a09e667f3bcc909ULL + stream));
}

uint64_t Rng::next_u64() {
  return mix64(key_ ^ mix64(++counter_));
}

double Rng::uniform(double a, double b) {
  check<Error>(b > a, "Rng::uniform: requires b > a");
  const double u01 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return a + (b - a) * u01;
}

double Rng::gaussian(double mu, double sigma) {
  check<Error>(sigma >= 0.0, "Rng::gaussian: requires sigma >= 0");
  if (sigma == 0.0) return mu;
  // Box-Muller, cosine branch only, so the state stays a pure counter.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mu + sigma * r * std::cos(2.0 * M_PI * u2);
}

uint64_t Rng::uniform_index(uint64_t n) {
  check<Error>(n > 0, "Rng::uniform_index: n must be positive");
  // Multiply-shift; bias is negligible for n << 2^64.
  return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace flexquad
