#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "flexquad/numerics.hpp"

using namespace flexquad;

TEST_CASE("solve_linear identity and diagonal") {
  CHECK((solve_linear(Mat::Identity(3, 3), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);

  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 4.0;
  const Vec x = solve_linear(D, Vec2(2, 4));
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));
}

TEST_CASE("solve_linear random SPD satisfies the residual bound") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) A(i, j) = rng.gaussian(0, 1);
    A = Mat(A.transpose() * A) + 0.5 * Mat::Identity(8, 8);
    Vec b(8);
    for (int i = 0; i < 8; ++i) b[i] = rng.gaussian(0, 1);
    const Vec x = solve_linear(A, b);
    CHECK((A * x - b).lpNorm<Eigen::Infinity>() <=
          1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("solve_linear rejects singular matrices") {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  CHECK_THROWS_AS(solve_linear(A, Vec2(1, 1)), SingularMatrix);

  Mat B(2, 2);
  B << 1.0, 1.0, 1.0, 1.0 + 1e-15;
  CHECK_THROWS_AS(solve_linear(B, Vec2(1, 1)), SingularMatrix);
}

TEST_CASE("solve_linear_spd matches LU on an SPD system") {
  Rng rng(11);
  Mat A(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) A(i, j) = rng.gaussian(0, 1);
  A = Mat(A.transpose() * A) + Mat::Identity(5, 5);
  Vec b(5);
  for (int i = 0; i < 5; ++i) b[i] = rng.uniform(-1, 1);
  CHECK((solve_linear_spd(A, b) - solve_linear(A, b)).norm() < 1e-10);
  CHECK_THROWS_AS(solve_linear_spd(Mat(-Mat::Identity(3, 3)), Vec3(1, 1, 1)), SingularMatrix);
}

TEST_CASE("integrate_step constant velocity") {
  const auto deriv = [](const Vec& x) {
    Vec d(2);
    d << x[1], 0.0;
    return d;
  };
  Vec x(2);
  x << 0.0, 1.0;
  const Vec out = integrate_step(deriv, x, 0.01, IntegrationMethod::kSemiImplicitEuler);
  CHECK(out[0] == doctest::Approx(0.01));
  CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("rk4 harmonic oscillator returns to start over one period") {
  const auto deriv = [](const Vec& x) {
    Vec d(2);
    d << x[1], -x[0];
    return d;
  };
  Vec x(2);
  x << 1.0, 0.0;
  const double dt = 1e-3;
  const int steps = static_cast<int>(std::round(2.0 * M_PI / dt));
  for (int i = 0; i < steps; ++i) x = integrate_step(deriv, x, dt, IntegrationMethod::kRk4);
  // Residual fraction of a period
  const double leftover = 2.0 * M_PI - steps * dt;
  x = integrate_step(deriv, x, leftover + 1e-12, IntegrationMethod::kRk4);
  CHECK(std::abs(x[0] - 1.0) < 1e-5);
  CHECK(std::abs(x[1]) < 1e-5);
}

TEST_CASE("rk4 is fourth order over one oscillator period") {
  const auto deriv = [](const Vec& x) {
    Vec d(2);
    d << x[1], -x[0];
    return d;
  };
  const auto run = [&](double dt) {
    Vec x(2);
    x << 1.0, 0.0;
    const int steps = static_cast<int>(std::round(2.0 * M_PI / dt));
    for (int i = 0; i < steps; ++i) x = integrate_step(deriv, x, dt, IntegrationMethod::kRk4);
    Vec ref(2);
    ref << 1.0, 0.0;
    const double state_err = (x - ref).norm();
    const double energy_err = std::abs(0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5);
    return std::make_pair(state_err, energy_err);
  };
  // Pick dts that divide the period to machine accuracy well enough.
  const auto [s1, e1] = run(2.0 * M_PI / 320.0);
  const auto [s2, e2] = run(2.0 * M_PI / 160.0);
  const double slope = std::log(s2 / s1) / std::log(2.0);
  CHECK(slope > 3.8);
  CHECK(slope < 4.2);
  // The energy drift converges even faster than the state error.
  CHECK(e1 < s1);
  CHECK(e2 < s2);
}

TEST_CASE("integrate_step surfaces non-finite derivatives") {
  const auto bad = [](const Vec& x) {
    Vec d(x.size());
    d.setConstant(std::numeric_limits<double>::quiet_NaN());
    return d;
  };
  CHECK_THROWS_AS(integrate_step(bad, Vec::Zero(2), 1e-3, IntegrationMethod::kRk4),
                  NonFiniteDerivative);
}

TEST_CASE("quat_step identity at zero rate and exact half-turn") {
  const UnitQuaternion q0;
  const UnitQuaternion same = quat_step(q0, Vec3::Zero(), 1.0);
  CHECK(same.w == 1.0);

  const UnitQuaternion yawed = quat_step(q0, Vec3(0, 0, M_PI), 1.0);
  const Vec3 rotated = yawed.rotate(Vec3(1, 0, 0));
  CHECK(rotated.x() == doctest::Approx(-1.0));
  CHECK(std::abs(rotated.y()) < 1e-12);
  CHECK(yawed.roll_pitch_yaw()[2] == doctest::Approx(M_PI).epsilon(1e-9));
}

TEST_CASE("quat_step composes: two half steps equal one full step") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 w(rng.gaussian(0, 2), rng.gaussian(0, 2), rng.gaussian(0, 2));
    UnitQuaternion q{rng.gaussian(0, 1), rng.gaussian(0, 1), rng.gaussian(0, 1),
                     rng.gaussian(0, 1)};
    q = q.normalized();
    const UnitQuaternion full = quat_step(q, w, 0.02);
    const UnitQuaternion halves = quat_step(quat_step(q, w, 0.01), w, 0.01);
    CHECK(std::abs(full.w - halves.w) < 1e-9);
    CHECK(std::abs(full.x - halves.x) < 1e-9);
    CHECK(std::abs(full.y - halves.y) < 1e-9);
    CHECK(std::abs(full.z - halves.z) < 1e-9);
  }
}

TEST_CASE("quat_step preserves unit norm over many random steps") {
  Rng rng(5);
  UnitQuaternion q;
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const Vec3 w(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30));
    q = quat_step(q, w, 5e-5);
    worst = std::max(worst, std::abs(q.norm() - 1.0));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("sampling: degenerate gaussian and determinism") {
  Rng rng(42);
  CHECK(rng.gaussian(5.0, 0.0) == 5.0);

  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(123, 1);
  bool any_diff = false;
  Rng a2(123);
  for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
}

TEST_CASE("uniform law of large numbers") {
  Rng rng(2024);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += rng.uniform(0.0, 1.0);
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("gaussian moments are sane") {
  Rng rng(99);
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.gaussian(1.0, 2.0);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 1.0) < 0.03);
  CHECK(std::abs(var - 4.0) < 0.1);
}

TEST_CASE("seeded sampling is bit-reproducible across processes") {
  int fds[2];
  REQUIRE(pipe(fds) == 0);
  const pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    // Child: emit raw draws.
    close(fds[0]);
    Rng rng(777, 3);
    for (int i = 0; i < 256; ++i) {
      const double d = rng.gaussian(0.0, 1.0);
      const ssize_t written = write(fds[1], &d, sizeof(d));
      if (written != sizeof(d)) _exit(1);
    }
    close(fds[1]);
    _exit(0);
  }
  close(fds[1]);
  Rng rng(777, 3);
  for (int i = 0; i < 256; ++i) {
    double theirs = 0.0;
    ssize_t got = 0;
    while (got < static_cast<ssize_t>(sizeof(theirs))) {
      const ssize_t r = read(fds[0], reinterpret_cast<char*>(&theirs) + got, sizeof(theirs) - got);
      REQUIRE(r > 0);
      got += r;
    }
    CHECK(rng.gaussian(0.0, 1.0) == theirs);
  }
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
}
