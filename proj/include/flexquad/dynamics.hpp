#pragma once

#include <functional>

#include "flexquad/numerics.hpp"

namespace flexquad::dyn {

// Generalized positions/velocities of one mechanism. Dimensions must agree
// and values stay finite.
struct GeneralizedState {
  Vec q;
  Vec qdot;
  std::string model_id;

  void validate() const;
};

// Terms of M(q) qddot + c(q, qdot) + g(q) = f_ext + H^T lambda.
// c is the Coriolis/centrifugal generalized-force vector C(q, qdot) qdot.
struct ManipulatorTerms {
  Mat M;
  Vec c;
  Vec g;
  Vec f_ext;
};

// Holonomic constraint h(q) = 0 evaluated at a state: position residual,
// Jacobian H = dh/dq, velocity residual hdot = H qdot, and the
// acceleration-level bias Hdot * qdot.
struct ConstraintEval {
  Vec h;
  Mat H;
  Vec H_qdot;
  Vec Hdot_qdot;
};

// Defaults sized so 300 ms rollouts at dt = 5e-5 hold ||h||_inf below 1e-6.
struct BaumgarteGains {
  double alpha = 2000.0;  // velocity-level feedback, 1/s
  double beta = 2000.0;   // position-level feedback, 1/s
};

struct ConstrainedAccel {
  Vec qddot;
  Vec lambda;
};

// Solves the index-1 KKT system
//   [M  H^T] [qddot ]   [f_ext - c - g]
//   [H   0 ] [lambda] = [-Hdot qdot - 2*alpha*H qdot - beta^2 * h]
// so that H qddot + Hdot qdot + 2*alpha*H qdot + beta^2 h = 0 holds to 1e-9.
// Throws RankDeficientConstraints when H loses row rank (singular
// configuration) and SingularMatrix when the KKT system cannot be solved.
ConstrainedAccel constrained_accel(const ManipulatorTerms& terms, const ConstraintEval& con,
                                   const BaumgarteGains& gains);

// Energy bookkeeping for conservation tests: a model exposes kinetic and
// potential energies of a packed [q; qdot] state.
struct EnergyModel {
  std::function<double(const Vec&)> kinetic;
  std::function<double(const Vec&)> potential;
};

double total_energy(const EnergyModel& model, const Vec& state);

// Max ||h||_inf over a trajectory of constraint residuals.
double constraint_drift(const std::vector<Vec>& constraint_residuals);

}  // namespace flexquad::dyn
