#include "flexquad/dynamics.hpp"

#include <Eigen/QR>

namespace flexquad::dyn {

void GeneralizedState::validate() const {
  check_dims(qdot.size(), q.size(), "GeneralizedState");
  check_finite(q, "GeneralizedState::q");
  check_finite(qdot, "GeneralizedState::qdot");
}

ConstrainedAccel constrained_accel(const ManipulatorTerms& terms, const ConstraintEval& con,
                                   const BaumgarteGains& gains) {
  const Eigen::Index n = terms.M.rows();
  check_dims(terms.M.cols(), n, "constrained_accel: M");
  check_dims(terms.c.size(), n, "constrained_accel: c");
  check_dims(terms.g.size(), n, "constrained_accel: g");
  check_dims(terms.f_ext.size(), n, "constrained_accel: f_ext");
  const Eigen::Index m = con.h.size();

  const Vec rhs_dyn = terms.f_ext - terms.c - terms.g;

  if (m == 0) {
    ConstrainedAccel out;
    out.qddot = solve_linear(terms.M, rhs_dyn);
    out.lambda = Vec::Zero(0);
    return out;
  }

  check_dims(con.H.rows(), m, "constrained_accel: H rows");
  check_dims(con.H.cols(), n, "constrained_accel: H cols");
  check_dims(con.Hdot_qdot.size(), m, "constrained_accel: Hdot_qdot");

  // Row-rank check of H: a singular mechanism configuration must surface as
  // its own error, distinct from a merely ill-conditioned KKT matrix.
  {
    Eigen::ColPivHouseholderQR<Mat> qr(con.H.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < m) {
      throw RankDeficientConstraints("constrained_accel: constraint Jacobian rank " +
                                     std::to_string(qr.rank()) + " < " + std::to_string(m));
    }
  }

  check_dims(con.H_qdot.size(), m, "constrained_accel: H_qdot");

  Mat kkt = Mat::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = terms.M;
  kkt.topRightCorner(n, m) = con.H.transpose();
  kkt.bottomLeftCorner(m, n) = con.H;

  Vec rhs(n + m);
  rhs.head(n) = rhs_dyn;
  rhs.tail(m) = -con.Hdot_qdot - 2.0 * gains.alpha * con.H_qdot -
                gains.beta * gains.beta * con.h;

  const Vec sol = solve_linear(kkt, rhs);

  ConstrainedAccel out;
  out.qddot = sol.head(n);
  out.lambda = sol.tail(m);
  return out;
}

double total_energy(const EnergyModel& model, const Vec& state) {
  return model.kinetic(state) + model.potential(state);
}

double constraint_drift(const std::vector<Vec>& constraint_residuals) {
  double drift = 0.0;
  for (const auto& h : constraint_residuals) {
    if (h.size() > 0) drift = std::max(drift, h.lpNorm<Eigen::Infinity>());
  }
  return drift;
}

}  // namespace flexquad::dyn
