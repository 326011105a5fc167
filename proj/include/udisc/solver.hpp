#ifndef UDISC_SOLVER_HPP
#define UDISC_SOLVER_HPP

// The discrimination problem as a semidefinite program:
//
//   minimize  -sum_i eta_i p_i   s.t.  F(p) = diag(I_r - sum_i p_i Q_i, p_1, ..., p_m) >= 0
//   maximize  -Tr X              s.t.  Tr(Q_i X) - z_i = eta_i,  X >= 0,  z >= 0
//
// together with an independent checker for the optimality conditions
// (primal feasibility, dual feasibility, complementary slackness, zero gap).

#include <algorithm>
#include <cmath>
#include <vector>

#include "udisc/cone.hpp"
#include "udisc/ensemble.hpp"

namespace udisc {

template <typename Real = double>
struct SdpProblem {
  RVector<Real> cost;      ///< c_i = -eta_i
  CMatrix<Real> factors;   ///< r x m, column i is |phi~_i>, so Q_i = a_i a_i^*
  Eigen::Index dimension() const { return factors.rows(); } // r
  Eigen::Index size() const { return factors.cols(); }      // m

  /// F(p) as a dense (r+m) x (r+m) block-diagonal matrix.
  CMatrix<Real> constraint_matrix(const RVector<Real> &p) const {
    const auto r = dimension(), m = size();
    CMatrix<Real> f = CMatrix<Real>::Zero(r + m, r + m);
    f.topLeftCorner(r, r) = CMatrix<Real>::Identity(r, r) - detail::rank_one_sum<Real>(factors, p);
    for (Eigen::Index i = 0; i < m; ++i) f(r + i, r + i) = p(i);
    return f;
  }

  /// F_0, ..., F_m with F(p) = F_0 + sum_i p_i F_i.
  std::vector<CMatrix<Real>> blocks() const {
    const auto r = dimension(), m = size();
    std::vector<CMatrix<Real>> out;
    CMatrix<Real> f0 = CMatrix<Real>::Zero(r + m, r + m);
    f0.topLeftCorner(r, r).setIdentity();
    out.push_back(f0);
    for (Eigen::Index i = 0; i < m; ++i) {
      CMatrix<Real> fi = CMatrix<Real>::Zero(r + m, r + m);
      fi.topLeftCorner(r, r) = -(factors.col(i) * factors.col(i).adjoint());
      fi(r + i, r + i) = 1;
      out.push_back(fi);
    }
    return out;
  }
};

template <typename Real>
SdpProblem<Real> build_sdp(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs) {
  if (e.size() != rs.size() || e.dimension() != rs.dimension())
    throw DimensionError("ensemble and reciprocal set disagree");
  SdpProblem<Real> prob;
  prob.cost = -e.priors();
  prob.factors = rs.reciprocals;
  return prob;
}

template <typename Real = double>
struct DualCertificate {
  CMatrix<Real> x; ///< r x r Hermitian PSD
  RVector<Real> z; ///< slacks
};

struct SolverOptions {
  double tol_gap = 1e-8;
  double tol_feas = 1e-9;
  double tol_slack = 1e-7;
  int max_iters = 100;
};

enum class SolveStatus { Optimal, MaxIterations, NumericalFailure };

inline const char *to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::Optimal: return "Optimal";
  case SolveStatus::MaxIterations: return "MaxIterations";
  case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

/// Per-iterate objective values in the discrimination sign convention.
template <typename Real = double>
struct IterateRecord {
  Real primal_value; ///< -sum eta_i p_i
  Real dual_value;   ///< -Tr X
  Real gap;          ///< primal_value - dual_value
  Real primal_residual;
  Real dual_residual;
};

template <typename Real = double>
struct SolveReport {
  RVector<Real> p;
  DualCertificate<Real> certificate;
  Real primal_value = 0; ///< -P_D
  Real dual_value = 0;   ///< -Tr X
  Real gap = 0;
  int iterations = 0;
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<IterateRecord<Real>> history;
};

namespace detail {

// Column scaling: with w_i = ||phi~_i||^2 the engine works with unit
// factors a_i = phi~_i / sqrt(w_i) and variables y_i = w_i p_i.
template <typename Real>
RVector<Real> factor_weights(const SdpProblem<Real> &prob) {
  return prob.factors.colwise().squaredNorm().transpose();
}

template <typename Real>
ConeProblem<Real> to_cone(const SdpProblem<Real> &prob) {
  const auto r = prob.dimension(), m = prob.size();
  const RVector<Real> w = factor_weights(prob);
  ConeProblem<Real> cp;
  cp.c_mat = CMatrix<Real>::Identity(r, r);
  cp.factors = prob.factors * w.cwiseSqrt().cwiseInverse().template cast<Complex<Real>>().asDiagonal();
  cp.c_lin = RVector<Real>::Zero(m);
  cp.a_lin = -RMatrix<Real>::Identity(m, m);
  cp.b = (-prob.cost).cwiseQuotient(w);
  return cp;
}

/// Strictly feasible primal and dual starting point for the scaled problem.
template <typename Real>
ConeIterate<Real> feasible_start(const ConeProblem<Real> &cp, const RVector<Real> &w) {
  const auto r = cp.mat_dim(), m = cp.num_vars();
  const RVector<Real> eta = cp.b.cwiseProduct(w);
  ConeIterate<Real> it;
  // p_i = 1 / (2 lambda_max(sum Q_i)), X = alpha I, z_i = Tr(Q_i X) - eta_i.
  const Real lmax = lambda_max<Real>(rank_one_sum<Real>(cp.factors, w));
  it.y = w / (Real(2) * lmax);
  it.s_mat = CMatrix<Real>::Identity(r, r) - rank_one_sum<Real>(cp.factors, it.y);
  it.s_lin = it.y;
  const Real alpha = Real(2) * eta.maxCoeff() / w.minCoeff();
  it.x_mat = alpha * CMatrix<Real>::Identity(r, r);
  it.x_lin = RVector<Real>::Constant(m, alpha) - cp.b;
  return it;
}

} // namespace detail

/// Solves the discrimination SDP. The certificate is projected onto the
/// cone (eigenvalues of X clipped at 0, z recomputed from X and clipped).
template <typename Real>
SolveReport<Real> solve(const SdpProblem<Real> &prob, const SolverOptions &opts = {}) {
  const auto cp = detail::to_cone(prob);
  const RVector<Real> w = detail::factor_weights(prob);
  ConeOptions co;
  co.tol_gap = opts.tol_gap;
  co.tol_feas = opts.tol_feas;
  co.tol_slack = opts.tol_slack;
  // P_D >= sigma_m^2 > 0, so the gap can be taken relative to the objective.
  co.objective_scale = 0.0;
  co.max_iters = opts.max_iters;
  auto cr = solve_cone(cp, detail::feasible_start(cp, w), co);

  SolveReport<Real> rep;
  rep.iterations = cr.iterations;
  rep.status = cr.status == ConeStatus::Optimal         ? SolveStatus::Optimal
               : cr.status == ConeStatus::MaxIterations ? SolveStatus::MaxIterations
                                                        : SolveStatus::NumericalFailure;
  for (const auto &t : cr.trace)
    rep.history.push_back({-t.primal_objective, -t.dual_objective, t.dual_objective - t.primal_objective,
                           t.primal_residual, t.dual_residual});

  const RVector<Real> eta = -prob.cost;
  RVector<Real> p = cr.point.y.cwiseQuotient(w).cwiseMax(Real(0));
  const Real lmax = detail::lambda_max<Real>(detail::rank_one_sum<Real>(prob.factors, p));
  if (lmax > Real(1)) p /= lmax;
  rep.p = p;

  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(detail::hermitian_part(cr.point.x_mat));
  const RVector<Real> ev = es.eigenvalues().cwiseMax(Real(0));
  rep.certificate.x = es.eigenvectors() * ev.template cast<Complex<Real>>().asDiagonal() * es.eigenvectors().adjoint();
  const RVector<Real> tr_qx =
      (prob.factors.adjoint() * rep.certificate.x * prob.factors).diagonal().real();
  rep.certificate.z = (tr_qx - eta).cwiseMax(Real(0));

  rep.primal_value = -eta.dot(rep.p);
  rep.dual_value = -std::real(rep.certificate.x.trace());
  rep.gap = rep.primal_value - rep.dual_value;
  return rep;
}

struct VerificationTolerances {
  double operator_tol = 1e-6; ///< matrix-valued conditions
  double scalar_tol = 1e-7;   ///< scalar conditions
};

/// Residuals of the six optimality conditions. Each `*_violation` is >= 0
/// and zero when the condition holds exactly.
template <typename Real = double>
struct VerificationReport {
  Real p_negativity = 0;          ///< max(0, -min p_i)
  Real operator_excess = 0;       ///< max(0, lambda_max(sum p_i Q_i) - 1)
  Real x_negativity = 0;          ///< max(0, -lambda_min(X))
  Real z_negativity = 0;          ///< max(0, -min z_i)
  Real equality_residual = 0;     ///< max_i |Tr(Q_i X) - z_i - eta_i|
  Real operator_slackness = 0;    ///< ||X (I - sum p_i Q_i)||_2
  Real scalar_slackness = 0;      ///< max_i |z_i p_i|
  Real duality_gap = 0;           ///< |Tr X - sum eta_i p_i|
  RVector<Real> tr_qx;            ///< Tr(Q_i X), for inspection
  VerificationTolerances tolerances;

  bool primal_feasible() const { return p_negativity <= tolerances.scalar_tol && operator_excess <= tolerances.operator_tol; }
  bool dual_feasible() const {
    return x_negativity <= tolerances.operator_tol && z_negativity <= tolerances.scalar_tol &&
           equality_residual <= tolerances.scalar_tol;
  }
  bool slackness() const { return operator_slackness <= tolerances.operator_tol && scalar_slackness <= tolerances.scalar_tol; }
  bool zero_gap(Real scale) const { return duality_gap <= tolerances.scalar_tol * (Real(1) + scale); }
  bool passed = false;
};

template <typename Real>
VerificationReport<Real> verify_certificate(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs,
                                            const std::type_identity_t<RVector<Real>> &p,
                                            const DualCertificate<Real> &cert, const VerificationTolerances &tol = {}) {
  const auto r = e.dimension(), m = e.size();
  if (rs.size() != m || rs.dimension() != r || p.size() != m || cert.x.rows() != r || cert.x.cols() != r ||
      cert.z.size() != m)
    throw DimensionError("verify_certificate: inconsistent shapes");
  VerificationReport<Real> v;
  v.tolerances = tol;
  const CMatrix<Real> t = CMatrix<Real>::Identity(r, r) - weighted_gram_sum(rs, p);
  v.p_negativity = std::max(Real(0), -p.minCoeff());
  v.operator_excess = std::max(Real(0), -detail::lambda_min<Real>(t));
  v.x_negativity = std::max(Real(0), -detail::lambda_min<Real>(cert.x));
  v.z_negativity = std::max(Real(0), -cert.z.minCoeff());
  v.tr_qx = (rs.reciprocals.adjoint() * cert.x * rs.reciprocals).diagonal().real();
  v.equality_residual = (v.tr_qx - cert.z - e.priors()).cwiseAbs().maxCoeff();
  v.operator_slackness = detail::spectral_norm<Real>(CMatrix<Real>(cert.x * t));
  v.scalar_slackness = cert.z.cwiseProduct(p).cwiseAbs().maxCoeff();
  const Real pd = e.priors().dot(p);
  v.duality_gap = std::abs(std::real(cert.x.trace()) - pd);
  v.passed = v.primal_feasible() && v.dual_feasible() && v.slackness() && v.zero_gap(std::abs(pd));
  return v;
}

template <typename Real = double>
struct GapEvaluation {
  Real gap = 0;             ///< P(p) - D(X) = Tr X - eta^T p
  Real trace_fz = 0;        ///< Tr(F(p) Z), Z = diag(X, z)
  bool primal_feasible = false;
  bool dual_feasible = false;
};

/// Weak-duality gap of a (p, X, z) pair, computed both from the objectives
/// and as Tr(F(p) Z). Feasibility flags use the default verification tolerances.
template <typename Real>
GapEvaluation<Real> weak_duality_gap(const SdpProblem<Real> &prob, const std::type_identity_t<RVector<Real>> &p,
                                     const DualCertificate<Real> &cert, const VerificationTolerances &tol = {}) {
  const auto r = prob.dimension(), m = prob.size();
  if (p.size() != m || cert.x.rows() != r || cert.z.size() != m)
    throw DimensionError("weak_duality_gap: inconsistent shapes");
  const RVector<Real> eta = -prob.cost;
  GapEvaluation<Real> g;
  g.gap = std::real(cert.x.trace()) - eta.dot(p);
  CMatrix<Real> z = CMatrix<Real>::Zero(r + m, r + m);
  z.topLeftCorner(r, r) = cert.x;
  for (Eigen::Index i = 0; i < m; ++i) z(r + i, r + i) = cert.z(i);
  g.trace_fz = std::real((prob.constraint_matrix(p) * z).trace());
  const CMatrix<Real> t = CMatrix<Real>::Identity(r, r) - detail::rank_one_sum<Real>(prob.factors, p);
  g.primal_feasible = p.minCoeff() >= -Real(tol.scalar_tol) && detail::lambda_min<Real>(t) >= -Real(tol.operator_tol);
  const RVector<Real> tr_qx = (prob.factors.adjoint() * cert.x * prob.factors).diagonal().real();
  g.dual_feasible = detail::lambda_min<Real>(cert.x) >= -Real(tol.operator_tol) &&
                    cert.z.minCoeff() >= -Real(tol.scalar_tol) &&
                    (tr_qx - cert.z - eta).cwiseAbs().maxCoeff() <= Real(tol.scalar_tol);
  return g;
}

/// Convenience: load -> reciprocals -> SDP -> solve.
template <typename Real>
SolveReport<Real> solve(const StateEnsemble<Real> &e, const SolverOptions &opts = {}) {
  const auto rs = reciprocal_states(e);
  return solve(build_sdp(e, rs), opts);
}

} // namespace udisc

#endif // UDISC_SOLVER_HPP
