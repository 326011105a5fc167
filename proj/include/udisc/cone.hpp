#ifndef UDISC_CONE_HPP
#define UDISC_CONE_HPP

// Primal-dual path-following interior-point method for conic programs over
// K = H_+^n x R_+^l (one Hermitian PSD block and one nonnegative orthant).
//
//   maximize    b^T y
//   subject to  S = C - sum_i y_i a_i a_i^*  in H_+^n
//               s = c - A y                  in R_+^l
//
//   minimize    Tr(C X) + c^T x
//   subject to  a_i^* X a_i + (A^T x)_i = b_i,   X in H_+^n, x in R_+^l
//
// The matrix-block constraint operators are rank one, so the Schur
// complement is assembled from two k x k Gram matrices:
//   M_ij = Re[(a_i^* X a_j)(a_j^* S^{-1} a_i)] + (A^T diag(x/s) A)_ij.
// Search directions are HKM (X-side symmetrized) with a Mehrotra
// predictor-corrector. Infeasible starting points are allowed; residuals
// are driven to zero alongside the gap.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "udisc/types.hpp"

namespace udisc {

template <typename Real = double>
struct ConeProblem {
  CMatrix<Real> c_mat;   ///< n x n Hermitian (n may be 0)
  CMatrix<Real> factors; ///< n x k; column i is a_i
  RVector<Real> c_lin;   ///< l
  RMatrix<Real> a_lin;   ///< l x k
  RVector<Real> b;       ///< k

  Eigen::Index num_vars() const { return b.size(); }
  Eigen::Index mat_dim() const { return c_mat.rows(); }
  Eigen::Index lin_dim() const { return c_lin.size(); }
};

template <typename Real = double>
struct ConeIterate {
  RVector<Real> y;
  CMatrix<Real> s_mat;
  RVector<Real> s_lin;
  CMatrix<Real> x_mat;
  RVector<Real> x_lin;
};

struct ConeOptions {
  double tol_gap = 1e-8;
  double tol_feas = 1e-9;
  /// Bound on ||X S||_F and max_i x_i s_i at termination.
  double tol_slack = 1e-7;
  /// Gaps are measured relative to (objective_scale + |b^T y|).
  double objective_scale = 1.0;
  int max_iters = 100;
  double step_fraction = 0.98;
};

enum class ConeStatus { Optimal, MaxIterations, NumericalFailure };

inline const char *to_string(ConeStatus s) {
  switch (s) {
  case ConeStatus::Optimal: return "Optimal";
  case ConeStatus::MaxIterations: return "MaxIterations";
  case ConeStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

/// One row per iterate (including the starting point).
template <typename Real = double>
struct ConeTrace {
  Real primal_objective; ///< b^T y
  Real dual_objective;   ///< Tr(C X) + c^T x
  Real complementarity;  ///< Tr(X S) + x^T s
  Real slackness;        ///< max(||X S||_F, max_i x_i s_i)
  Real primal_residual;  ///< ||C - S - A^T y|| (relative)
  Real dual_residual;    ///< ||b - A(X, x)||_inf (relative)
};

template <typename Real = double>
struct ConeResult {
  ConeIterate<Real> point;
  ConeStatus status = ConeStatus::NumericalFailure;
  int iterations = 0;
  std::vector<ConeTrace<Real>> trace;

  Real gap() const { return trace.empty() ? Real(0) : trace.back().dual_objective - trace.back().primal_objective; }
};

namespace detail {

template <typename Real>
struct ConeResiduals {
  CMatrix<Real> d_mat; // C - S - sum y_i a_i a_i^*
  RVector<Real> d_lin; // c - s - A y
  RVector<Real> p;     // b - A(X, x)
};

template <typename Real>
CMatrix<Real> rank_one_sum(const CMatrix<Real> &factors, const RVector<Real> &w) {
  return factors * w.template cast<Complex<Real>>().asDiagonal() * factors.adjoint();
}

template <typename Real>
RVector<Real> constraint_map(const ConeProblem<Real> &prob, const CMatrix<Real> &x_mat,
                             const RVector<Real> &x_lin) {
  RVector<Real> out = RVector<Real>::Zero(prob.num_vars());
  if (prob.mat_dim() > 0)
    out += (prob.factors.adjoint() * x_mat * prob.factors).diagonal().real();
  if (prob.lin_dim() > 0) out += prob.a_lin.transpose() * x_lin;
  return out;
}

template <typename Real>
ConeResiduals<Real> residuals(const ConeProblem<Real> &prob, const ConeIterate<Real> &it) {
  ConeResiduals<Real> r;
  if (prob.mat_dim() > 0)
    r.d_mat = prob.c_mat - it.s_mat - rank_one_sum<Real>(prob.factors, it.y);
  else
    r.d_mat.resize(0, 0);
  if (prob.lin_dim() > 0)
    r.d_lin = prob.c_lin - it.s_lin - prob.a_lin * it.y;
  else
    r.d_lin.resize(0);
  r.p = prob.b - constraint_map(prob, it.x_mat, it.x_lin);
  return r;
}

/// Largest alpha keeping x + alpha * dx PSD, for x positive definite.
template <typename Real>
Real max_psd_step(const CMatrix<Real> &x, const CMatrix<Real> &dx) {
  if (x.rows() == 0) return std::numeric_limits<Real>::infinity();
  Eigen::LLT<CMatrix<Real>> llt(hermitian_part(x));
  if (llt.info() != Eigen::Success) return Real(0);
  CMatrix<Real> w = llt.matrixL().solve(hermitian_part(dx));
  w = llt.matrixL().solve(w.adjoint().eval()).adjoint().eval();
  const Real lmin = lambda_min<Real>(w);
  return lmin < 0 ? Real(-1) / lmin : std::numeric_limits<Real>::infinity();
}

template <typename Real>
Real max_orthant_step(const RVector<Real> &x, const RVector<Real> &dx) {
  Real alpha = std::numeric_limits<Real>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0) alpha = std::min(alpha, -x(i) / dx(i));
  return alpha;
}

template <typename Real>
Real inner(const CMatrix<Real> &a, const CMatrix<Real> &b) {
  // Re Tr(A^* B) for Hermitian A, B equals Re Tr(A B).
  return a.size() == 0 ? Real(0) : (a.array().conjugate() * b.array()).real().sum();
}

} // namespace detail

/// Objective values and scaled residuals of an iterate.
template <typename Real>
ConeTrace<Real> evaluate(const ConeProblem<Real> &prob, const ConeIterate<Real> &it) {
  auto res = detail::residuals(prob, it);
  ConeTrace<Real> t;
  t.primal_objective = prob.b.dot(it.y);
  t.dual_objective = (prob.mat_dim() > 0 ? std::real(prob.c_mat.cwiseProduct(it.x_mat.transpose()).sum()) : Real(0)) +
                     (prob.lin_dim() > 0 ? prob.c_lin.dot(it.x_lin) : Real(0));
  t.complementarity = detail::inner<Real>(it.x_mat, it.s_mat) + (prob.lin_dim() > 0 ? it.x_lin.dot(it.s_lin) : Real(0));
  t.slackness = prob.mat_dim() > 0 ? (it.x_mat * it.s_mat).norm() : Real(0);
  if (prob.lin_dim() > 0) t.slackness = std::max(t.slackness, it.x_lin.cwiseProduct(it.s_lin).cwiseAbs().maxCoeff());
  const Real c_scale = Real(1) + std::max(detail::max_abs<Real>(prob.c_mat),
                                          prob.lin_dim() > 0 ? prob.c_lin.cwiseAbs().maxCoeff() : Real(0));
  const Real b_scale = Real(1) + (prob.num_vars() > 0 ? prob.b.cwiseAbs().maxCoeff() : Real(0));
  Real pr = detail::max_abs<Real>(res.d_mat);
  if (res.d_lin.size() > 0) pr = std::max(pr, res.d_lin.cwiseAbs().maxCoeff());
  t.primal_residual = pr / c_scale;
  t.dual_residual = (res.p.size() > 0 ? res.p.cwiseAbs().maxCoeff() : Real(0)) / b_scale;
  return t;
}

/// Runs the interior-point method from `start`, which must have S, s, X, x
/// strictly inside the cone (the equality residuals may be nonzero).
template <typename Real>
ConeResult<Real> solve_cone(const ConeProblem<Real> &prob, ConeIterate<Real> start, const ConeOptions &opts = {}) {
  using CM = CMatrix<Real>;
  using RV = RVector<Real>;
  const auto n = prob.mat_dim();
  const auto l = prob.lin_dim();
  const auto k = prob.num_vars();
  const Real nu = Real(n + l);

  ConeResult<Real> result;
  result.point = std::move(start);
  auto &it = result.point;

  auto gap_converged = [&](const ConeTrace<Real> &t) {
    const Real gap = t.dual_objective - t.primal_objective;
    const Real scale = Real(opts.objective_scale) + std::abs(t.primal_objective);
    const Real rel_gap = std::abs(gap) / scale;
    const Real rel_comp = t.complementarity / scale;
    return rel_gap <= Real(opts.tol_gap) && rel_comp <= Real(opts.tol_gap) &&
           t.primal_residual <= Real(opts.tol_feas) && t.dual_residual <= Real(opts.tol_feas);
  };
  auto converged = [&](const ConeTrace<Real> &t) {
    return gap_converged(t) && t.slackness <= Real(opts.tol_slack);
  };

  result.trace.push_back(evaluate(prob, it));
  if (converged(result.trace.back())) {
    result.status = ConeStatus::Optimal;
    return result;
  }

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const auto res = detail::residuals(prob, it);
    const Real mu = result.trace.back().complementarity / nu;

    // S^{-1}
    CM s_inv;
    if (n > 0) {
      Eigen::LLT<CM> llt(detail::hermitian_part(it.s_mat));
      if (llt.info() != Eigen::Success) {
        result.status = ConeStatus::NumericalFailure;
        return result;
      }
      s_inv = llt.solve(CM::Identity(n, n));
      s_inv = detail::hermitian_part(s_inv);
    }
    RV s_lin_inv = l > 0 ? RV(it.s_lin.cwiseInverse()) : RV();

    // Schur complement.
    RMatrix<Real> schur = RMatrix<Real>::Zero(k, k);
    CM f_x, f_sinv;
    if (n > 0) {
      f_x = prob.factors.adjoint() * it.x_mat * prob.factors;
      f_sinv = prob.factors.adjoint() * s_inv * prob.factors;
      schur += (f_x.array() * f_sinv.array().conjugate()).real().matrix();
    }
    if (l > 0)
      schur += prob.a_lin.transpose() * it.x_lin.cwiseProduct(s_lin_inv).asDiagonal() * prob.a_lin;
    schur = 0.5 * (schur + schur.transpose());
    Eigen::LLT<RMatrix<Real>> schur_llt(schur);
    Eigen::LDLT<RMatrix<Real>> schur_ldlt;
    const bool use_llt = schur_llt.info() == Eigen::Success;
    if (!use_llt) {
      schur_ldlt.compute(schur);
      if (schur_ldlt.info() != Eigen::Success) {
        result.status = ConeStatus::NumericalFailure;
        return result;
      }
    }

    struct Direction {
      RV dy;
      CM ds_mat, dx_mat;
      RV ds_lin, dx_lin;
    };

    // sigma_mu: centering target; corr_*: second-order Mehrotra terms.
    auto direction = [&](Real sigma_mu, const CM *corr_mat, const RV *corr_lin) {
      Direction d;
      // Part of dX, dx independent of dy.
      CM dx0;
      if (n > 0) {
        CM t = sigma_mu * s_inv - it.x_mat - it.x_mat * res.d_mat * s_inv;
        if (corr_mat) t -= (*corr_mat) * s_inv;
        dx0 = detail::hermitian_part(t);
      }
      RV dxl0;
      if (l > 0) {
        dxl0 = sigma_mu * s_lin_inv - it.x_lin - it.x_lin.cwiseProduct(res.d_lin).cwiseProduct(s_lin_inv);
        if (corr_lin) dxl0 -= corr_lin->cwiseProduct(s_lin_inv);
      }
      RV rhs = res.p - detail::constraint_map(prob, n > 0 ? dx0 : CM(), l > 0 ? dxl0 : RV());
      d.dy = use_llt ? RV(schur_llt.solve(rhs)) : RV(schur_ldlt.solve(rhs));
      if (n > 0) {
        const CM ady = detail::rank_one_sum<Real>(prob.factors, d.dy);
        d.ds_mat = res.d_mat - ady;
        d.dx_mat = dx0 + detail::hermitian_part(it.x_mat * ady * s_inv);
      }
      if (l > 0) {
        const RV ady = prob.a_lin * d.dy;
        d.ds_lin = res.d_lin - ady;
        d.dx_lin = dxl0 + it.x_lin.cwiseProduct(ady).cwiseProduct(s_lin_inv);
      }
      return d;
    };

    auto step_lengths = [&](const Direction &d) {
      Real ap = std::numeric_limits<Real>::infinity();
      Real ad = std::numeric_limits<Real>::infinity();
      if (n > 0) {
        ap = std::min(ap, detail::max_psd_step<Real>(it.s_mat, d.ds_mat));
        ad = std::min(ad, detail::max_psd_step<Real>(it.x_mat, d.dx_mat));
      }
      if (l > 0) {
        ap = std::min(ap, detail::max_orthant_step<Real>(it.s_lin, d.ds_lin));
        ad = std::min(ad, detail::max_orthant_step<Real>(it.x_lin, d.dx_lin));
      }
      return std::pair<Real, Real>{ap, ad};
    };

    Direction d;
    if (gap_converged(result.trace.back())) {
      // Objectives have converged but X S is not yet small: centering step
      // to realign the eigenspaces of X and S, still shrinking mu.
      d = direction(Real(0.5) * mu, nullptr, nullptr);
    } else {
      // Predictor.
      const Direction aff = direction(Real(0), nullptr, nullptr);
      auto [ap_aff, ad_aff] = step_lengths(aff);
      ap_aff = std::min(Real(1), ap_aff);
      ad_aff = std::min(Real(1), ad_aff);
      Real comp_aff = 0;
      if (n > 0)
        comp_aff += detail::inner<Real>(CM(it.x_mat + ad_aff * aff.dx_mat), CM(it.s_mat + ap_aff * aff.ds_mat));
      if (l > 0) comp_aff += (it.x_lin + ad_aff * aff.dx_lin).dot(it.s_lin + ap_aff * aff.ds_lin);
      const Real mu_aff = std::max(Real(0), comp_aff / nu);
      Real sigma = mu > 0 ? std::pow(mu_aff / mu, 3) : Real(0);
      sigma = std::clamp(sigma, Real(0), Real(1));

      // Corrector.
      CM corr_mat;
      RV corr_lin;
      if (n > 0) corr_mat = aff.dx_mat * aff.ds_mat;
      if (l > 0) corr_lin = aff.dx_lin.cwiseProduct(aff.ds_lin);
      d = direction(sigma * mu, n > 0 ? &corr_mat : nullptr, l > 0 ? &corr_lin : nullptr);
    }
    auto [ap, ad] = step_lengths(d);
    const Real tau = Real(opts.step_fraction);
    ap = std::min(Real(1), tau * ap);
    ad = std::min(Real(1), tau * ad);

    const ConeIterate<Real> previous = it;
    it.y += ap * d.dy;
    if (n > 0) {
      it.s_mat = detail::hermitian_part(CM(it.s_mat + ap * d.ds_mat));
      it.x_mat = detail::hermitian_part(CM(it.x_mat + ad * d.dx_mat));
    }
    if (l > 0) {
      it.s_lin += ap * d.ds_lin;
      it.x_lin += ad * d.dx_lin;
    }
    const auto trace = evaluate(prob, it);
    const auto &last = result.trace.back();
    const Real feas_floor = Real(opts.tol_feas);
    const bool blew_up = !std::isfinite(static_cast<double>(trace.complementarity)) ||
                         trace.primal_residual > std::max(Real(10) * last.primal_residual, feas_floor) ||
                         trace.dual_residual > std::max(Real(10) * last.dual_residual, feas_floor);
    if (blew_up) {
      // Round-off has taken over; keep the last sound iterate.
      it = previous;
      result.status = converged(last) ? ConeStatus::Optimal : ConeStatus::NumericalFailure;
      return result;
    }
    result.iterations = iter;
    result.trace.push_back(trace);
    if (converged(trace)) {
      result.status = ConeStatus::Optimal;
      return result;
    }
  }
  result.status = ConeStatus::MaxIterations;
  return result;
}

} // namespace udisc

#endif // UDISC_CONE_HPP
