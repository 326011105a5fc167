#ifndef UDISC_EPM_HPP
#define UDISC_EPM_HPP

// Equal-probability measurement (EPM): Pi_i = sigma_m^2 Q_i, the largest
// common detection probability, and three tests for its optimality.
//
// With Phi = U Sigma V^* and v_i the i-th column of V^*, the EPM is optimal
// when there are b_k >= 0 with
//
//   sum_{k=1}^{s} b_k |v_i(m-k+1)|^2 = eta_i,   i = 1..m,
//
// where s is the multiplicity of sigma_m. For s = 1 this is necessary and
// sufficient (b_1 = 1, i.e. eta_i = |v_i(m)|^2); for s > 1 it is only
// sufficient. The dual certificate is X = sigma_m^2 sum_k b_k |u_{m-k+1}><u_{m-k+1}|, z = 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "udisc/cone.hpp"
#include "udisc/ensemble.hpp"
#include "udisc/solver.hpp"

namespace udisc {

struct EpmTolerances {
  /// sigma_i, sigma_j share a distinct value when |sigma_i - sigma_j| <= grouping * sigma_1.
  double grouping = 1e-6;
  /// Exact-match tolerance for |v_i(m)|^2 = eta_i and for the LP residual.
  double match = 1e-8;
  /// Relative tolerance for the moment test constants a_t.
  double moment = 1e-8;
};

template <typename Real = double>
struct EpmAnalysis {
  Real p = 0;                           ///< sigma_m^2
  int s = 0;                            ///< multiplicity of sigma_m
  int q = 0;                            ///< number of distinct singular values
  std::vector<Real> distinct_values;    ///< lambda_1 > ... > lambda_q
  std::vector<int> multiplicities;      ///< s_1 ... s_q
  RMatrix<Real> last_rows;              ///< m x s, entry (i, k) = |v_i(m-k)|^2 (0-based k)
  Real min_separation = 0;              ///< smallest gap between distinct values / sigma_1
  bool borderline = false;              ///< some gap is within 10x the grouping tolerance
};

template <typename Real>
EpmAnalysis<Real> analyze_epm(const ReciprocalSet<Real> &rs, const EpmTolerances &tol = {}) {
  const auto m = rs.size();
  const auto &sv = rs.singular_values;
  EpmAnalysis<Real> a;
  a.p = sv(m - 1) * sv(m - 1);
  const Real thresh = Real(tol.grouping) * sv(0);
  a.min_separation = std::numeric_limits<Real>::infinity();
  a.distinct_values.push_back(sv(0));
  a.multiplicities.push_back(1);
  for (Eigen::Index k = 1; k < m; ++k) {
    const Real diff = sv(k - 1) - sv(k);
    if (diff <= thresh) {
      ++a.multiplicities.back();
    } else {
      a.min_separation = std::min(a.min_separation, diff / sv(0));
      a.distinct_values.push_back(sv(k));
      a.multiplicities.push_back(1);
    }
    if (diff > thresh / Real(10) && diff <= Real(10) * thresh) a.borderline = true;
  }
  // Report the smallest member of each cluster, so lambda_q = sigma_m.
  {
    Eigen::Index k = 0;
    for (std::size_t g = 0; g < a.distinct_values.size(); ++g) {
      k += a.multiplicities[g];
      a.distinct_values[g] = sv(k - 1);
    }
  }
  a.q = static_cast<int>(a.distinct_values.size());
  a.s = a.multiplicities.back();
  a.last_rows.resize(m, a.s);
  for (int k = 0; k < a.s; ++k)
    for (Eigen::Index i = 0; i < m; ++i)
      a.last_rows(i, k) = std::norm(rs.v(i, m - 1 - k));
  return a;
}

/// Pi_i = sigma_m^2 Q_i.
template <typename Real>
Measurement<Real> compute_epm(const ReciprocalSet<Real> &rs) {
  const Real p = rs.sigma_min() * rs.sigma_min();
  return make_measurement(rs, RVector<Real>::Constant(rs.size(), p));
}

template <typename Real>
Measurement<Real> compute_epm(const StateEnsemble<Real> &, const ReciprocalSet<Real> &rs) {
  return compute_epm(rs);
}

enum class EpmVerdict { Optimal, NotOptimal, SufficientTestInconclusive };

inline const char *to_string(EpmVerdict v) {
  switch (v) {
  case EpmVerdict::Optimal: return "Optimal";
  case EpmVerdict::NotOptimal: return "NotOptimal";
  case EpmVerdict::SufficientTestInconclusive: return "SufficientTestInconclusive";
  }
  return "?";
}

template <typename Real = double>
struct EpmOptimalityResult {
  EpmVerdict verdict = EpmVerdict::SufficientTestInconclusive;
  RVector<Real> comparison;       ///< s = 1 test: |v_i(m)|^2, to be compared with eta
  RVector<Real> b;                ///< LP witness (sum b = 1), empty if none
  RVector<Real> moment_constants; ///< a_t, t = 1..q (moment test)
  Real residual = 0;              ///< max deviation behind the verdict
  Real phase_one_objective = 0;   ///< min_b>=0 ||M b - eta||_inf (LP test)
};

/// Necessary and sufficient test for s = 1: optimal iff |v_i(m)|^2 = eta_i.
template <typename Real>
EpmOptimalityResult<Real> epm_optimality_s1(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs,
                                            const EpmTolerances &tol = {}) {
  const auto a = analyze_epm(rs, tol);
  if (a.s != 1)
    throw std::invalid_argument("sigma_m has multiplicity " + std::to_string(a.s) +
                                "; use the linear-programming test (epm_optimality_lp)");
  EpmOptimalityResult<Real> res;
  res.comparison = a.last_rows.col(0);
  res.residual = (res.comparison - e.priors()).cwiseAbs().maxCoeff();
  if (res.residual <= Real(tol.match)) {
    res.verdict = EpmVerdict::Optimal;
    res.b = RVector<Real>::Ones(1);
  } else {
    res.verdict = EpmVerdict::NotOptimal;
  }
  return res;
}

namespace detail {

template <typename Real>
RMatrix<Real> null_space(const RMatrix<Real> &a, Eigen::Index cols) {
  if (a.rows() == 0) return RMatrix<Real>::Identity(cols, cols);
  Eigen::JacobiSVD<RMatrix<Real>> svd(a, Eigen::ComputeFullV);
  const auto &sv = svd.singularValues();
  const Real thresh = std::max(a.rows(), a.cols()) * std::numeric_limits<Real>::epsilon() *
                      (sv.size() > 0 ? sv(0) : Real(0)) * Real(100);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > thresh) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

template <typename Real>
RVector<Real> min_norm_lstsq(const RMatrix<Real> &a, const RVector<Real> &rhs) {
  if (a.cols() == 0) return RVector<Real>();
  return a.completeOrthogonalDecomposition().solve(rhs);
}

/// Minimum-Euclidean-norm b >= 0 with M b = eta, by a primal active-set
/// method started from a (nearly) feasible point.
template <typename Real>
RVector<Real> min_norm_feasible(const RMatrix<Real> &mat, const RVector<Real> &eta, RVector<Real> b) {
  const auto s = mat.cols();
  std::vector<bool> active(static_cast<std::size_t>(s));
  auto free_indices = [&] {
    std::vector<Eigen::Index> f;
    for (Eigen::Index k = 0; k < s; ++k)
      if (!active[k]) f.push_back(k);
    return f;
  };
  auto columns = [&](const std::vector<Eigen::Index> &idx) {
    RMatrix<Real> out(mat.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = mat.col(idx[j]);
    return out;
  };

  // Clean start: drop tiny entries, then restore M b = eta on the support.
  for (Eigen::Index k = 0; k < s; ++k) {
    if (b(k) <= Real(1e-12)) {
      b(k) = 0;
      active[k] = true;
    }
  }
  {
    const auto f = free_indices();
    const RVector<Real> delta = min_norm_lstsq<Real>(columns(f), eta - mat * b);
    for (std::size_t j = 0; j < f.size(); ++j) b(f[j]) = std::max(Real(0), b(f[j]) + delta(j));
  }

  for (int iter = 0; iter < 10 * static_cast<int>(s) + 50; ++iter) {
    const auto f = free_indices();
    const RMatrix<Real> mf = columns(f);
    RVector<Real> bf(static_cast<Eigen::Index>(f.size()));
    for (std::size_t j = 0; j < f.size(); ++j) bf(j) = b(f[j]);
    const RMatrix<Real> z = null_space<Real>(mf, bf.size());
    const RVector<Real> d = -(z * (z.transpose() * bf));
    if (d.norm() <= Real(1e-14) * (Real(1) + b.norm())) {
      std::vector<Eigen::Index> w;
      for (Eigen::Index k = 0; k < s; ++k)
        if (active[k]) w.push_back(k);
      if (w.empty()) break;
      const RVector<Real> lambda = min_norm_lstsq<Real>(mf.transpose(), bf);
      const RVector<Real> mu = -(columns(w).transpose() * lambda);
      Eigen::Index worst;
      if (mu.minCoeff(&worst) >= Real(-1e-12)) break;
      active[w[worst]] = false;
      continue;
    }
    Real alpha = 1;
    Eigen::Index blocking = -1;
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (d(j) < 0) {
        const Real ratio = -bf(j) / d(j);
        if (ratio < alpha) {
          alpha = ratio;
          blocking = static_cast<Eigen::Index>(j);
        }
      }
    }
    for (std::size_t j = 0; j < f.size(); ++j) b(f[j]) += alpha * d(j);
    if (blocking >= 0) {
      b(f[blocking]) = 0;
      active[f[blocking]] = true;
    }
  }
  return b;
}

} // namespace detail

/// Phase-one linear program: min_{b >= 0} ||M b - eta||_inf, solved with the
/// interior-point engine (orthant block only). Returns (objective, b).
template <typename Real>
std::pair<Real, RVector<Real>> lp_phase_one(const RMatrix<Real> &mat, const RVector<Real> &eta) {
  const auto m = mat.rows(), s = mat.cols();
  // y = (b, t); maximize -t subject to b >= 0 and -t <= (M b - eta)_i <= t.
  ConeProblem<Real> cp;
  cp.c_mat.resize(0, 0);
  cp.factors.resize(0, s + 1);
  cp.c_lin.resize(s + 2 * m);
  cp.a_lin = RMatrix<Real>::Zero(s + 2 * m, s + 1);
  cp.c_lin.head(s).setZero();
  cp.a_lin.topLeftCorner(s, s) = -RMatrix<Real>::Identity(s, s);
  cp.c_lin.segment(s, m) = eta;
  cp.a_lin.block(s, 0, m, s) = mat;
  cp.a_lin.block(s, s, m, 1).setConstant(-1);
  cp.c_lin.tail(m) = -eta;
  cp.a_lin.block(s + m, 0, m, s) = -mat;
  cp.a_lin.block(s + m, s, m, 1).setConstant(-1);
  cp.b = RVector<Real>::Zero(s + 1);
  cp.b(s) = -1;

  ConeIterate<Real> start;
  start.y.resize(s + 1);
  start.y.head(s).setConstant(Real(1) / Real(s));
  start.y(s) = (mat * start.y.head(s) - eta).cwiseAbs().maxCoeff() + Real(1);
  start.s_lin = cp.c_lin - cp.a_lin * start.y;
  start.x_lin = RVector<Real>::Constant(s + 2 * m, Real(1) / Real(2 * m));
  ConeOptions opts;
  opts.tol_gap = 1e-12;
  opts.tol_feas = 1e-12;
  opts.tol_slack = 1e-12;
  opts.max_iters = 200;
  auto res = solve_cone(cp, std::move(start), opts);
  RVector<Real> b = res.point.y.head(s).cwiseMax(Real(0));
  return {(mat * b - eta).cwiseAbs().maxCoeff(), b};
}

/// Linear-programming test. Delegates to the exact test when s = 1; for
/// s > 1 an infeasible program is reported as inconclusive.
template <typename Real>
EpmOptimalityResult<Real> epm_optimality_lp(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs,
                                            const EpmTolerances &tol = {}) {
  const auto a = analyze_epm(rs, tol);
  if (a.s == 1) {
    auto res = epm_optimality_s1(e, rs, tol);
    res.phase_one_objective = lp_phase_one<Real>(a.last_rows, e.priors()).first;
    return res;
  }
  EpmOptimalityResult<Real> res;
  auto [t, b] = lp_phase_one<Real>(a.last_rows, e.priors());
  res.phase_one_objective = t;
  if (t <= Real(1e-6)) b = detail::min_norm_feasible<Real>(a.last_rows, e.priors(), b);
  res.residual = (a.last_rows * b - e.priors()).cwiseAbs().maxCoeff();
  if (res.residual <= Real(tol.match) && b.minCoeff() >= Real(0)) {
    res.verdict = EpmVerdict::Optimal;
    res.b = b;
  } else {
    res.verdict = EpmVerdict::SufficientTestInconclusive;
  }
  return res;
}

/// Priors under which the EPM is optimal: eta_i = sum_k b_k |v_i(m-k+1)|^2.
template <typename Real>
RVector<Real> priors_for_epm(const ReciprocalSet<Real> &rs, const std::type_identity_t<RVector<Real>> &b, const EpmTolerances &tol = {}) {
  const auto a = analyze_epm(rs, tol);
  if (b.size() != a.s)
    throw std::invalid_argument("priors_for_epm: expected " + std::to_string(a.s) + " coefficients, got " +
                                std::to_string(b.size()));
  if (b.size() > 0 && b.minCoeff() < Real(0)) throw std::invalid_argument("priors_for_epm: negative coefficient");
  if (std::abs(b.sum() - Real(1)) > Real(1e-10)) throw std::invalid_argument("priors_for_epm: coefficients must sum to 1");
  return a.last_rows * b;
}

/// <phi_i|(Phi Phi^*)^{t/2-1}|phi_i> for t = 1..q, as a q x m matrix.
template <typename Real>
RMatrix<Real> moment_matrix(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs, int q) {
  RMatrix<Real> out(q, e.size());
  for (int t = 1; t <= q; ++t) {
    const CMatrix<Real> power = frame_operator_power(rs, Real(t) / Real(2) - Real(1));
    const CMatrix<Real> applied = power * e.states();
    for (Eigen::Index i = 0; i < e.size(); ++i) out(t - 1, i) = std::real(e.state(i).dot(applied.col(i)));
  }
  return out;
}

/// Sufficient test on the states themselves: the EPM is optimal if
/// <phi_i|(Phi Phi^*)^{t/2-1}|phi_i> = eta_i a_t for t = 1..q.
template <typename Real>
EpmOptimalityResult<Real> epm_moment_test(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs,
                                          const EpmTolerances &tol = {}) {
  const auto a = analyze_epm(rs, tol);
  const RMatrix<Real> mom = moment_matrix(e, rs, a.q);
  EpmOptimalityResult<Real> res;
  res.moment_constants.resize(a.q);
  Real worst = 0;
  for (int t = 0; t < a.q; ++t) {
    const Real at = mom.row(t).sum(); // sum_i eta_i a_t with sum eta = 1
    res.moment_constants(t) = at;
    for (Eigen::Index i = 0; i < e.size(); ++i)
      worst = std::max(worst, std::abs(mom(t, i) / e.priors()(i) - at) / std::abs(at));
  }
  res.residual = worst;
  if (worst <= Real(tol.moment)) {
    res.verdict = EpmVerdict::Optimal;
    res.b = RVector<Real>::Constant(a.s, Real(1) / Real(a.s));
  } else {
    res.verdict = EpmVerdict::SufficientTestInconclusive;
  }
  return res;
}

template <typename Real>
EpmOptimalityResult<Real> epm_moment_test(const StateEnsemble<Real> &e, const EpmTolerances &tol = {}) {
  return epm_moment_test(e, reciprocal_states(e), tol);
}

/// Dual certificate for the EPM from an LP witness b (sum b = 1).
template <typename Real>
DualCertificate<Real> epm_certificate(const ReciprocalSet<Real> &rs, const std::type_identity_t<RVector<Real>> &b) {
  const auto m = rs.size();
  if (b.size() < 1 || b.size() > m) throw DimensionError("epm_certificate: bad witness length");
  const Real p = rs.sigma_min() * rs.sigma_min();
  DualCertificate<Real> cert;
  cert.x = CMatrix<Real>::Zero(rs.dimension(), rs.dimension());
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const auto u = rs.u.col(m - 1 - k);
    cert.x += (p * b(k)) * (u * u.adjoint());
  }
  cert.z = RVector<Real>::Zero(m);
  return cert;
}

/// All three tests plus the EPM itself.
template <typename Real = double>
struct EpmReport {
  EpmAnalysis<Real> analysis;
  Measurement<Real> measurement;
  std::optional<EpmOptimalityResult<Real>> exact_test; ///< only when s = 1
  EpmOptimalityResult<Real> lp_test;
  EpmOptimalityResult<Real> moment_test;
  EpmVerdict verdict = EpmVerdict::SufficientTestInconclusive;
  std::optional<DualCertificate<Real>> certificate;
  std::optional<VerificationReport<Real>> verification;
};

template <typename Real>
EpmReport<Real> analyze_epm_optimality(const StateEnsemble<Real> &e, const ReciprocalSet<Real> &rs,
                                       const EpmTolerances &tol = {}) {
  EpmReport<Real> rep;
  rep.analysis = analyze_epm(rs, tol);
  rep.measurement = compute_epm(rs);
  if (rep.analysis.s == 1) rep.exact_test = epm_optimality_s1(e, rs, tol);
  rep.lp_test = epm_optimality_lp(e, rs, tol);
  rep.moment_test = epm_moment_test(e, rs, tol);
  if (rep.exact_test) {
    rep.verdict = rep.exact_test->verdict;
  } else if (rep.lp_test.verdict == EpmVerdict::Optimal || rep.moment_test.verdict == EpmVerdict::Optimal) {
    rep.verdict = EpmVerdict::Optimal;
  }
  const RVector<Real> *witness = nullptr;
  if (rep.lp_test.verdict == EpmVerdict::Optimal) witness = &rep.lp_test.b;
  else if (rep.moment_test.verdict == EpmVerdict::Optimal) witness = &rep.moment_test.b;
  if (witness) {
    rep.certificate = epm_certificate(rs, *witness);
    rep.verification = verify_certificate(e, rs, rep.measurement.p, *rep.certificate);
  }
  return rep;
}

} // namespace udisc

#endif // UDISC_EPM_HPP
