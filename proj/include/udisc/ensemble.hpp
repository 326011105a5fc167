#ifndef UDISC_ENSEMBLE_HPP
#define UDISC_ENSEMBLE_HPP

// State ensembles, reciprocal (dual-basis) states and unambiguous
// measurements built from them.
//
// An ensemble is an r x m matrix Phi of unit-norm, linearly independent
// columns |phi_i> with prior probabilities eta_i. The reciprocal states
// |phi~_i> span the same subspace and satisfy <phi~_i|phi_k> = delta_ik;
// every unambiguous measurement supported on that subspace has the form
// Pi_i = p_i |phi~_i><phi~_i|, Pi_0 = I - sum_i Pi_i.

#include <cmath>
#include <sstream>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

#include "udisc/types.hpp"

namespace udisc {

struct EnsembleTolerances {
  /// Column norms within this distance of 1 are accepted (and renormalized).
  double normalize = 1e-6;
  /// Priors must sum to one within this.
  double prior_sum = 1e-9;
  /// States are independent iff sigma_m > independence * sigma_1.
  double independence = 1e-10;
};

template <typename Real = double> class StateEnsemble;

template <typename Real>
StateEnsemble<Real> make_ensemble(CMatrix<Real> states, RVector<Real> priors,
                                  const EnsembleTolerances &tol = {});

template <typename Real>
class StateEnsemble {
public:
  StateEnsemble() = default;

  Eigen::Index dimension() const { return states_.rows(); }   // r
  Eigen::Index size() const { return states_.cols(); }        // m
  const CMatrix<Real> &states() const { return states_; }
  const RVector<Real> &priors() const { return priors_; }
  auto state(Eigen::Index i) const { return states_.col(i); }

  friend StateEnsemble make_ensemble<Real>(CMatrix<Real>, RVector<Real>,
                                           const EnsembleTolerances &);

private:
  CMatrix<Real> states_;
  RVector<Real> priors_;
};

/// Uniform prior vector of length m.
template <typename Real = double>
RVector<Real> uniform_priors(Eigen::Index m) {
  return RVector<Real>::Constant(m, Real(1) / Real(m));
}

/// Builds a validated ensemble. Columns within `tol.normalize` of unit norm
/// are renormalized; anything else throws ValidationError. Linearly
/// dependent states are rejected, since unambiguous discrimination is then
/// impossible.
template <typename Real>
StateEnsemble<Real> make_ensemble(CMatrix<Real> states, RVector<Real> priors,
                                  const EnsembleTolerances &tol) {
  const auto r = states.rows();
  const auto m = states.cols();
  if (m == 0 || r == 0) throw ValidationError("ensemble must contain at least one state");
  if (priors.size() != m) {
    std::ostringstream os;
    os << "dimension mismatch: " << m << " states but " << priors.size() << " priors";
    throw ValidationError(os.str());
  }
  if (m > r) {
    std::ostringstream os;
    os << "linearly dependent states: " << m << " states in dimension " << r
       << " (unambiguous discrimination impossible)";
    throw ValidationError(os.str());
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const Real n = states.col(i).norm();
    if (!std::isfinite(static_cast<double>(n)) || std::abs(n - Real(1)) > Real(tol.normalize)) {
      std::ostringstream os;
      os << "state " << i << " is not unit norm (norm " << static_cast<double>(n) << ")";
      throw ValidationError(os.str());
    }
    // leave already-normalized columns bit-identical, so that re-validating
    // (new priors, file round trip) does not move degenerate singular vectors
    if (std::abs(n - Real(1)) > Real(8) * std::numeric_limits<Real>::epsilon()) states.col(i) /= n;
  }
  Real total = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(priors(i) > Real(0)) || priors(i) > Real(1)) {
      std::ostringstream os;
      os << "prior " << i << " must lie in (0, 1], got " << static_cast<double>(priors(i));
      throw ValidationError(os.str());
    }
    total += priors(i);
  }
  if (std::abs(total - Real(1)) > Real(tol.prior_sum)) {
    std::ostringstream os;
    os << "priors must sum to 1, got " << static_cast<double>(total);
    throw ValidationError(os.str());
  }
  Eigen::JacobiSVD<CMatrix<Real>> svd(states);
  const auto &sv = svd.singularValues();
  if (!(sv(m - 1) > Real(tol.independence) * sv(0))) {
    std::ostringstream os;
    os << "linearly dependent states: sigma_min/sigma_max = "
       << static_cast<double>(sv(m - 1) / sv(0))
       << " (unambiguous discrimination impossible)";
    throw ValidationError(os.str());
  }
  StateEnsemble<Real> e;
  e.states_ = std::move(states);
  e.priors_ = std::move(priors);
  return e;
}

template <typename Real>
StateEnsemble<Real> make_ensemble(CMatrix<Real> states, const EnsembleTolerances &tol = {}) {
  auto m = states.cols();
  return make_ensemble<Real>(std::move(states), uniform_priors<Real>(m), tol);
}

/// Same states, different priors.
template <typename Real>
StateEnsemble<Real> with_priors(const StateEnsemble<Real> &e, std::type_identity_t<RVector<Real>> priors) {
  return make_ensemble<Real>(e.states(), std::move(priors));
}

/// Reciprocal states together with the SVD Phi = U Sigma V^* they were
/// computed from.
template <typename Real = double>
struct ReciprocalSet {
  CMatrix<Real> reciprocals;     ///< r x m, column i is |phi~_i>
  CMatrix<Real> u;               ///< r x r unitary
  RVector<Real> singular_values; ///< sigma_1 >= ... >= sigma_m > 0
  CMatrix<Real> v;               ///< m x m unitary
  CMatrix<Real> gram_pinv;       ///< (Phi Phi^*)^dagger, r x r

  Eigen::Index dimension() const { return reciprocals.rows(); }
  Eigen::Index size() const { return reciprocals.cols(); }
  Real sigma_min() const { return singular_values(singular_values.size() - 1); }
  auto reciprocal(Eigen::Index i) const { return reciprocals.col(i); }
};

/// Computes the reciprocal states through the SVD, Phi~ = U (Sigma^dagger)^* V^*.
template <typename Real>
ReciprocalSet<Real> reciprocal_states(const StateEnsemble<Real> &e) {
  const auto m = e.size();
  Eigen::JacobiSVD<CMatrix<Real>> svd(e.states(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  ReciprocalSet<Real> rs;
  rs.u = svd.matrixU();
  rs.v = svd.matrixV();
  rs.singular_values = svd.singularValues();
  if (!(rs.singular_values(m - 1) > Real(0)))
    throw ValidationError("numerical rank deficiency in state matrix");
  const auto um = rs.u.leftCols(m);
  RVector<Real> inv = rs.singular_values.cwiseInverse();
  rs.reciprocals = um * inv.asDiagonal() * rs.v.adjoint();
  rs.gram_pinv = um * inv.cwiseAbs2().asDiagonal() * um.adjoint();
  return rs;
}

/// Phi (Phi^* Phi)^{-1}, computed directly from the Gram matrix. Used as an
/// independent route for the SVD-based reciprocals.
template <typename Real>
CMatrix<Real> reciprocals_via_gram(const StateEnsemble<Real> &e) {
  const CMatrix<Real> gram = e.states().adjoint() * e.states();
  return e.states() * gram.ldlt().solve(CMatrix<Real>::Identity(e.size(), e.size()));
}

/// (Phi Phi^*)^a restricted to the span of the states: U_m diag(sigma^{2a}) U_m^*.
/// Negative exponents invert on the support only.
template <typename Real>
CMatrix<Real> frame_operator_power(const ReciprocalSet<Real> &rs, Real exponent) {
  const auto m = rs.size();
  const auto um = rs.u.leftCols(m);
  RVector<Real> d(m);
  for (Eigen::Index k = 0; k < m; ++k)
    d(k) = std::pow(rs.singular_values(k), Real(2) * exponent);
  return um * d.asDiagonal() * um.adjoint();
}

/// The rank-one operators Q_i = |phi~_i><phi~_i|.
template <typename Real>
std::vector<CMatrix<Real>> gram_operators(const ReciprocalSet<Real> &rs) {
  std::vector<CMatrix<Real>> out;
  out.reserve(static_cast<std::size_t>(rs.size()));
  for (Eigen::Index i = 0; i < rs.size(); ++i)
    out.emplace_back(rs.reciprocal(i) * rs.reciprocal(i).adjoint());
  return out;
}

/// sum_i w_i Q_i without forming the individual Q_i.
template <typename Real>
CMatrix<Real> weighted_gram_sum(const ReciprocalSet<Real> &rs, const std::type_identity_t<RVector<Real>> &w) {
  return rs.reciprocals * w.template cast<Complex<Real>>().asDiagonal() * rs.reciprocals.adjoint();
}

/// Unambiguous measurement Pi_i = p_i Q_i with inconclusive element Pi_0.
template <typename Real = double>
struct Measurement {
  RVector<Real> p;
  std::vector<CMatrix<Real>> operators;
  CMatrix<Real> inconclusive;

  Eigen::Index size() const { return p.size(); }
};

template <typename Real>
Measurement<Real> make_measurement(const ReciprocalSet<Real> &rs, std::type_identity_t<RVector<Real>> p) {
  if (p.size() != rs.size()) throw DimensionError("measurement: p has wrong length");
  Measurement<Real> meas;
  meas.operators.reserve(static_cast<std::size_t>(p.size()));
  meas.inconclusive = CMatrix<Real>::Identity(rs.dimension(), rs.dimension());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CMatrix<Real> op = p(i) * (rs.reciprocal(i) * rs.reciprocal(i).adjoint());
    meas.inconclusive -= op;
    meas.operators.push_back(std::move(op));
  }
  meas.p = std::move(p);
  return meas;
}

/// Residuals of the measurement invariants against an ensemble.
template <typename Real = double>
struct MeasurementCheck {
  Real min_p = 0;
  Real max_p = 0;
  Real inconclusive_min_eigenvalue = 0; ///< must be >= -tolerance
  Real unambiguity = 0;                 ///< max_{i,k} |<phi_i|Pi_k|phi_i> - p_i delta_ik|
  bool valid = false;
};

template <typename Real>
MeasurementCheck<Real> check_measurement(const StateEnsemble<Real> &e, const Measurement<Real> &meas,
                                         Real tolerance = Real(1e-8)) {
  if (meas.size() != e.size() || meas.inconclusive.rows() != e.dimension())
    throw DimensionError("measurement does not match ensemble");
  MeasurementCheck<Real> c;
  c.min_p = meas.p.minCoeff();
  c.max_p = meas.p.maxCoeff();
  c.inconclusive_min_eigenvalue = detail::lambda_min<Real>(meas.inconclusive);
  for (Eigen::Index k = 0; k < meas.size(); ++k) {
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const Real prob = std::real(e.state(i).dot(meas.operators[k] * e.state(i)));
      const Real expected = i == k ? meas.p(i) : Real(0);
      c.unambiguity = std::max(c.unambiguity, std::abs(prob - expected));
    }
  }
  c.valid = c.min_p >= -tolerance && c.max_p <= Real(1) + tolerance &&
            c.inconclusive_min_eigenvalue >= -tolerance && c.unambiguity <= tolerance;
  return c;
}

template <typename Real = double>
struct DetectionSummary {
  Real total = 0;          ///< P_D = sum_i eta_i p_i
  RVector<Real> per_state; ///< p_i
  Real inconclusive = 0;   ///< 1 - P_D
};

template <typename Real>
DetectionSummary<Real> detection_probability(const StateEnsemble<Real> &e, const Measurement<Real> &meas) {
  if (meas.size() != e.size() || meas.inconclusive.rows() != e.dimension())
    throw DimensionError("measurement does not match ensemble");
  DetectionSummary<Real> d;
  d.per_state = meas.p;
  d.total = e.priors().dot(meas.p);
  d.inconclusive = Real(1) - d.total;
  return d;
}

} // namespace udisc

#endif // UDISC_ENSEMBLE_HPP
