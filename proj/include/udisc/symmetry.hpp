#ifndef UDISC_SYMMETRY_HPP
#define UDISC_SYMMETRY_HPP

// Geometrically uniform (GU) and compound GU (CGU) state sets.
//
// GU:  |phi_i> = U_i |phi>,       U_i in a finite unitary group G.
// CGU: |phi_ik> = U_i |phi_k>,    k = 1..r_g generators, columns k-major.
// Optionally the generators are themselves GU, |phi_k> = V_k |phi>, V_k in Q.
//
// For a GU set the EPM is optimal with p = sigma_m^2 and the reciprocal
// states are U_i |phi~>, |phi~> = (Phi Phi^*)^dagger |phi>.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "udisc/ensemble.hpp"
#include "udisc/epm.hpp"
#include "udisc/solver.hpp"

namespace udisc {

template <typename Real = double>
struct UnitaryGroup {
  std::vector<CMatrix<Real>> elements;

  Eigen::Index dimension() const { return elements.empty() ? 0 : elements.front().rows(); }
  std::size_t size() const { return elements.size(); }
  const CMatrix<Real> &operator[](std::size_t i) const { return elements[i]; }
};

struct GroupTolerances {
  double unitarity = 1e-10;
  double membership = 1e-8;
};

template <typename Real = double>
struct GroupCheck {
  Real unitarity = 0;   ///< max_i ||U_i^* U_i - I||_F
  Real identity = 0;    ///< min_i ||U_i - I||_F
  Real closure = 0;     ///< max_{i,j} min_k ||U_i U_j - U_k||_F
  Real inverses = 0;    ///< max_i min_k ||U_i^* - U_k||_F
  bool shapes_ok = true;
  bool passed = false;
  std::string failure;  ///< first failing property, empty if passed
};

namespace detail {

/// Index of the group element nearest to `a` and its Frobenius distance.
template <typename Real>
std::pair<std::size_t, Real> nearest_element(const UnitaryGroup<Real> &g, const CMatrix<Real> &a) {
  std::size_t best = 0;
  Real dist = std::numeric_limits<Real>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Real d = (a - g[k]).norm();
    if (d < dist) {
      dist = d;
      best = k;
    }
  }
  return {best, dist};
}

} // namespace detail

template <typename Real>
GroupCheck<Real> verify_group(const UnitaryGroup<Real> &g, const GroupTolerances &tol = {}) {
  GroupCheck<Real> c;
  if (g.size() == 0) {
    c.shapes_ok = false;
    c.failure = "empty group";
    return c;
  }
  const auto d = g.dimension();
  for (const auto &u : g.elements)
    if (u.rows() != d || u.cols() != d) c.shapes_ok = false;
  if (!c.shapes_ok) {
    c.failure = "elements must be square matrices of one dimension";
    return c;
  }
  const CMatrix<Real> id = CMatrix<Real>::Identity(d, d);
  for (const auto &u : g.elements) c.unitarity = std::max(c.unitarity, Real((u.adjoint() * u - id).norm()));
  c.identity = detail::nearest_element(g, id).second;
  for (const auto &a : g.elements) {
    c.inverses = std::max(c.inverses, detail::nearest_element(g, CMatrix<Real>(a.adjoint())).second);
    for (const auto &b : g.elements)
      c.closure = std::max(c.closure, detail::nearest_element(g, CMatrix<Real>(a * b)).second);
  }
  if (c.unitarity > Real(tol.unitarity)) c.failure = "unitarity";
  else if (c.identity > Real(tol.membership)) c.failure = "identity";
  else if (c.closure > Real(tol.membership)) c.failure = "closure";
  else if (c.inverses > Real(tol.membership)) c.failure = "inverses";
  c.passed = c.failure.empty();
  return c;
}

/// Closure of a set of unitaries under multiplication, identity first.
template <typename Real>
UnitaryGroup<Real> generate_group(const std::vector<CMatrix<Real>> &generators, std::size_t max_size = 4096,
                                  Real tol = Real(1e-8)) {
  if (generators.empty()) throw DimensionError("generate_group: no generators");
  const auto d = generators.front().rows();
  UnitaryGroup<Real> g;
  g.elements.push_back(CMatrix<Real>::Identity(d, d));
  for (std::size_t head = 0; head < g.size(); ++head) {
    for (const auto &s : generators) {
      CMatrix<Real> cand = s * g[head];
      if (detail::nearest_element(g, cand).second > tol) {
        g.elements.push_back(std::move(cand));
        if (g.size() > max_size) throw ValidationError("generate_group: group exceeds size limit");
      }
    }
  }
  return g;
}

/// {U_i V_k}, i-major; a group when G and Q commute elementwise.
template <typename Real>
UnitaryGroup<Real> product_set(const UnitaryGroup<Real> &g, const UnitaryGroup<Real> &q) {
  UnitaryGroup<Real> out;
  for (const auto &u : g.elements)
    for (const auto &v : q.elements) out.elements.push_back(u * v);
  return out;
}

template <typename Real = double>
struct SymmetrySpec {
  UnitaryGroup<Real> group;
  std::vector<CVector<Real>> generators;
  std::optional<UnitaryGroup<Real>> generator_group;

  bool is_gu() const { return generators.size() == 1; }
  std::size_t num_generators() const { return generators.size(); }
};

/// Checks shapes, the group, and (if present) |phi_k> = V_k |phi>. A single
/// generator together with a generator group is expanded to V_k |phi>.
template <typename Real>
SymmetrySpec<Real> make_symmetry_spec(UnitaryGroup<Real> group, std::vector<CVector<Real>> generators,
                                      std::optional<UnitaryGroup<Real>> generator_group = std::nullopt,
                                      const GroupTolerances &tol = {}) {
  const auto gc = verify_group(group, tol);
  if (!gc.passed) throw ValidationError("group check failed: " + gc.failure);
  if (generators.empty()) throw ValidationError("symmetry spec needs at least one generator");
  const auto d = group.dimension();
  for (const auto &v : generators)
    if (v.size() != d) throw ValidationError("generator length does not match group dimension");
  if (generator_group) {
    const auto qc = verify_group(*generator_group, tol);
    if (!qc.passed) throw ValidationError("generator group check failed: " + qc.failure);
    if (generator_group->dimension() != d) throw ValidationError("generator group dimension mismatch");
    if (generators.size() == 1) {
      const CVector<Real> phi = generators.front();
      generators.clear();
      for (const auto &v : generator_group->elements) generators.push_back(v * phi);
    } else {
      if (generators.size() != generator_group->size())
        throw ValidationError("number of generators does not match generator group size");
      for (std::size_t k = 0; k < generators.size(); ++k) {
        if (((*generator_group)[k] * generators.front() - generators[k]).norm() > Real(tol.membership))
          throw ValidationError("generator " + std::to_string(k) + " is not V_k applied to the first generator");
      }
    }
  }
  SymmetrySpec<Real> spec;
  spec.group = std::move(group);
  spec.generators = std::move(generators);
  spec.generator_group = std::move(generator_group);
  return spec;
}

/// State matrix U_i |phi_k>, k-major, with uniform priors.
template <typename Real>
StateEnsemble<Real> expand(const SymmetrySpec<Real> &spec) {
  const auto l = static_cast<Eigen::Index>(spec.group.size());
  const auto rg = static_cast<Eigen::Index>(spec.generators.size());
  CMatrix<Real> phi(spec.group.dimension(), l * rg);
  for (Eigen::Index k = 0; k < rg; ++k)
    for (Eigen::Index i = 0; i < l; ++i) phi.col(k * l + i) = spec.group[i] * spec.generators[k];
  return make_ensemble<Real>(std::move(phi));
}

/// |phi~> = (Phi Phi^*)^dagger |phi>.
template <typename Real>
CVector<Real> gu_reciprocal_generator(const SymmetrySpec<Real> &spec, const ReciprocalSet<Real> &rs) {
  if (!spec.is_gu()) throw std::invalid_argument("gu_reciprocal_generator: spec has more than one generator");
  return rs.gram_pinv * spec.generators.front();
}

/// |phi~_k> = (Phi Phi^*)^dagger |phi_k>.
template <typename Real>
std::vector<CVector<Real>> cgu_reciprocal_generators(const SymmetrySpec<Real> &spec, const ReciprocalSet<Real> &rs) {
  std::vector<CVector<Real>> out;
  for (const auto &phi : spec.generators) out.emplace_back(rs.gram_pinv * phi);
  return out;
}

/// Reciprocal states U_i |phi~_k> (k-major), as a matrix.
template <typename Real>
CMatrix<Real> orbit_matrix(const UnitaryGroup<Real> &g, const std::vector<CVector<Real>> &vectors) {
  const auto l = static_cast<Eigen::Index>(g.size());
  CMatrix<Real> out(g.dimension(), l * static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k)
    for (Eigen::Index i = 0; i < l; ++i) out.col(static_cast<Eigen::Index>(k) * l + i) = g[i] * vectors[k];
  return out;
}

template <typename Real = double>
struct PhaseTable {
  RMatrix<Real> theta;     ///< l_G x l_Q, in (-pi, pi]
  RMatrix<Real> residual;  ///< ||U_i V_k - e^{j theta} V_k U_i||_F
  Real max_residual = 0;
  bool success = false;
  bool all_zero = false;   ///< theta = 0 everywhere: G and Q commute
};

template <typename Real>
PhaseTable<Real> check_commute_phase(const UnitaryGroup<Real> &g, const UnitaryGroup<Real> &q, Real tol = Real(1e-8)) {
  if (g.dimension() != q.dimension()) throw DimensionError("check_commute_phase: dimension mismatch");
  const auto lg = static_cast<Eigen::Index>(g.size()), lq = static_cast<Eigen::Index>(q.size());
  const Real d = Real(g.dimension());
  PhaseTable<Real> t;
  t.theta.resize(lg, lq);
  t.residual.resize(lg, lq);
  Real max_theta = 0;
  for (Eigen::Index i = 0; i < lg; ++i) {
    for (Eigen::Index k = 0; k < lq; ++k) {
      const CMatrix<Real> uv = g[i] * q[k];
      const CMatrix<Real> vu = q[k] * g[i];
      const Complex<Real> ip = (vu.adjoint() * uv).trace() / d;
      const Real th = std::abs(ip) > Real(0) ? std::arg(ip) : Real(0);
      t.theta(i, k) = th;
      t.residual(i, k) = (uv - std::polar(Real(1), th) * vu).norm();
      max_theta = std::max(max_theta, std::abs(th));
    }
  }
  t.max_residual = t.residual.size() ? t.residual.maxCoeff() : Real(0);
  t.success = t.max_residual <= tol;
  t.all_zero = t.success && max_theta <= tol;
  return t;
}

template <typename Real = double>
struct SymmetrySolution {
  StateEnsemble<Real> ensemble;
  ReciprocalSet<Real> reciprocals;
  std::vector<CVector<Real>> reciprocal_generators;
  Real reciprocal_residual = 0; ///< max_ik ||U_i |phi~_k> - |phi~_ik>||, against the SVD route
  Real p = 0;                   ///< sigma_m^2
  Measurement<Real> measurement;
  EpmVerdict verdict = EpmVerdict::SufficientTestInconclusive;
  std::string reason;
  RMatrix<Real> generator_moments;    ///< q x r_g, <phi_k|(Phi Phi^*)^{t/2-1}|phi_k>
  RVector<Real> moment_constants;     ///< a_t when the generator condition holds
  std::optional<PhaseTable<Real>> phase_table;
  std::optional<DualCertificate<Real>> certificate;
  std::optional<VerificationReport<Real>> verification;
  std::optional<SolveReport<Real>> fallback;  ///< IPM run when the verdict is inconclusive
};

namespace detail {

template <typename Real>
void fill_epm(SymmetrySolution<Real> &sol, const SymmetrySpec<Real> &spec) {
  sol.ensemble = expand(spec);
  sol.reciprocals = reciprocal_states(sol.ensemble);
  sol.reciprocal_generators = cgu_reciprocal_generators(spec, sol.reciprocals);
  const CMatrix<Real> orbit = orbit_matrix(spec.group, sol.reciprocal_generators);
  sol.reciprocal_residual = orbit.size() ? (orbit - sol.reciprocals.reciprocals).colwise().norm().maxCoeff() : Real(0);
  sol.p = sol.reciprocals.sigma_min() * sol.reciprocals.sigma_min();

  Measurement<Real> meas;
  meas.p = RVector<Real>::Constant(orbit.cols(), sol.p);
  meas.inconclusive = CMatrix<Real>::Identity(orbit.rows(), orbit.rows());
  for (Eigen::Index i = 0; i < orbit.cols(); ++i) {
    CMatrix<Real> op = sol.p * (orbit.col(i) * orbit.col(i).adjoint());
    meas.inconclusive -= op;
    meas.operators.push_back(std::move(op));
  }
  sol.measurement = std::move(meas);
}

template <typename Real>
void certify_epm(SymmetrySolution<Real> &sol, const EpmTolerances &tol) {
  const auto lp = epm_optimality_lp(sol.ensemble, sol.reciprocals, tol);
  RVector<Real> b;
  if (lp.verdict == EpmVerdict::Optimal) {
    b = lp.b;
  } else {
    const auto s = analyze_epm(sol.reciprocals, tol).s;
    b = RVector<Real>::Constant(s, Real(1) / Real(s));
  }
  sol.certificate = epm_certificate(sol.reciprocals, b);
  sol.verification = verify_certificate(sol.ensemble, sol.reciprocals, sol.measurement.p, *sol.certificate);
}

} // namespace detail

/// Closed-form solution of a GU set: the EPM is optimal with p = sigma_m^2.
template <typename Real>
SymmetrySolution<Real> solve_gu(const SymmetrySpec<Real> &spec, const EpmTolerances &tol = {}) {
  if (!spec.is_gu()) throw std::invalid_argument("solve_gu: spec has more than one generator");
  SymmetrySolution<Real> sol;
  detail::fill_epm(sol, spec);
  sol.verdict = EpmVerdict::Optimal;
  sol.reason = "geometrically uniform";
  detail::certify_epm(sol, tol);
  return sol;
}

/// <phi_k|(Phi Phi^*)^{t/2-1}|phi_k>, t = 1..q, one column per generator.
template <typename Real>
RMatrix<Real> generator_moments(const SymmetrySpec<Real> &spec, const ReciprocalSet<Real> &rs, int q) {
  RMatrix<Real> out(q, static_cast<Eigen::Index>(spec.generators.size()));
  for (int t = 1; t <= q; ++t) {
    const CMatrix<Real> power = frame_operator_power(rs, Real(t) / Real(2) - Real(1));
    for (std::size_t k = 0; k < spec.generators.size(); ++k)
      out(t - 1, static_cast<Eigen::Index>(k)) = std::real(spec.generators[k].dot(power * spec.generators[k]));
  }
  return out;
}

/// EPM analysis of a CGU set. Optimal when the generator moments agree, or
/// when the generators are GU under a group commuting with G up to phases;
/// otherwise inconclusive, with the interior-point solution attached.
template <typename Real>
SymmetrySolution<Real> solve_cgu(const SymmetrySpec<Real> &spec, const SolverOptions &opts = {},
                                 const EpmTolerances &tol = {}) {
  SymmetrySolution<Real> sol;
  detail::fill_epm(sol, spec);
  const auto an = analyze_epm(sol.reciprocals, tol);
  sol.generator_moments = generator_moments(spec, sol.reciprocals, an.q);

  Real worst = 0;
  RVector<Real> a(an.q);
  for (int t = 0; t < an.q; ++t) {
    a(t) = sol.generator_moments.row(t).mean();
    for (Eigen::Index k = 0; k < sol.generator_moments.cols(); ++k)
      worst = std::max(worst, std::abs(sol.generator_moments(t, k) - a(t)) / std::abs(a(t)));
  }
  if (spec.generator_group) sol.phase_table = check_commute_phase(spec.group, *spec.generator_group);

  if (worst <= Real(tol.moment)) {
    sol.verdict = EpmVerdict::Optimal;
    sol.moment_constants = a;
    sol.reason = "generator moment condition";
  } else if (sol.phase_table && sol.phase_table->success) {
    sol.verdict = EpmVerdict::Optimal;
    sol.reason = sol.phase_table->all_zero ? "GU generators, groups commute" : "GU generators, groups commute up to phase";
  } else {
    sol.verdict = EpmVerdict::SufficientTestInconclusive;
    sol.reason = "generator moments differ by " + std::to_string(static_cast<double>(worst));
  }
  if (sol.verdict == EpmVerdict::Optimal) {
    detail::certify_epm(sol, tol);
  } else {
    sol.fallback = solve(build_sdp(sol.ensemble, sol.reciprocals), opts);
  }
  return sol;
}

} // namespace udisc

#endif // UDISC_SYMMETRY_HPP
