#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "support/oracles.hpp"
#include "udisc/epm.hpp"

using namespace udisc;
using fixture::CMat;
using fixture::RVec;

namespace {

/// Min-norm b >= 0 with M b = eta, by enumerating supports (s small).
std::optional<RVec> min_norm_by_supports(const RMatrix<double> &mat, const RVec &eta) {
  const auto s = mat.cols();
  std::optional<RVec> best;
  for (unsigned mask = 1; mask < (1u << s); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < s; ++k)
      if (mask & (1u << k)) idx.push_back(k);
    RMatrix<double> ms(mat.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) ms.col(j) = mat.col(idx[j]);
    const RVec bs = ms.completeOrthogonalDecomposition().solve(eta);
    if ((ms * bs - eta).cwiseAbs().maxCoeff() > 1e-9 || bs.minCoeff() < -1e-12) continue;
    RVec b = RVec::Zero(s);
    for (std::size_t j = 0; j < idx.size(); ++j) b(idx[j]) = std::max(0.0, bs(j));
    if (!best || b.norm() < best->norm()) best = b;
  }
  return best;
}

} // namespace

TEST_CASE("compute_epm: common probability sigma_m^2") {
  const auto spec = fixture::sign_group_spec();
  const auto e = expand(spec);
  const auto rs = reciprocal_states(e);
  const auto meas = compute_epm(rs);
  CHECK((meas.p.array() - 2.0 / 9).abs().maxCoeff() < 1e-10);

  const auto rs3 = reciprocal_states(fixture::three_state_ensemble());
  CHECK(std::abs(compute_epm(rs3).p(0) - 0.07) < 5e-3);

  const auto eo = fixture::orthonormal(3);
  const auto mo = compute_epm(reciprocal_states(eo));
  CHECK((mo.p - RVec::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK((mo.operators[i] - eo.state(i) * eo.state(i).adjoint()).norm() < 1e-14);

  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto er = make_ensemble<double>(oracle::random_states(rng, 5, 4));
    const auto rr = reciprocal_states(er);
    const auto m = compute_epm(rr);
    CMat total = CMat::Zero(5, 5);
    for (const auto &op : m.operators) total += op;
    CHECK(std::abs(detail::lambda_max<double>(total) - 1) < 1e-10);
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double d = std::real(er.state(i).dot(m.operators[i] * er.state(i)));
      CHECK(std::abs(d - rr.sigma_min() * rr.sigma_min()) < 1e-10);
    }
  }
}

TEST_CASE("analysis invariants") {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index m = 2 + t % 4;
    const CMat phi = t % 2 ? oracle::states_with_multiplicity(rng, m + 1, m, 1 + t % (m - 1))
                           : oracle::random_states(rng, m + 1, m);
    const auto rs = reciprocal_states(make_ensemble<double>(phi));
    const auto a = analyze_epm(rs);
    const double sm = rs.singular_values(m - 1);
    CHECK(std::abs(a.p - sm * sm) < 1e-12);
    int total = 0;
    for (int k : a.multiplicities) total += k;
    CHECK(total == m);
    CHECK(a.distinct_values.back() == doctest::Approx(sm));
    CHECK(a.distinct_values.front() == doctest::Approx(rs.singular_values(0)));
    CHECK(a.q == static_cast<int>(a.distinct_values.size()));
    CHECK(a.last_rows.rows() == m);
    CHECK(a.last_rows.cols() == a.s);
    for (Eigen::Index i = 0; i < m; ++i) CHECK(a.last_rows.row(i).sum() <= 1 + 1e-12);
    for (Eigen::Index k = 0; k < a.s; ++k) CHECK(a.last_rows.col(k).sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("singular values closer than the grouping tolerance share a value") {
  RVec sigma(3);
  sigma << 1.0, 0.5, 0.5 * (1 + 1e-9);
  std::mt19937_64 rng(33);
  const CMat u = oracle::random_unitary(rng, 3);
  const CMat v = oracle::random_unitary(rng, 3);
  ReciprocalSet<double> rs;
  rs.u = u;
  rs.v = v;
  rs.reciprocals = CMat::Zero(3, 3);
  rs.singular_values = sigma;
  std::sort(rs.singular_values.data(), rs.singular_values.data() + 3, std::greater<double>());
  const auto a = analyze_epm(rs);
  CHECK(a.s == 2);
  CHECK(a.q == 2);
  CHECK_FALSE(a.borderline);
  rs.singular_values << 1.0, 0.5 + 3e-6, 0.5;
  const auto b = analyze_epm(rs);
  CHECK(b.s == 1);
  CHECK(b.borderline);
}

TEST_CASE("exact test for multiplicity one") {
  const auto e = fixture::three_state_ensemble();
  const auto rs = reciprocal_states(e);
  const auto a = analyze_epm(rs);
  REQUIRE(a.s == 1);
  SUBCASE("priors equal to the squared last row of V^*") {
    const RVec eta = priors_for_epm(rs, RVec::Ones(1));
    RVec printed(3);
    printed << 0.6, 0.2, 0.2;
    CHECK((eta - printed).cwiseAbs().maxCoeff() < 1e-2);
    const auto res = epm_optimality_s1(with_priors(e, eta), rs);
    CHECK(res.verdict == EpmVerdict::Optimal);
    CHECK(res.residual < 1e-12);
    CHECK((res.comparison - eta).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("equal priors") {
    const auto res = epm_optimality_s1(e, rs);
    CHECK(res.verdict == EpmVerdict::NotOptimal);
    CHECK(res.residual > 0.1);
  }
  SUBCASE("random ensembles with matching priors") {
    std::mt19937_64 rng(34);
    for (int t = 0; t < 20; ++t) {
      const auto er = make_ensemble<double>(oracle::random_states(rng, 5, 4));
      const auto rr = reciprocal_states(er);
      const auto ee = with_priors(er, priors_for_epm(rr, RVec::Ones(1)));
      CHECK(epm_optimality_s1(ee, reciprocal_states(ee)).verdict == EpmVerdict::Optimal);
    }
  }
  SUBCASE("multiplicity above one is refused") {
    std::mt19937_64 rng(35);
    const auto em = make_ensemble<double>(oracle::states_with_multiplicity(rng, 4, 3, 2));
    CHECK_THROWS_WITH_AS(epm_optimality_s1(em, reciprocal_states(em)), doctest::Contains("epm_optimality_lp"),
                         std::invalid_argument);
  }
}

TEST_CASE("LP test") {
  SUBCASE("sign-group example is optimal") {
    const auto e = expand(fixture::sign_group_spec());
    const auto res = epm_optimality_lp(e, reciprocal_states(e));
    CHECK(res.verdict == EpmVerdict::Optimal);
    REQUIRE(res.b.size() == 1);
    CHECK(res.b(0) == doctest::Approx(1.0));
  }
  SUBCASE("s = 1 agrees with the exact test") {
    std::mt19937_64 rng(36);
    for (int t = 0; t < 20; ++t) {
      const auto er = make_ensemble<double>(oracle::random_states(rng, 4, 3), oracle::random_simplex(rng, 3));
      const auto rr = reciprocal_states(er);
      const auto ee = t % 2 ? with_priors(er, priors_for_epm(rr, RVec::Ones(1))) : er;
      const auto r2 = reciprocal_states(ee);
      const auto exact = epm_optimality_s1(ee, r2);
      const auto lp = epm_optimality_lp(ee, r2);
      CHECK(exact.verdict == lp.verdict);
      // the phase-one LP finds the same answer on its own
      CHECK((lp.phase_one_objective <= 1e-8) == (exact.verdict == EpmVerdict::Optimal));
    }
  }
  SUBCASE("multiplicity above one: witness, feasibility and min-norm tie-break") {
    std::mt19937_64 rng(37);
    int optimal = 0, inconclusive = 0;
    for (int t = 0; t < 40; ++t) {
      const Eigen::Index m = 3 + t % 3, s = 2 + t % 2;
      const auto e0 = make_ensemble<double>(oracle::states_with_multiplicity(rng, m + 1, m, s));
      const auto rs = reciprocal_states(e0);
      const auto a = analyze_epm(rs);
      REQUIRE(a.s == s);
      RVec eta;
      if (t % 2 == 0) {
        const RVec b = oracle::random_simplex(rng, s, 0.0);
        eta = priors_for_epm(rs, b);
      } else {
        eta = oracle::random_simplex(rng, m);
      }
      const auto e = with_priors(e0, eta);
      const auto res = epm_optimality_lp(e, rs);
      const auto expected = min_norm_by_supports(a.last_rows, eta);
      if (expected) {
        REQUIRE(res.verdict == EpmVerdict::Optimal);
        ++optimal;
        CHECK(res.b.minCoeff() >= 0);
        CHECK((a.last_rows * res.b - eta).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(res.b.sum() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK((res.b - *expected).cwiseAbs().maxCoeff() < 1e-7);
        const auto v = verify_certificate(e, rs, compute_epm(rs).p, epm_certificate(rs, res.b));
        CHECK(v.passed);
      } else {
        CHECK(res.verdict == EpmVerdict::SufficientTestInconclusive);
        CHECK(res.phase_one_objective > 1e-8);
        ++inconclusive;
      }
    }
    CHECK(optimal >= 20);
    CHECK(inconclusive >= 5);
  }
}

TEST_CASE("min-norm selection among many feasible b") {
  // M with two identical columns: every split of the weight is feasible,
  // the minimum-norm one is the even split.
  RMatrix<double> mat(2, 2);
  mat << 0.5, 0.5, 0.5, 0.5;
  RVec eta(2);
  eta << 0.5, 0.5;
  RVec start(2);
  start << 0.9, 0.1;
  const RVec b = detail::min_norm_feasible<double>(mat, eta, start);
  CHECK(b(0) == doctest::Approx(0.5));
  CHECK(b(1) == doctest::Approx(0.5));
}

TEST_CASE("priors_for_epm") {
  std::mt19937_64 rng(38);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index m = 4;
    const auto e0 = make_ensemble<double>(t % 2 ? oracle::states_with_multiplicity(rng, 5, m, 2) : oracle::random_states(rng, 5, m));
    const auto rs = reciprocal_states(e0);
    const auto a = analyze_epm(rs);
    const RVec b = oracle::random_simplex(rng, a.s, 0.0);
    const RVec eta = priors_for_epm(rs, b);
    CHECK(eta.minCoeff() >= 0);
    CHECK(std::abs(eta.sum() - 1) < 1e-10);
    const auto e = with_priors(e0, eta);
    const auto v = verify_certificate(e, rs, compute_epm(rs).p, epm_certificate(rs, b));
    CHECK(v.passed);
    // the EPM is the optimum: the solver agrees
    const auto sr = solve(e);
    CHECK(std::abs(-sr.primal_value - a.p) < 1e-6);
  }
  const auto rs = reciprocal_states(fixture::three_state_ensemble());
  const RVec e1 = priors_for_epm(rs, RVec::Unit(1, 0));
  CHECK((e1 - analyze_epm(rs).last_rows.col(0)).norm() < 1e-15);
  CHECK_THROWS_AS(priors_for_epm(rs, RVec::Ones(2) / 2), std::invalid_argument);
  RVec neg(1);
  neg << -1;
  CHECK_THROWS_AS(priors_for_epm(rs, neg), std::invalid_argument);
}

TEST_CASE("moment test") {
  SUBCASE("sign-group example") {
    const auto e = expand(fixture::sign_group_spec());
    const auto rs = reciprocal_states(e);
    const auto res = epm_moment_test(e, rs);
    CHECK(res.verdict == EpmVerdict::Optimal);
    const auto a = analyze_epm(rs);
    CHECK(res.moment_constants.size() == a.q);
    // t = 2 row is <phi_i|phi_i> = 1, summed over i with weights eta
    CHECK(res.moment_constants(1) == doctest::Approx(e.size() * 1.0));
  }
  SUBCASE("t = 2 row is all ones") {
    std::mt19937_64 rng(39);
    const auto e = make_ensemble<double>(oracle::random_states(rng, 6, 4));
    const auto rs = reciprocal_states(e);
    const auto mom = moment_matrix(e, rs, 2);
    CHECK((mom.row(1).array() - 1).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("random GU sets with uniform priors") {
    std::mt19937_64 rng(40);
    for (int t = 0; t < 15; ++t) {
      const auto g = oracle::random_gu(rng, t);
      const auto e = expand(make_symmetry_spec<double>(g.group, {g.generator}));
      const auto rs = reciprocal_states(e);
      const auto res = epm_moment_test(e, rs);
      CHECK(res.verdict == EpmVerdict::Optimal);
      const auto rep = analyze_epm_optimality(e, rs);
      REQUIRE(rep.verification);
      CHECK(rep.verification->passed);
    }
  }
  SUBCASE("random non-symmetric sets are inconclusive and not EPM-optimal") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 10; ++t) {
      const auto e = make_ensemble<double>(oracle::random_states(rng, 4, 3));
      const auto rs = reciprocal_states(e);
      CHECK(epm_moment_test(e, rs).verdict == EpmVerdict::SufficientTestInconclusive);
      CHECK(-solve(e).primal_value > rs.sigma_min() * rs.sigma_min() + 1e-6);
    }
  }
}

TEST_CASE("EPM certificate for the sign-group example") {
  const auto e = expand(fixture::sign_group_spec());
  const auto rs = reciprocal_states(e);
  const auto cert = epm_certificate(rs, RVec::Ones(1));
  CMat expected = CMat::Zero(4, 4);
  expected(2, 2) = 2.0 / 9;
  CHECK((cert.x - expected).cwiseAbs().maxCoeff() < 1e-12);
  const auto v = verify_certificate(e, rs, compute_epm(rs).p, cert);
  CHECK(v.passed);
  CHECK((v.tr_qx.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("whenever a test says optimal, the certificate verifies and the solver agrees") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 20; ++t) {
    const auto e0 = make_ensemble<double>(oracle::random_states(rng, 4, 3));
    const auto rs = reciprocal_states(e0);
    const auto e = with_priors(e0, priors_for_epm(rs, RVec::Ones(1)));
    const auto rep = analyze_epm_optimality(e, rs);
    REQUIRE(rep.verdict == EpmVerdict::Optimal);
    REQUIRE(rep.verification);
    CHECK(rep.verification->passed);
    CHECK(std::abs(-solve(e).primal_value - e.priors().sum() * rep.analysis.p) < 1e-6);
  }
}
