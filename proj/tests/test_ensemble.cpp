#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "support/oracles.hpp"
#include "udisc/ensemble.hpp"
#include "udisc/io.hpp"

using namespace udisc;
using fixture::CMat;
using fixture::RVec;

TEST_CASE("three real states load as a 3x3 ensemble with uniform priors") {
  const auto e = fixture::three_state_ensemble();
  CHECK(e.dimension() == 3);
  CHECK(e.size() == 3);
  CHECK(e.priors().isApprox(RVec::Constant(3, 1.0 / 3)));
}

TEST_CASE("identity columns form a valid orthonormal ensemble") {
  RVec eta(2);
  eta << 0.5, 0.5;
  const auto e = make_ensemble<double>(CMat::Identity(2, 2), eta);
  CHECK(e.size() == 2);
}

TEST_CASE("invalid ensembles are rejected") {
  CMat dup(3, 2);
  dup << 1, 1, 0, 0, 0, 0;
  SUBCASE("duplicated column") {
    try {
      make_ensemble<double>(dup);
      FAIL("expected rejection");
    } catch (const ValidationError &e) {
      CHECK(std::string(e.what()).find("linearly dependent") != std::string::npos);
    }
  }
  SUBCASE("more states than dimensions") {
    CHECK_THROWS_WITH_AS(make_ensemble<double>(CMat::Identity(2, 3)), doctest::Contains("linearly dependent"),
                         ValidationError);
  }
  SUBCASE("nearly parallel beyond the independence threshold") {
    CMat a(2, 2);
    a << 1, 1, 0, 1e-12;
    a.col(1).normalize();
    CHECK_THROWS_AS(make_ensemble<double>(a), ValidationError);
  }
  SUBCASE("non-unit column") {
    CMat a = CMat::Identity(2, 2);
    a(0, 0) = 1.01;
    CHECK_THROWS_WITH_AS(make_ensemble<double>(a), doctest::Contains("unit norm"), ValidationError);
  }
  SUBCASE("priors") {
    RVec bad(2);
    bad << 0.7, 0.4;
    CHECK_THROWS_AS(make_ensemble<double>(CMat::Identity(2, 2), bad), ValidationError);
    bad << 1.0, 0.0;
    CHECK_THROWS_AS(make_ensemble<double>(CMat::Identity(2, 2), bad), ValidationError);
    bad << 1.5, -0.5;
    CHECK_THROWS_AS(make_ensemble<double>(CMat::Identity(2, 2), bad), ValidationError);
    CHECK_THROWS_WITH_AS(make_ensemble<double>(CMat::Identity(2, 2), RVec::Constant(3, 1.0 / 3)),
                         doctest::Contains("dimension mismatch"), ValidationError);
  }
}

TEST_CASE("columns within 1e-6 of unit norm are renormalized") {
  CMat a = CMat::Identity(2, 2);
  a(0, 0) = 1 + 5e-7;
  const auto e = make_ensemble<double>(a);
  CHECK(e.state(0).norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("reciprocal states of the three-state example") {
  const auto rs = reciprocal_states(fixture::three_state_ensemble());
  CMat expected(3, 3);
  expected << 1.73, 0, -1.41, -1.73, 1.41, 1.41, 1.73, -1.41, 0;
  CHECK((rs.reciprocals - expected).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("orthonormal states are their own reciprocals") {
  std::mt19937_64 rng(11);
  const CMat w = oracle::random_unitary(rng, 4).leftCols(3);
  const auto rs = reciprocal_states(make_ensemble<double>(w));
  CHECK((rs.reciprocals - w).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("biorthogonality on random ensembles") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto e = make_ensemble<double>(oracle::random_states(rng, 6, 4));
    const auto rs = reciprocal_states(e);
    const CMat bi = rs.reciprocals.adjoint() * e.states();
    CHECK((bi - CMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("reciprocal formulas agree and the SVD reconstructs the states") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index m = 1 + t % 5, r = m + t % 3;
    const auto e = make_ensemble<double>(oracle::random_states(rng, r, m, t % 2 ? 1e3 : 0));
    const auto rs = reciprocal_states(e);
    const CMat via_gram = reciprocals_via_gram(e);
    const CMat via_frame = rs.gram_pinv * e.states();
    const double scale = rs.reciprocals.cwiseAbs().maxCoeff();
    CHECK((rs.reciprocals - via_gram).cwiseAbs().maxCoeff() < 1e-10 * scale);
    CHECK((rs.reciprocals - via_frame).cwiseAbs().maxCoeff() < 1e-10 * scale);
    CMat sigma = CMat::Zero(r, m);
    for (Eigen::Index k = 0; k < m; ++k) sigma(k, k) = rs.singular_values(k);
    const CMat rebuilt = rs.u * sigma * rs.v.adjoint();
    CHECK((rebuilt - e.states()).cwiseAbs().maxCoeff() < 1e-10 * rs.singular_values(0));
    CHECK((rs.u.adjoint() * rs.u - CMat::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gram operators") {
  const auto rs = reciprocal_states(fixture::three_state_ensemble());
  const auto q = gram_operators(rs);
  REQUIRE(q.size() == 3);
  CMat q1(3, 3);
  q1 << 1, -1, 1, -1, 1, -1, 1, -1, 1;
  q1 *= 3;
  CHECK((q[0] - q1).cwiseAbs().maxCoeff() < 5e-2);

  std::mt19937_64 rng(14);
  for (int t = 0; t < 10; ++t) {
    const auto rr = reciprocal_states(make_ensemble<double>(oracle::random_states(rng, 5, 3)));
    const auto qq = gram_operators(rr);
    CMat sum = CMat::Zero(5, 5);
    for (Eigen::Index i = 0; i < 3; ++i) {
      sum += qq[i];
      CHECK(std::abs(qq[i].trace().real() - rr.reciprocal(i).squaredNorm()) < 1e-12);
      CHECK(std::abs(qq[i].trace().imag()) < 1e-12);
    }
    CHECK((sum - rr.reciprocals * rr.reciprocals.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((weighted_gram_sum(rr, RVec::Ones(3)) - sum).cwiseAbs().maxCoeff() < 1e-10);
    // largest eigenvalue of sum Q_i is 1 / sigma_m^2
    const double s = rr.sigma_min();
    CHECK(std::abs(detail::lambda_max<double>(sum) - 1 / (s * s)) < 1e-8 * (1 / (s * s)));
  }

  const auto e = fixture::orthonormal(3);
  const auto qo = gram_operators(reciprocal_states(e));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK((qo[i] - e.state(i) * e.state(i).adjoint()).norm() < 1e-14);
}

TEST_CASE("detection probability") {
  const auto e = fixture::three_state_ensemble();
  const auto rs = reciprocal_states(e);
  RVec p(3);
  p << 0, 0.17, 0.17;
  CHECK(std::abs(detection_probability(e, make_measurement(rs, p)).total - 0.113) < 5e-3);

  const auto eo = fixture::orthonormal(3);
  const auto d1 = detection_probability(eo, make_measurement(reciprocal_states(eo), RVec::Ones(3)));
  CHECK(d1.total == doctest::Approx(1.0));
  CHECK(d1.inconclusive == doctest::Approx(0.0));
  CHECK(detection_probability(e, make_measurement(rs, RVec::Zero(3))).total == 0.0);

  CHECK_THROWS_AS(detection_probability(fixture::orthonormal(2), make_measurement(rs, RVec::Zero(3))), DimensionError);
  CHECK_THROWS_AS(make_measurement(rs, RVec::Zero(2)), DimensionError);
}

TEST_CASE("measurement invariants") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 20; ++t) {
    const auto e = make_ensemble<double>(oracle::random_states(rng, 5, 4), oracle::random_simplex(rng, 4));
    const auto rs = reciprocal_states(e);
    const double pmax = rs.sigma_min() * rs.sigma_min();
    RVec p = RVec::Constant(4, pmax);
    const auto meas = make_measurement(rs, p);
    const auto chk = check_measurement(e, meas);
    CHECK(chk.valid);
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double inc = std::real(e.state(i).dot(meas.inconclusive * e.state(i)));
      CHECK(std::abs(inc - (1 - p(i))) < 1e-8);
    }
    // too large p violates Pi_0 >= 0
    CHECK_FALSE(check_measurement(e, make_measurement(rs, RVec::Constant(4, 1.5 * pmax))).valid);
  }
}

TEST_CASE("with_priors revalidates") {
  const auto e = fixture::three_state_ensemble();
  RVec eta(3);
  eta << 0.6, 0.2, 0.2;
  CHECK(with_priors(e, eta).priors()(0) == 0.6);
  // states are kept bit for bit
  std::mt19937_64 rng(16);
  const auto er = make_ensemble<double>(oracle::random_states(rng, 5, 4));
  CHECK((with_priors(er, oracle::random_simplex(rng, 4)).states().array() == er.states().array()).all());
  eta << 0.6, 0.2, 0.3;
  CHECK_THROWS_AS(with_priors(e, eta), ValidationError);
}
