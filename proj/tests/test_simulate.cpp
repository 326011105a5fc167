#include <doctest.h>

#include "fixtures.hpp"
#include "udisc/simulate.hpp"
#include "udisc/symmetry.hpp"

using namespace udisc;
using fixture::RVec;

TEST_CASE("counter stream") {
  // first SplitMix64 output for seed 0
  CHECK(counter_word(0, 0) == 0xE220A8397B1DCDAFull);
  CHECK(counter_word(7, 3) == counter_word(7, 3));
  CHECK(counter_word(7, 3) != counter_word(8, 3));
  double lo = 1, hi = 0, mean = 0;
  for (std::uint64_t c = 0; c < 100000; ++c) {
    const double u = counter_uniform(42, c);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    mean += u;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("results do not depend on the thread count") {
  const auto e = fixture::three_state_ensemble();
  const auto meas = compute_epm(reciprocal_states(e));
  SimulationOptions o;
  o.trials = 200000;
  o.seed = 9;
  o.threads = 1;
  const auto a = simulate(e, meas, o);
  o.threads = 7;
  const auto b = simulate(e, meas, o);
  CHECK(a.counts == b.counts);
  o.seed = 10;
  CHECK_FALSE(simulate(e, meas, o).counts == a.counts);
}

TEST_CASE("counts and frequencies") {
  const auto e = fixture::three_state_ensemble();
  RVec p(3);
  p << 0, 1.0 / 6, 1.0 / 6;
  const auto meas = make_measurement(reciprocal_states(e), p);
  SimulationOptions o;
  o.trials = 300000;
  const auto sim = simulate(e, meas, o);
  CHECK(sim.trials == 300000);
  CHECK(sim.counts.rows() == 3);
  CHECK(sim.counts.cols() == 4);
  CHECK(sim.counts.sum() == 300000);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(sim.outcome_probabilities.row(i).sum() == doctest::Approx(1.0));
  CHECK(sim.misidentifications == 0);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index k = 0; k < 3; ++k)
      if (k != i) CHECK(sim.outcome_probabilities(i, k) < 1e-12);
  // p_1 = 0: the first state is never identified
  CHECK(sim.counts(0, 0) == 0);
  CHECK(sim.successes() + sim.inconclusive() == sim.trials);
  const double pd = 1.0 / 9;
  CHECK(std::abs(sim.success_frequency() - pd) < 4 * binomial_standard_error(pd, sim.trials));
}

TEST_CASE("orthonormal states are always identified") {
  const auto e = fixture::orthonormal(4);
  const auto meas = compute_epm(reciprocal_states(e));
  SimulationOptions o;
  o.trials = 50000;
  const auto sim = simulate(e, meas, o);
  CHECK(sim.inconclusive() == 0);
  CHECK(sim.misidentifications == 0);
  CHECK(sim.success_frequency() == 1.0);
}

TEST_CASE("sign-group measurement") {
  const auto sol = solve_gu(fixture::sign_group_spec());
  SimulationOptions o;
  o.trials = 200000;
  const auto sim = simulate(sol.ensemble, sol.measurement, o);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK(std::abs(sim.state_success_frequency(i) - 2.0 / 9) <
          4 * binomial_standard_error(2.0 / 9, sim.prepared(i)));
}

TEST_CASE("invalid measurements are refused") {
  const auto e = fixture::three_state_ensemble();
  const auto rs = reciprocal_states(e);
  CHECK_THROWS_AS(simulate(e, make_measurement(rs, RVec::Constant(3, 0.5))), ValidationError);
  CHECK(binomial_standard_error(0.5, 100) == doctest::Approx(0.05));
}
