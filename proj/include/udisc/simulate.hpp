#ifndef UDISC_SIMULATE_HPP
#define UDISC_SIMULATE_HPP

// Monte-Carlo sampling of an unambiguous measurement.
//
// Random numbers come from a counter-based SplitMix64 stream:
//   word(c) = mix64(seed + (c + 1) * 0x9E3779B97F4A7C15)
// where mix64 is the SplitMix64 finalizer. Trial t uses words 2t (state
// draw) and 2t+1 (outcome draw); a word maps to [0, 1) through its top 53
// bits. Results therefore do not depend on how trials are split across
// threads.

#include <cstdint>

#include "udisc/ensemble.hpp"

namespace udisc {

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t counter_word(std::uint64_t seed, std::uint64_t counter);
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

struct SimulationOptions {
  std::uint64_t trials = 1000000;
  std::uint64_t seed = 1;
  unsigned threads = 0; ///< 0: hardware concurrency
};

struct SimulationResult {
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  /// counts(i, k): state i prepared, outcome k; column m is "inconclusive".
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  RMatrix<double> outcome_probabilities; ///< same layout, rows sum to 1
  std::uint64_t misidentifications = 0;  ///< conclusive outcome k != i

  Eigen::Index size() const { return counts.rows(); }
  std::uint64_t prepared(Eigen::Index i) const;
  std::uint64_t successes() const;
  std::uint64_t inconclusive() const;
  double success_frequency() const;              ///< empirical P_D
  double state_success_frequency(Eigen::Index i) const;
};

/// Rejects measurements that fail check_measurement (ValidationError).
SimulationResult simulate(const StateEnsemble<double> &e, const Measurement<double> &meas,
                          const SimulationOptions &opts = {});

/// sqrt(p (1 - p) / n)
double binomial_standard_error(double p, std::uint64_t n);

} // namespace udisc

#endif // UDISC_SIMULATE_HPP
