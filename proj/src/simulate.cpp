#include "udisc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace udisc {

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t counter_word(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64_mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(counter_word(seed, counter) >> 11) * 0x1.0p-53;
}

std::uint64_t SimulationResult::prepared(Eigen::Index i) const {
  std::uint64_t n = 0;
  for (Eigen::Index k = 0; k < counts.cols(); ++k) n += counts(i, k);
  return n;
}

std::uint64_t SimulationResult::successes() const {
  std::uint64_t n = 0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) n += counts(i, i);
  return n;
}

std::uint64_t SimulationResult::inconclusive() const {
  std::uint64_t n = 0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) n += counts(i, counts.cols() - 1);
  return n;
}

double SimulationResult::success_frequency() const {
  return trials ? static_cast<double>(successes()) / static_cast<double>(trials) : 0.0;
}

double SimulationResult::state_success_frequency(Eigen::Index i) const {
  const auto n = prepared(i);
  return n ? static_cast<double>(counts(i, i)) / static_cast<double>(n) : 0.0;
}

double binomial_standard_error(double p, std::uint64_t n) {
  return n ? std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)) : 0.0;
}

namespace {

// Smallest index whose cumulative weight exceeds u.
Eigen::Index pick(const std::vector<double> &cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<Eigen::Index>(static_cast<Eigen::Index>(it - cumulative.begin()),
                                static_cast<Eigen::Index>(cumulative.size()) - 1);
}

} // namespace

SimulationResult simulate(const StateEnsemble<double> &e, const Measurement<double> &meas,
                          const SimulationOptions &opts) {
  const auto check = check_measurement(e, meas);
  if (!check.valid) throw ValidationError("measurement failed verification; refusing to simulate");
  if (opts.trials < 1) throw ValidationError("trials must be at least 1");
  const Eigen::Index m = e.size();

  SimulationResult res;
  res.trials = opts.trials;
  res.seed = opts.seed;
  res.outcome_probabilities = RMatrix<double>::Zero(m, m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    // Born probabilities of every outcome; round-off negatives clipped.
    double conclusive = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double pk = std::max(0.0, std::real(e.state(i).dot(meas.operators[k] * e.state(i))));
      res.outcome_probabilities(i, k) = pk;
      conclusive += pk;
    }
    res.outcome_probabilities(i, m) = std::max(0.0, std::real(e.state(i).dot(meas.inconclusive * e.state(i))));
    res.outcome_probabilities.row(i) /= conclusive + res.outcome_probabilities(i, m);
  }

  std::vector<double> state_cdf(static_cast<std::size_t>(m));
  {
    double acc = 0;
    for (Eigen::Index i = 0; i < m; ++i) state_cdf[i] = acc += e.priors()(i);
    for (auto &c : state_cdf) c /= acc;
  }
  std::vector<std::vector<double>> outcome_cdf(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0;
    for (Eigen::Index k = 0; k <= m; ++k) outcome_cdf[i].push_back(acc += res.outcome_probabilities(i, k));
  }

  using Counts = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;
  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(1, opts.trials / 10000)));
  std::vector<Counts> shards(workers, Counts::Zero(m, m + 1));
  auto run = [&](unsigned w) {
    const std::uint64_t begin = opts.trials * w / workers, end = opts.trials * (w + 1) / workers;
    Counts &c = shards[w];
    for (std::uint64_t t = begin; t < end; ++t) {
      const auto i = pick(state_cdf, counter_uniform(opts.seed, 2 * t));
      const auto k = pick(outcome_cdf[i], counter_uniform(opts.seed, 2 * t + 1));
      ++c(i, k);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto &th : pool) th.join();

  res.counts = Counts::Zero(m, m + 1);
  for (const auto &c : shards) res.counts += c;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < m; ++k)
      if (k != i) res.misidentifications += res.counts(i, k);
  return res;
}

} // namespace udisc
