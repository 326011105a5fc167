#ifndef UDISC_REPORT_HPP
#define UDISC_REPORT_HPP

// Structured run reports: JSON for scripts, an aligned text table for people.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "udisc/epm.hpp"
#include "udisc/simulate.hpp"
#include "udisc/solver.hpp"
#include "udisc/symmetry.hpp"

namespace udisc {

nlohmann::json to_json(const SolverOptions &o);
nlohmann::json to_json(const VerificationTolerances &t);
nlohmann::json to_json(const EpmTolerances &t);
nlohmann::json to_json(const Measurement<double> &meas);
nlohmann::json to_json(const DualCertificate<double> &cert);
nlohmann::json to_json(const VerificationReport<double> &v);
nlohmann::json to_json(const SolveReport<double> &rep);
nlohmann::json to_json(const EpmAnalysis<double> &a);
nlohmann::json to_json(const EpmOptimalityResult<double> &r);
nlohmann::json to_json(const EpmReport<double> &rep);
nlohmann::json to_json(const GroupCheck<double> &c);
nlohmann::json to_json(const PhaseTable<double> &t);
nlohmann::json to_json(const SymmetrySolution<double> &sol);
nlohmann::json to_json(const SimulationResult &sim);

struct RunReport {
  std::string pipeline; ///< sdp | epm | gu | cgu | group | simulate
  Eigen::Index r = 0, m = 0;
  RVector<double> priors;
  std::optional<RVector<double>> p;
  double detection_probability = 0; ///< sum_i eta_i p_i
  nlohmann::json tolerances = nlohmann::json::object();
  nlohmann::json result = nlohmann::json::object();
  std::optional<nlohmann::json> verification;
  std::optional<nlohmann::json> simulation;
  /// Lines for the text rendering, in order.
  std::vector<std::pair<std::string, std::string>> summary;
  int exit_code = 0;
  std::string message;
};

/// Fills r, m, priors, p and P_D from an ensemble and a measurement.
void attach_measurement(RunReport &rep, const StateEnsemble<double> &e, const Measurement<double> &meas);

nlohmann::json to_json(const RunReport &rep);
std::string to_text(const RunReport &rep);

/// Compact vector formatting for the text report.
std::string format_vector(const RVector<double> &v, int precision = 6);

} // namespace udisc

#endif // UDISC_REPORT_HPP
