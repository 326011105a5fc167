#include "udisc/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "udisc/io.hpp"

namespace udisc {

using nlohmann::json;

json to_json(const SolverOptions &o) {
  return {{"tol_gap", o.tol_gap}, {"tol_feas", o.tol_feas}, {"tol_slack", o.tol_slack}, {"max_iters", o.max_iters}};
}

json to_json(const VerificationTolerances &t) {
  return {{"operator_tol", t.operator_tol}, {"scalar_tol", t.scalar_tol}};
}

json to_json(const EpmTolerances &t) {
  return {{"grouping", t.grouping}, {"match", t.match}, {"moment", t.moment}};
}

json to_json(const Measurement<double> &meas) {
  json ops = json::array();
  for (const auto &op : meas.operators) ops.push_back(cmatrix_to_json(op));
  return {{"p", rvector_to_json(meas.p)}, {"operators", ops}, {"inconclusive", cmatrix_to_json(meas.inconclusive)}};
}

json to_json(const DualCertificate<double> &cert) {
  return {{"X", cmatrix_to_json(cert.x)}, {"z", rvector_to_json(cert.z)}};
}

json to_json(const VerificationReport<double> &v) {
  return {{"passed", v.passed},
          {"primal_feasible", v.primal_feasible()},
          {"dual_feasible", v.dual_feasible()},
          {"slackness", v.slackness()},
          {"residuals",
           {{"p_negativity", v.p_negativity},
            {"operator_excess", v.operator_excess},
            {"x_negativity", v.x_negativity},
            {"z_negativity", v.z_negativity},
            {"equality", v.equality_residual},
            {"operator_slackness", v.operator_slackness},
            {"scalar_slackness", v.scalar_slackness},
            {"duality_gap", v.duality_gap}}},
          {"tr_qx", rvector_to_json(v.tr_qx)},
          {"tolerances", to_json(v.tolerances)}};
}

json to_json(const SolveReport<double> &rep) {
  json hist = json::array();
  for (const auto &h : rep.history)
    hist.push_back({{"primal", h.primal_value}, {"dual", h.dual_value}, {"gap", h.gap},
                    {"primal_residual", h.primal_residual}, {"dual_residual", h.dual_residual}});
  return {{"status", to_string(rep.status)},
          {"iterations", rep.iterations},
          {"p", rvector_to_json(rep.p)},
          {"primal_value", rep.primal_value},
          {"dual_value", rep.dual_value},
          {"gap", rep.gap},
          {"certificate", to_json(rep.certificate)},
          {"history", hist}};
}

json to_json(const EpmAnalysis<double> &a) {
  json dv = json::array();
  for (std::size_t g = 0; g < a.distinct_values.size(); ++g)
    dv.push_back({{"value", a.distinct_values[g]}, {"multiplicity", a.multiplicities[g]}});
  return {{"p", a.p},       {"s", a.s},
          {"q", a.q},       {"distinct_singular_values", dv},
          {"last_rows", rmatrix_to_json(a.last_rows)},
          {"min_separation", a.min_separation},
          {"borderline", a.borderline}};
}

json to_json(const EpmOptimalityResult<double> &r) {
  json out = {{"verdict", to_string(r.verdict)}, {"residual", r.residual}};
  if (r.comparison.size()) out["comparison"] = rvector_to_json(r.comparison);
  if (r.b.size()) out["b"] = rvector_to_json(r.b);
  if (r.moment_constants.size()) out["a_t"] = rvector_to_json(r.moment_constants);
  out["phase_one_objective"] = r.phase_one_objective;
  return out;
}

json to_json(const EpmReport<double> &rep) {
  json out = {{"analysis", to_json(rep.analysis)},
              {"verdict", to_string(rep.verdict)},
              {"lp_test", to_json(rep.lp_test)},
              {"moment_test", to_json(rep.moment_test)}};
  if (rep.exact_test) out["exact_test"] = to_json(*rep.exact_test);
  if (rep.certificate) out["certificate"] = to_json(*rep.certificate);
  return out;
}

json to_json(const GroupCheck<double> &c) {
  return {{"passed", c.passed},     {"failure", c.failure},   {"unitarity", c.unitarity},
          {"identity", c.identity}, {"closure", c.closure},   {"inverses", c.inverses}};
}

json to_json(const PhaseTable<double> &t) {
  return {{"success", t.success}, {"all_zero", t.all_zero}, {"max_residual", t.max_residual},
          {"theta", rmatrix_to_json(t.theta)}};
}

json to_json(const SymmetrySolution<double> &sol) {
  json gens = json::array();
  for (const auto &v : sol.reciprocal_generators) gens.push_back(cvector_to_json(v));
  json out = {{"verdict", to_string(sol.verdict)},
              {"reason", sol.reason},
              {"p", sol.p},
              {"reciprocal_generators", gens},
              {"reciprocal_residual", sol.reciprocal_residual}};
  if (sol.generator_moments.size()) out["generator_moments"] = rmatrix_to_json(sol.generator_moments);
  if (sol.moment_constants.size()) out["a_t"] = rvector_to_json(sol.moment_constants);
  if (sol.phase_table) out["phase_table"] = to_json(*sol.phase_table);
  if (sol.certificate) out["certificate"] = to_json(*sol.certificate);
  if (sol.fallback) out["fallback"] = to_json(*sol.fallback);
  return out;
}

json to_json(const SimulationResult &sim) {
  json counts = json::array();
  for (Eigen::Index i = 0; i < sim.counts.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < sim.counts.cols(); ++k) row.push_back(sim.counts(i, k));
    counts.push_back(row);
  }
  json per_state = json::array();
  for (Eigen::Index i = 0; i < sim.size(); ++i) per_state.push_back(sim.state_success_frequency(i));
  return {{"trials", sim.trials},
          {"seed", sim.seed},
          {"counts", counts},
          {"successes", sim.successes()},
          {"inconclusive", sim.inconclusive()},
          {"misidentifications", sim.misidentifications},
          {"success_frequency", sim.success_frequency()},
          {"state_success_frequency", per_state}};
}

void attach_measurement(RunReport &rep, const StateEnsemble<double> &e, const Measurement<double> &meas) {
  rep.r = e.dimension();
  rep.m = e.size();
  rep.priors = e.priors();
  rep.p = meas.p;
  rep.detection_probability = detection_probability(e, meas).total;
}

json to_json(const RunReport &rep) {
  json out = {{"pipeline", rep.pipeline}, {"tolerances", rep.tolerances}, {"result", rep.result},
              {"exit_code", rep.exit_code}};
  if (rep.m > 0) out["input"] = {{"r", rep.r}, {"m", rep.m}, {"priors", rvector_to_json(rep.priors)}};
  if (rep.p) {
    out["p"] = rvector_to_json(*rep.p);
    out["detection_probability"] = rep.detection_probability;
    out["inconclusive_probability"] = 1.0 - rep.detection_probability;
  }
  if (rep.verification) out["verification"] = *rep.verification;
  if (rep.simulation) out["simulation"] = *rep.simulation;
  if (!rep.message.empty()) out["message"] = rep.message;
  return out;
}

std::string format_vector(const RVector<double> &v, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision) << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ')';
  return os.str();
}

std::string to_text(const RunReport &rep) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("pipeline", rep.pipeline);
  if (rep.m > 0) {
    rows.emplace_back("r, m", std::to_string(rep.r) + ", " + std::to_string(rep.m));
    rows.emplace_back("priors", format_vector(rep.priors));
  }
  if (rep.p) {
    rows.emplace_back("p", format_vector(*rep.p));
    std::ostringstream os;
    os << std::setprecision(10) << rep.detection_probability;
    rows.emplace_back("P_D", os.str());
  }
  rows.insert(rows.end(), rep.summary.begin(), rep.summary.end());
  if (!rep.message.empty()) rows.emplace_back("message", rep.message);
  std::size_t width = 0;
  for (const auto &[k, v] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto &[k, v] : rows) os << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
  return os.str();
}

} // namespace udisc
