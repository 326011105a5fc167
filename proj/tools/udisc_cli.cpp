// udisc: command-line front end.
//
// Exit codes: 0 success, 1 I/O or usage error, 2 validation error,
// 3 solver did not converge, 4 certificate or measurement check failed.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "udisc/epm.hpp"
#include "udisc/io.hpp"
#include "udisc/report.hpp"
#include "udisc/simulate.hpp"
#include "udisc/solver.hpp"
#include "udisc/symmetry.hpp"

using namespace udisc;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kNoConvergence = 3, kCertificate = 4 };

struct Flags {
  bool json = false;
  double tol_gap = 1e-8;
  double tol_feas = 1e-9;
  int max_iters = 100;
  std::uint64_t seed = 1;
  std::uint64_t trials = 1000000;
  unsigned threads = 0;
};

SolverOptions solver_options(const Flags &f) {
  SolverOptions o;
  o.tol_gap = f.tol_gap;
  o.tol_feas = f.tol_feas;
  o.max_iters = f.max_iters;
  return o;
}

json tolerances(const Flags &f) {
  const EnsembleTolerances et;
  return {{"solver", to_json(solver_options(f))},
          {"verification", to_json(VerificationTolerances{})},
          {"epm", to_json(EpmTolerances{})},
          {"ensemble", {{"normalize", et.normalize}, {"prior_sum", et.prior_sum}, {"independence", et.independence}}},
          {"group", {{"unitarity", GroupTolerances{}.unitarity}, {"membership", GroupTolerances{}.membership}}}};
}

std::string num(double x, int precision = 8) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::string verification_line(const VerificationReport<double> &v) {
  std::ostringstream os;
  os.precision(3);
  os << (v.passed ? "pass" : "FAIL") << " (gap " << v.duality_gap << ", ||X T|| " << v.operator_slackness
     << ", max|z p| " << v.scalar_slackness << ", equality " << v.equality_residual << ")";
  return os.str();
}

void add_verification(RunReport &rep, const VerificationReport<double> &v) {
  rep.verification = to_json(v);
  rep.summary.emplace_back("certificate", verification_line(v));
  rep.summary.emplace_back("Tr(Q_i X)", format_vector(v.tr_qx));
  if (!v.passed && rep.exit_code == kOk) {
    rep.exit_code = kCertificate;
    rep.message = "certificate verification failed";
  }
}

RunReport run_solve(const std::string &path, const Flags &f) {
  const auto e = load_ensemble_file(path);
  const auto rs = reciprocal_states(e);
  const auto sr = solve(build_sdp(e, rs), solver_options(f));
  RunReport rep;
  rep.pipeline = "sdp";
  rep.tolerances = tolerances(f);
  attach_measurement(rep, e, make_measurement(rs, sr.p));
  rep.result = to_json(sr);
  rep.summary.emplace_back("status", to_string(sr.status));
  rep.summary.emplace_back("iterations", std::to_string(sr.iterations));
  rep.summary.emplace_back("gap", num(sr.gap, 3));
  if (sr.status != SolveStatus::Optimal) {
    rep.exit_code = kNoConvergence;
    rep.message = std::string("solver stopped with status ") + to_string(sr.status);
  }
  add_verification(rep, verify_certificate(e, rs, sr.p, sr.certificate));
  return rep;
}

void summarize_epm(RunReport &rep, const EpmReport<double> &er, const StateEnsemble<double> &e) {
  const auto &a = er.analysis;
  rep.summary.emplace_back("sigma_m^2", num(a.p, 10));
  rep.summary.emplace_back("s, q", std::to_string(a.s) + ", " + std::to_string(a.q));
  if (a.borderline) rep.summary.emplace_back("warning", "singular-value cluster near the grouping tolerance");
  rep.summary.emplace_back("verdict", to_string(er.verdict));
  if (er.exact_test) {
    rep.summary.emplace_back("exact test", to_string(er.exact_test->verdict));
    rep.summary.emplace_back("|v_i(m)|^2", format_vector(er.exact_test->comparison));
    rep.summary.emplace_back("eta", format_vector(e.priors()));
  }
  std::string lp = to_string(er.lp_test.verdict);
  if (er.lp_test.b.size()) lp += " b = " + format_vector(er.lp_test.b);
  rep.summary.emplace_back("LP test", lp);
  std::string mom = to_string(er.moment_test.verdict);
  if (er.moment_test.moment_constants.size()) mom += " a_t = " + format_vector(er.moment_test.moment_constants);
  rep.summary.emplace_back("moment test", mom);
  if (er.verification) add_verification(rep, *er.verification);
}

RunReport run_epm(const std::string &path, const Flags &f, bool gu, const std::vector<double> &make_priors,
                  const std::string &write_priors) {
  StateEnsemble<double> e;
  std::optional<SymmetrySpec<double>> spec;
  if (gu) {
    spec = load_symmetry_spec_file(path);
    e = expand(*spec);
  } else {
    e = load_ensemble_file(path);
  }
  auto rs = reciprocal_states(e);
  if (!make_priors.empty()) {
    const RVector<double> b = Eigen::Map<const RVector<double>>(make_priors.data(), static_cast<Eigen::Index>(make_priors.size()));
    try {
      e = with_priors(e, priors_for_epm(rs, b));
    } catch (const std::invalid_argument &ex) {
      throw ValidationError(ex.what());
    }
    rs = reciprocal_states(e);
    if (!write_priors.empty()) write_json_file(write_priors, ensemble_to_json(e));
  }
  const auto er = analyze_epm_optimality(e, rs);
  RunReport rep;
  rep.pipeline = "epm";
  rep.tolerances = tolerances(f);
  attach_measurement(rep, e, er.measurement);
  rep.result = to_json(er);
  if (spec && spec->is_gu()) {
    const auto v = gu_reciprocal_generator(*spec, rs);
    rep.result["reciprocal_generator"] = cvector_to_json(v);
  }
  summarize_epm(rep, er, e);
  return rep;
}

void summarize_symmetry(RunReport &rep, const SymmetrySolution<double> &sol) {
  rep.summary.emplace_back("verdict", std::string(to_string(sol.verdict)) + " (" + sol.reason + ")");
  rep.summary.emplace_back("sigma_m^2", num(sol.p, 10));
  for (std::size_t k = 0; k < sol.reciprocal_generators.size(); ++k) {
    std::ostringstream os;
    os.precision(6);
    os << '(';
    for (Eigen::Index i = 0; i < sol.reciprocal_generators[k].size(); ++i) os << (i ? ", " : "") << sol.reciprocal_generators[k](i);
    os << ')';
    rep.summary.emplace_back("phi~_" + std::to_string(k + 1), os.str());
  }
  rep.summary.emplace_back("orbit residual", num(sol.reciprocal_residual, 3));
  if (sol.phase_table)
    rep.summary.emplace_back("phase table", sol.phase_table->success
                                                ? (sol.phase_table->all_zero ? "commute" : "commute up to phase")
                                                : "no (residual " + num(sol.phase_table->max_residual, 3) + ")");
}

RunReport run_gu(const std::string &path, const Flags &f) {
  const auto spec = load_symmetry_spec_file(path);
  if (!spec.is_gu()) throw ValidationError("gu: spec has " + std::to_string(spec.num_generators()) + " generators; use cgu");
  const auto sol = solve_gu(spec);
  RunReport rep;
  rep.pipeline = "gu";
  rep.tolerances = tolerances(f);
  attach_measurement(rep, sol.ensemble, sol.measurement);
  rep.result = to_json(sol);
  summarize_symmetry(rep, sol);
  if (sol.verification) add_verification(rep, *sol.verification);
  return rep;
}

RunReport run_cgu(const std::string &path, const Flags &f) {
  const auto spec = load_symmetry_spec_file(path);
  const auto sol = solve_cgu(spec, solver_options(f));
  RunReport rep;
  rep.pipeline = "cgu";
  rep.tolerances = tolerances(f);
  rep.result = to_json(sol);
  summarize_symmetry(rep, sol);
  if (sol.verdict == EpmVerdict::Optimal) {
    attach_measurement(rep, sol.ensemble, sol.measurement);
    if (sol.verification) add_verification(rep, *sol.verification);
  } else {
    const auto &fb = *sol.fallback;
    attach_measurement(rep, sol.ensemble, make_measurement(sol.reciprocals, fb.p));
    rep.summary.emplace_back("fallback", std::string("interior point, ") + to_string(fb.status));
    if (fb.status != SolveStatus::Optimal) {
      rep.exit_code = kNoConvergence;
      rep.message = std::string("fallback solver stopped with status ") + to_string(fb.status);
    }
    add_verification(rep, verify_certificate(sol.ensemble, sol.reciprocals, fb.p, fb.certificate));
  }
  return rep;
}

RunReport run_group_verify(const std::string &path, const Flags &f) {
  const json doc = read_json_file(path);
  RunReport rep;
  rep.pipeline = "group";
  rep.tolerances = tolerances(f);
  auto check_one = [&](const char *label, const json &j) {
    const auto g = group_from_json(j);
    const auto c = verify_group(g);
    rep.result[label] = to_json(c);
    rep.summary.emplace_back(label, std::string(c.passed ? "pass" : "FAIL (" + c.failure + ")") + ", order " +
                                        std::to_string(g.size()) + ", closure " + num(c.closure, 3) +
                                        ", unitarity " + num(c.unitarity, 3));
    if (!c.passed) {
      rep.exit_code = kValidation;
      rep.message = std::string(label) + " is not a unitary group";
    }
  };
  if (doc.is_array()) {
    check_one("group", doc);
  } else if (doc.is_object() && doc.contains("group")) {
    check_one("group", doc.at("group"));
    if (doc.contains("generator_group") && !doc.at("generator_group").is_null())
      check_one("generator_group", doc.at("generator_group"));
  } else {
    throw FormatError("expected a list of matrices or an object with \"group\"");
  }
  return rep;
}

RunReport run_simulate(const std::string &path, const Flags &f, bool gu, const std::string &pipeline) {
  StateEnsemble<double> e;
  Measurement<double> meas;
  RunReport rep;
  rep.pipeline = "simulate";
  rep.tolerances = tolerances(f);
  if (gu) {
    const auto spec = load_symmetry_spec_file(path);
    if (!spec.is_gu()) throw ValidationError("simulate --gu: spec has more than one generator");
    auto sol = solve_gu(spec);
    e = sol.ensemble;
    meas = sol.measurement;
    rep.summary.emplace_back("measurement", "gu");
  } else {
    e = load_ensemble_file(path);
    const auto rs = reciprocal_states(e);
    if (pipeline == "epm") {
      meas = compute_epm(rs);
    } else {
      const auto sr = solve(build_sdp(e, rs), solver_options(f));
      if (sr.status != SolveStatus::Optimal) {
        rep.exit_code = kNoConvergence;
        rep.message = std::string("solver stopped with status ") + to_string(sr.status);
      }
      meas = make_measurement(rs, sr.p);
    }
    rep.summary.emplace_back("measurement", pipeline);
  }
  attach_measurement(rep, e, meas);
  SimulationOptions so;
  so.trials = f.trials;
  so.seed = f.seed;
  so.threads = f.threads;
  const auto sim = simulate(e, meas, so);
  rep.simulation = to_json(sim);
  const double pd = rep.detection_probability;
  const double se = binomial_standard_error(pd, sim.trials);
  rep.summary.emplace_back("trials, seed", std::to_string(sim.trials) + ", " + std::to_string(sim.seed));
  rep.summary.emplace_back("empirical P_D", num(sim.success_frequency(), 8) + " (" +
                                                num(se > 0 ? (sim.success_frequency() - pd) / se : 0.0, 3) + " SE)");
  RVector<double> per(sim.size());
  for (Eigen::Index i = 0; i < sim.size(); ++i) per(i) = sim.state_success_frequency(i);
  rep.summary.emplace_back("per-state success", format_vector(per));
  rep.summary.emplace_back("misidentifications", std::to_string(sim.misidentifications));
  return rep;
}

void add_common(CLI::App *sub, Flags &f) {
  sub->add_flag("--json", f.json, "Print the full report as JSON");
  sub->add_option("--tol-gap", f.tol_gap, "Relative duality-gap tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--tol-feas", f.tol_feas, "Feasibility residual tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", f.max_iters, "Interior-point iteration limit")->check(CLI::Range(1, 10000));
  sub->add_option("--seed", f.seed, "Simulation seed");
  sub->add_option("--trials", f.trials, "Simulation trials")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Optimal unambiguous discrimination of linearly independent pure states"};
  app.require_subcommand(1);
  Flags f;
  std::string file;

  auto *solve_cmd = app.add_subcommand("solve", "Solve the discrimination SDP and verify the certificate");
  solve_cmd->add_option("ensemble", file, "Ensemble JSON file")->required();
  add_common(solve_cmd, f);

  bool epm_gu = false;
  std::vector<double> make_priors;
  std::string write_priors;
  auto *epm_cmd = app.add_subcommand("epm", "Equal-probability measurement and its optimality tests");
  epm_cmd->add_option("file", file, "Ensemble JSON file (symmetry spec with --gu)")->required();
  epm_cmd->add_flag("--gu", epm_gu, "Read a symmetry spec and expand it");
  epm_cmd->add_option("--make-priors", make_priors, "Replace the priors by those making the EPM optimal for b (comma separated)")
      ->delimiter(',');
  epm_cmd->add_option("--write-priors", write_priors, "Write the re-weighted ensemble to this file");
  add_common(epm_cmd, f);

  auto symmetry_cmd = [&](const char *name, const char *help) {
    auto *cmd = app.add_subcommand(name, help);
    cmd->add_option("spec", file, "Symmetry spec JSON file");
    auto *inner = cmd->add_subcommand("solve", help);
    inner->add_option("spec", file, "Symmetry spec JSON file")->required();
    add_common(cmd, f);
    add_common(inner, f);
    return cmd;
  };
  auto *gu_cmd = symmetry_cmd("gu", "Closed-form solution of a geometrically uniform state set");
  auto *cgu_cmd = symmetry_cmd("cgu", "EPM analysis of a compound geometrically uniform state set");

  auto *gv_cmd = app.add_subcommand("group-verify", "Check that a list of matrices is a finite unitary group");
  gv_cmd->add_option("file", file, "Group or symmetry spec JSON file")->required();
  add_common(gv_cmd, f);
  auto *group_cmd = app.add_subcommand("group", "Group utilities");
  group_cmd->require_subcommand(1);
  auto *gv2_cmd = group_cmd->add_subcommand("verify", "Check that a list of matrices is a finite unitary group");
  gv2_cmd->add_option("file", file, "Group or symmetry spec JSON file")->required();
  add_common(gv2_cmd, f);

  bool sim_gu = false;
  std::string sim_pipeline = "sdp";
  auto *sim_cmd = app.add_subcommand("simulate", "Monte-Carlo check of a measurement");
  sim_cmd->add_option("file", file, "Ensemble JSON file (symmetry spec with --gu)")->required();
  sim_cmd->add_flag("--gu", sim_gu, "Read a symmetry spec and simulate its closed-form measurement");
  sim_cmd->add_option("--pipeline", sim_pipeline, "Measurement to simulate")->check(CLI::IsMember({"sdp", "epm"}));
  sim_cmd->add_option("--threads", f.threads, "Worker threads (0: all cores)");
  add_common(sim_cmd, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  RunReport rep;
  try {
    if (*solve_cmd) {
      rep = run_solve(file, f);
    } else if (*epm_cmd) {
      rep = run_epm(file, f, epm_gu, make_priors, write_priors);
    } else if (*gu_cmd || *cgu_cmd) {
      if (file.empty()) {
        std::cerr << "error: missing spec file\n";
        return kUsage;
      }
      rep = *gu_cmd ? run_gu(file, f) : run_cgu(file, f);
    } else if (*gv_cmd || *group_cmd) {
      rep = run_group_verify(file, f);
    } else if (*sim_cmd) {
      rep = run_simulate(file, f, sim_gu, sim_pipeline);
    }
  } catch (const IoError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError &e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const DimensionError &e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  }

  if (f.json)
    std::cout << to_json(rep).dump(2) << '\n';
  else
    std::cout << to_text(rep);
  if (rep.exit_code != kOk && !rep.message.empty()) std::cerr << "error: " << rep.message << '\n';
  return rep.exit_code;
}
