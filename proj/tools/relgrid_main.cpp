#include <array>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relgrid/estimate.hpp"
#include "relgrid/grid.hpp"
#include "relgrid/opf.hpp"
#include "relgrid/reliability.hpp"
#include "relgrid/runio.hpp"
#include "relgrid/scenario.hpp"
#include "relgrid/scp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace relgrid;

namespace {

constexpr const char* kVersion = "relgrid 1.0.0";

int thread_cap() {
  if (const char* env = std::getenv("RELGRID_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
    }
  }
  return 1;
}

struct Manifest {
  json doc;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Manifest(const std::string& command) {
    doc["command"] = command;
    doc["tool"] = kVersion;
    doc["threads"] = thread_cap();
    doc["inputs"] = json::object();
    doc["options"] = json::object();
  }
  void input(const std::string& path) {
    doc["inputs"][path] = file_digest(path);
  }
  void finish(const std::string& outdir, const std::string& status) {
    doc["status"] = status;
    doc["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    fs::create_directories(outdir);
    write_text_file((fs::path(outdir) / "run_manifest.json").string(),
                    doc.dump(2) + "\n");
  }
};

void write_failure_prob_csvs(const std::string& outdir, const DispatchSolution& sol,
                             const Network& net, const Scenario& sc,
                             const FailureModel& model) {
  const int T = sol.horizon;
  std::vector<std::string> header{"component"};
  for (int t = 0; t < T; ++t) header.push_back("t" + std::to_string(t));
  std::vector<std::vector<std::string>> bus_rows, line_rows;
  for (int i = 0; i < net.bus_count(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (int t = 0; t < T; ++t) {
      const EensPoint pt = eens_point(sol, net, sc, t);
      const double x = i == 0 ? pt.substation_abs : pt.bus[i].injection_abs;
      row.push_back(format_number(
          interval_unreliability_bus(model, i, x, sc.ambient_temp[t])));
    }
    bus_rows.push_back(std::move(row));
  }
  for (int i = 1; i < net.bus_count(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (int t = 0; t < T; ++t)
      row.push_back(format_number(interval_unreliability_line(
          model, i, sol.l[t][i], sc.ambient_temp[t])));
    line_rows.push_back(std::move(row));
  }
  write_csv((fs::path(outdir) / "bus_failure_prob.csv").string(), header, bus_rows);
  write_csv((fs::path(outdir) / "line_failure_prob.csv").string(), header, line_rows);
}

void dump_covariates(const std::string& outdir, const DispatchSolution& sol,
                     const Network& net, const Scenario& sc) {
  const int T = sol.horizon;
  std::vector<std::string> bh{"t"}, lh{"t"};
  for (int i = 0; i < net.bus_count(); ++i) bh.push_back("b" + std::to_string(i));
  for (int i = 1; i < net.bus_count(); ++i) lh.push_back("l" + std::to_string(i));
  std::vector<std::vector<std::string>> brows, lrows;
  for (int t = 0; t < T; ++t) {
    const EensPoint pt = eens_point(sol, net, sc, t);
    std::vector<std::string> br{std::to_string(t)}, lr{std::to_string(t)};
    br.push_back(format_number(pt.substation_abs));
    for (int i = 1; i < net.bus_count(); ++i)
      br.push_back(format_number(pt.bus[i].injection_abs));
    for (int i = 1; i < net.bus_count(); ++i)
      lr.push_back(format_number(pt.line_current_sq[i - 1]));
    brows.push_back(std::move(br));
    lrows.push_back(std::move(lr));
  }
  write_csv((fs::path(outdir) / "bus_covariates.csv").string(), bh, brows);
  write_csv((fs::path(outdir) / "line_covariates.csv").string(), lh, lrows);
}

ShedWeights scaled_weights(const ShedWeights& w, double scale) {
  ShedWeights out = w;
  out.substation *= scale;
  out.consumption *= scale;
  out.dg *= scale;
  out.bess_charge *= scale;
  out.bess_discharge *= scale;
  out.dr *= scale;
  return out;
}

int cmd_validate(const std::string& case_file, const std::string& scenario_file,
                 bool json_out) {
  Network net = load_network_json(case_file);
  json report;
  report["buses"] = net.bus_count();
  report["lines"] = net.line_count();
  if (!scenario_file.empty()) {
    Scenario sc = load_scenario_json(scenario_file, net);
    report["horizon"] = sc.horizon();
  }
  report["valid"] = true;
  if (json_out)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << "valid: " << net.bus_count() << " buses, " << net.line_count()
              << " lines\n";
  return 0;
}

int cmd_run_cm(const std::string& case_file, const std::string& scenario_file,
               const std::string& coeffs_file, const std::string& outdir,
               bool covariates, bool json_out) {
  Manifest man("run-cm");
  man.input(case_file);
  man.input(scenario_file);
  if (!coeffs_file.empty()) man.input(coeffs_file);
  Network net = load_network_json(case_file);
  Scenario sc = load_scenario_json(scenario_file, net);
  OpfProgram prog = build_cm(net, sc);
  SolveResult res = solve_misocp(prog.program);
  if (res.status != SolveStatus::Optimal)
    throw NumericalFailure("cost-minimization solve failed");
  DispatchSolution sol = extract_solution(prog.vars, res.x, net);
  const double obj = operational_cost(sol, sc);
  fs::create_directories(outdir);
  write_text_file((fs::path(outdir) / "solution.json").string(),
                  solution_to_json(sol, net));
  solution_to_csv(outdir, sol, net);
  if (covariates) dump_covariates(outdir, sol, net, sc);
  auto violations = feasibility_report(sol, net, sc, 1e-6);
  man.doc["objective"] = obj;
  man.doc["violations"] = violations.size();
  man.doc["solver_iterations"] = res.iterations;
  if (!coeffs_file.empty()) {
    FailureModel model = load_failure_model_csv(coeffs_file);
    model.require_coverage(net);
    man.doc["eens_at_optimum"] = eens_total(sol, net, sc, model);
    write_failure_prob_csvs(outdir, sol, net, sc, model);
  }
  man.finish(outdir, "optimal");
  if (json_out)
    std::cout << man.doc.dump(2) << "\n";
  else
    std::cout << "objective " << format_number(obj) << " (" << violations.size()
              << " residuals above 1e-6)\n";
  return 0;
}

int cmd_run_crm(const std::string& case_file, const std::string& scenario_file,
                const std::string& coeffs_file, const std::string& outdir,
                const ScpOptions& opts, double weight_scale, bool json_out) {
  Manifest man("run-crm");
  man.input(case_file);
  man.input(scenario_file);
  man.input(coeffs_file);
  man.doc["options"] = {{"eps1", opts.eps1},
                        {"eps2", opts.eps2},
                        {"eps3", opts.eps3},
                        {"kmax", opts.k_max},
                        {"refine_binaries", opts.refine_binaries},
                        {"weight_scale", weight_scale}};
  Network net = load_network_json(case_file);
  Scenario sc = load_scenario_json(scenario_file, net);
  sc.weights = scaled_weights(sc.weights, weight_scale);
  FailureModel model = load_failure_model_csv(coeffs_file);
  model.require_coverage(net);
  fs::create_directories(outdir);
  DispatchSolution sol;
  ScpTrace trace;
  try {
    std::tie(sol, trace) = solve_crm(net, sc, model, opts);
  } catch (...) {
    man.finish(outdir, "failed");
    throw;
  }
  write_trace_csv((fs::path(outdir) / "trace.csv").string(), trace);
  write_text_file((fs::path(outdir) / "solution.json").string(),
                  solution_to_json(sol, net));
  solution_to_csv(outdir, sol, net);
  write_failure_prob_csvs(outdir, sol, net, sc, model);
  const auto& last = trace.iterations.back();
  man.doc["objective_crm"] = last.obj_crm;
  man.doc["objective_cm_component"] = last.obj_cm;
  man.doc["objective_cm_start"] = trace.iterations.front().obj_cm;
  man.doc["eens_at_cm"] =
      trace.iterations.front().obj_crm - trace.iterations.front().obj_cm;
  man.doc["eens_at_crm"] = last.obj_crm - last.obj_cm;
  man.doc["iterations"] = last.k;
  man.doc["criterion"] = trace.criterion;
  man.doc["termination"] = trace.termination;
  man.finish(outdir, trace.hit_iteration_limit ? "iteration_limit" : "converged");
  if (json_out)
    std::cout << man.doc.dump(2) << "\n";
  else
    std::cout << "crm objective " << format_number(last.obj_crm) << " after "
              << last.k << " iterations (" << trace.termination << ")\n";
  return trace.hit_iteration_limit ? 3 : 0;
}

int cmd_estimate(const std::string& bus_cov, const std::string& line_cov,
                 const std::string& temp_csv, const std::string& outdir,
                 uint64_t seed, std::int64_t draws, std::int64_t hmc_iters,
                 std::int64_t burn_in, int leapfrog_steps, bool json_out) {
  Manifest man("estimate");
  man.input(bus_cov);
  man.input(line_cov);
  man.input(temp_csv);
  man.doc["options"] = {{"seed", seed},
                        {"draws", draws},
                        {"hmc_iters", hmc_iters},
                        {"burn_in", burn_in},
                        {"leapfrog_steps", leapfrog_steps}};
  CsvTable bus_table = read_csv(bus_cov);
  CsvTable line_table = read_csv(line_cov);
  CsvTable temp_table = read_csv(temp_csv);
  std::vector<double> temps;
  for (size_t r = 0; r < temp_table.rows.size(); ++r)
    temps.push_back(parse_double(temp_table.rows[r].back(),
                                 temp_csv + " row " + std::to_string(r + 1)));

  FailureModel model;
  auto estimate_component = [&](const CsvTable& table, int col, ComponentKind kind,
                                int id) {
    std::vector<double> cov;
    for (size_t r = 0; r < table.rows.size(); ++r)
      cov.push_back(parse_double(table.rows[r][col], "covariate row"));
    if (cov.size() != temps.size())
      throw DimensionMismatch("temperature series does not match covariate rows");
    LabeledDataset data = label_failures(cov, temps, kind, id, seed);
    const double target = kind == ComponentKind::Bus ? tsfr_bus() : tsfr_line();
    std::vector<double> w = bootstrap_weights(data, target);
    WeightedDataset expanded = expand_bootstrap(data, w, draws, seed + id);
    MleResult mle = fit_mle(expanded);
    HmcConfig cfg;
    cfg.total_iters = hmc_iters;
    cfg.burn_in = burn_in;
    cfg.leapfrog_steps = leapfrog_steps;
    cfg.seed = seed + 1000 + id;
    PosteriorSummary post = hmc_posterior(expanded, mle.beta, cfg);
    LogisticCoefficients c{post.lambda_hat, post.mean[1], post.mean[2]};
    if (kind == ComponentKind::Bus)
      model.bus[id] = c;
    else
      model.line[id] = c;
    man.doc["acceptance"][std::string(kind == ComponentKind::Bus ? "b" : "l") +
                          std::to_string(id)] = post.mean_acceptance;
  };
  for (size_t c = 1; c < bus_table.header.size(); ++c) {
    const int id = parse_int(bus_table.header[c].substr(1), "bus covariate header");
    estimate_component(bus_table, static_cast<int>(c), ComponentKind::Bus, id);
  }
  for (size_t c = 1; c < line_table.header.size(); ++c) {
    const int id = parse_int(line_table.header[c].substr(1), "line covariate header");
    estimate_component(line_table, static_cast<int>(c), ComponentKind::Line, id);
  }
  fs::create_directories(outdir);
  save_failure_model_csv((fs::path(outdir) / "coeffs.csv").string(), model);
  man.finish(outdir, "done");
  if (json_out) std::cout << man.doc.dump(2) << "\n";
  return 0;
}

int cmd_probe(const std::string& which, bool json_out) {
  json report;
  bool pass = true;
  if (which == "hessian") {
    const std::array<double, 6> nu{8043.2197, 2e4, 5.0833e-12,
                                   0.3039,    1.1032e-11, 0.9501};
    const double neg = hessian_probe(nu, 0.1, 1.0, {0.1, 0.4});
    const double pos = hessian_probe(nu, 0.1, 1.0, {0.4, 0.1});
    report["quadratic_form_neg_direction"] = neg;
    report["quadratic_form_pos_direction"] = pos;
    pass = neg < 0 && pos > 0;
  } else if (which == "hazard-gap") {
    report["rows"] = json::array();
    for (double g = 0.01; g <= 0.1 + 1e-12; g += 0.01) {
      const double gap = hazard_gap(g);
      report["rows"].push_back({{"G", g}, {"gap", gap}, {"bound", g * g}});
      pass = pass && gap <= g * g;
    }
  } else if (which == "claim2") {
    // Linearizing in (|injection|, dispatch) space must agree with
    // linearizing the composed absolute-value form wherever injection ≠ 0.
    FailureModel model;
    model.bus[0] = {1156113700.0, 1.8307053, 0.24685119};
    model.bus[1] = {268660350.0, 0.30390543, 0.30673215};
    model.line[1] = {460174750.0, 0.9500556, 0.24567656};
    std::vector<BusParams> buses(2);
    buses[0].id = 0;
    buses[0].is_substation = true;
    buses[1].id = 1;
    Network net = build_network(buses, {LineParams{1, 0, 0.01, 0.01, 10.0}});
    ShedWeights w{1e5, 1e5, 2e4, 2e4, 2e4, 2e4};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.05, 0.5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      EensPoint pt;
      pt.bus.resize(2);
      pt.line_current_sq = {unif(rng)};
      pt.substation_abs = unif(rng);
      auto& e = pt.bus[1];
      e.consumption = unif(rng);
      e.dg = unif(rng) + e.consumption + 0.05;  // keep the injection nonzero
      e.injection_abs = std::abs(-e.consumption + e.dg);
      const double at = 15.0 + 10.0 * unif(rng);
      const EensGradient g = eens_gradient(pt, w, model, net, at);
      const double f0 = eens_cost(pt, w, model, net, at);
      // Evaluate both Taylor models at a perturbed dispatch that keeps the
      // sign of the net injection.
      const double dp = 0.01 * unif(rng);
      const double inj0 = -e.consumption + e.dg;
      const double inj1 = inj0 + dp;
      // Path 1: expansion over the composed |injection| form, chain rule.
      const double sign = inj0 >= 0 ? 1.0 : -1.0;
      const double path1 = f0 + (g.d_dg[1] + sign * g.d_injection[1]) * dp;
      // Path 2: expansion over (dispatch, auxiliary) with the auxiliary
      // substituted by its tight value at the perturbed point.
      const double path2 =
          f0 + g.d_dg[1] * dp + g.d_injection[1] * (std::abs(inj1) - std::abs(inj0));
      worst = std::max(worst, std::abs(path1 - path2) / std::max(1.0, std::abs(path1)));
    }
    report["max_relative_deviation"] = worst;
    pass = worst <= 1e-9;
  } else {
    throw InputError("unknown probe '" + which + "'");
  }
  report["pass"] = pass;
  if (json_out)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << "probe " << which << ": " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kVersion};
  app.require_subcommand(1);
  bool json_out = false;
  app.add_flag("--json", json_out, "machine-readable JSON output");

  std::string case_file, scenario_file, coeffs_file, outdir;
  uint64_t seed = 0;
  ScpOptions scp;
  double weight_scale = 1.0;
  bool covariates = false;

  auto* validate = app.add_subcommand("validate", "check case and scenario files");
  validate->add_option("--case", case_file)->required();
  validate->add_option("--scenario", scenario_file);

  auto* run_cm = app.add_subcommand("run-cm", "solve the cost-minimization model");
  run_cm->add_option("--case", case_file)->required();
  run_cm->add_option("--scenario", scenario_file)->required();
  run_cm->add_option("--coeffs", coeffs_file);
  run_cm->add_option("--out", outdir)->required();
  run_cm->add_flag("--dump-covariates", covariates);

  auto* run_crm =
      app.add_subcommand("run-crm", "solve the cost-and-reliability model");
  run_crm->add_option("--case", case_file)->required();
  run_crm->add_option("--scenario", scenario_file)->required();
  run_crm->add_option("--coeffs", coeffs_file)->required();
  run_crm->add_option("--out", outdir)->required();
  run_crm->add_option("--seed", seed);
  run_crm->add_option("--eps1", scp.eps1);
  run_crm->add_option("--eps2", scp.eps2);
  run_crm->add_option("--eps3", scp.eps3);
  run_crm->add_option("--kmax", scp.k_max);
  run_crm->add_flag("--refine-binaries", scp.refine_binaries);
  run_crm->add_option("--eens-weights", weight_scale,
                      "scale factor applied to all shed weights");

  std::string bus_cov, line_cov, temp_csv;
  std::int64_t draws = 1000000, hmc_iters = 100000, burn_in = 20000;
  int leapfrog_steps = 20;
  auto* estimate =
      app.add_subcommand("estimate", "fit failure-model coefficients");
  estimate->add_option("--bus-covariates", bus_cov)->required();
  estimate->add_option("--line-covariates", line_cov)->required();
  estimate->add_option("--temperature", temp_csv)->required();
  estimate->add_option("--out", outdir)->required();
  estimate->add_option("--seed", seed);
  estimate->add_option("--draws", draws);
  estimate->add_option("--hmc-iters", hmc_iters);
  estimate->add_option("--burn-in", burn_in);
  estimate->add_option("--leapfrog", leapfrog_steps);

  std::string which;
  auto* probe = app.add_subcommand("probe", "run a built-in numerical check");
  probe->add_option("which", which, "hessian | hazard-gap | claim2")->required();

  CLI11_PARSE(app, argc, argv);

  auto emit_error = [&json_out](const char* kind, const std::exception& e) {
    if (json_out) {
      json err{{"error", kind}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
    } else {
      std::cerr << "error (" << kind << "): " << e.what() << "\n";
    }
  };
  try {
    if (*validate) return cmd_validate(case_file, scenario_file, json_out);
    if (*run_cm)
      return cmd_run_cm(case_file, scenario_file, coeffs_file, outdir, covariates,
                        json_out);
    if (*run_crm)
      return cmd_run_crm(case_file, scenario_file, coeffs_file, outdir, scp,
                         weight_scale, json_out);
    if (*estimate)
      return cmd_estimate(bus_cov, line_cov, temp_csv, outdir, seed, draws,
                          hmc_iters, burn_in, leapfrog_steps, json_out);
    if (*probe) return cmd_probe(which, json_out);
  } catch (const InputError& e) {
    emit_error("input", e);
    return 2;
  } catch (const SolverError& e) {
    emit_error("solver", e);
    return 1;
  } catch (const EstimationError& e) {
    emit_error("estimation", e);
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal", e);
    return 1;
  }
  return 0;
}
