// roundvol: simulate rounded diffusions, estimate integrated volatility,
// and run Monte Carlo checks of the estimators.
//
// Exit codes: 0 success, 2 validation failure, 3 experiment aborted.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roundvol/roundvol.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAborted = 3;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw roundvol::ValidationError("not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw roundvol::ValidationError("empty list");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw roundvol::ValidationError("cannot write " + path);
  out << text;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw roundvol::ValidationError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw roundvol::ValidationError("invalid JSON in " + path + ": " + e.what());
  }
}

struct SimulateArgs {
  std::string model = "constant";
  std::string params = "1";
  std::optional<double> x0;
  std::string drift;
  int n = 1024;
  int substeps = roundvol::kDefaultSubsteps;
  std::optional<double> alpha;
  std::uint64_t seed = 1;
  std::string out;
  bool fine = false;
  bool euler = false;
};

int run_simulate(const SimulateArgs& a) {
  roundvol::ModelSpec spec;
  spec.name = a.model;
  spec.params = parse_list(a.params);
  spec.x0 = a.x0.value_or(a.model == "black_scholes" ? 1.0 : 0.0);
  spec.drift_mode = roundvol::drift_mode_from_string(
      a.drift.empty() ? (a.model == "black_scholes" ? "assumption_D" : "zero") : a.drift);
  const auto model = roundvol::make_model(spec);
  const auto path = roundvol::simulate_path(model, a.n, a.substeps, a.seed, 0, a.euler);
  std::ostringstream os;
  if (a.alpha) {
    const auto obs = roundvol::observe_rounded(path, *a.alpha);
    roundvol::write_observations_csv(os, obs, a.seed, path.scheme);
  } else {
    roundvol::write_path_csv(os, path, a.fine);
  }
  write_text(a.out, os.str());
  if (path.exited) {
    std::cerr << "path exited the model domain\n";
    return kExitAborted;
  }
  return 0;
}

struct EstimateArgs {
  std::string in;
  double alpha = 0.0;
  std::string weight = "absolute";
  std::string estimator = "hat";
  std::string plan;
  double rho = 0.5;
  std::string out;
};

int run_estimate(const EstimateArgs& a) {
  std::ifstream in(a.in);
  if (!in) throw roundvol::ValidationError("cannot read " + a.in);
  const auto prices = roundvol::read_price_column(in);
  const auto obs = roundvol::observations_from_prices(prices, a.alpha);
  const auto weight = roundvol::make_weight(a.weight, a.weight == "relative"
                                                          ? roundvol::Interval{0.0, roundvol::kInf}
                                                          : roundvol::Interval{});
  const auto kind = roundvol::estimator_from_string(a.estimator);
  std::optional<roundvol::LevelPlan> plan;
  if (!a.plan.empty()) {
    const auto v = parse_list(a.plan);
    if (v.size() != 4) throw roundvol::ValidationError("--plan expects a,j1,j2,j0");
    plan = roundvol::make_level_plan(obs.n, obs.alpha, v[0], static_cast<int>(v[1]), static_cast<int>(v[2]),
                                     static_cast<int>(v[3]));
  }
  const auto result = roundvol::run_estimator(kind, obs, weight, plan, a.rho);
  auto j = roundvol::result_to_json(result);
  if (result.plan)
    j["plan_diagnostics"] =
        roundvol::diagnostics_to_json(roundvol::validate_level_plan(*result.plan, obs.n, obs.alpha));
  if (!roundvol::is_power_of_two(obs.n)) std::cerr << "warning: n = " << obs.n << " is not a power of two\n";
  write_text(a.out, j.dump(2) + "\n");
  return 0;
}

int run_mc(const std::string& config_path, const std::string& out, bool clt, bool timing) {
  const auto cfg = roundvol::config_from_json(read_json_file(config_path));
  const auto report = clt ? roundvol::run_clt_experiment(cfg) : roundvol::run_rate_experiment(cfg);
  write_text(out, roundvol::report_to_json(report, timing).dump(2) + "\n");
  if (report.wall_clock_seconds) std::cerr << "wall clock: " << *report.wall_clock_seconds << " s\n";
  return 0;
}

struct DeltaArgs {
  std::string beta = "1";
  std::string sigma = "1";
  int n_inner = 0;
  int replications = 2000;
  std::uint64_t seed = 1;
  std::string out;
};

int run_delta_beta(const DeltaArgs& a) {
  std::ostringstream os;
  os.precision(12);
  os << "beta,sigma,value,std_error,n_inner,value_2n,std_error_2n\n";
  for (double beta : parse_list(a.beta)) {
    for (double sigma : parse_list(a.sigma)) {
      const auto est = a.n_inner > 0 ? roundvol::delta_beta(beta, sigma, a.n_inner, a.replications, a.seed)
                                     : roundvol::delta_beta_converged(beta, sigma, a.replications, a.seed);
      os << beta << ',' << sigma << ',' << est.value << ',' << est.std_error << ',' << est.n_inner << ','
         << est.value_doubled << ',' << est.std_error_doubled << '\n';
    }
  }
  write_text(a.out, os.str());
  return 0;
}

struct GammaArgs {
  std::string p = "1";
  std::string beta = "1";
  std::string sigma = "1";
  std::string out;
};

int run_gamma_p(const GammaArgs& a) {
  std::ostringstream os;
  os.precision(15);
  os << "beta,sigma,value,std_error,p\n";
  for (double p : parse_list(a.p))
    for (double beta : parse_list(a.beta))
      for (double sigma : parse_list(a.sigma)) {
        const auto q = roundvol::gamma_p_with_error(sigma, beta, p);
        os << beta << ',' << sigma << ',' << q.value << ',' << q.error << ',' << p << '\n';
      }
  write_text(a.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated volatility from rounded high-frequency observations"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a path and optionally round it");
  simulate->add_option("--model", sim.model, "constant | black_scholes")->capture_default_str();
  simulate->add_option("--params", sim.params, "Comma-separated model parameters")->capture_default_str();
  simulate->add_option("--x0", sim.x0, "Initial value");
  simulate->add_option("--drift", sim.drift, "zero | assumption_D");
  simulate->add_option("--n", sim.n, "Number of observation intervals")->capture_default_str();
  simulate->add_option("--substeps", sim.substeps, "Fine steps per observation interval")->capture_default_str();
  simulate->add_option("--alpha", sim.alpha, "Rounding grid; omit for the raw path");
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output CSV (stdout if omitted)");
  simulate->add_flag("--fine", sim.fine, "Write the whole fine grid");
  simulate->add_flag("--euler", sim.euler, "Force the Euler scheme");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate integrated volatility from a price CSV");
  estimate->add_option("--in", est.in, "CSV with a value column on a uniform grid")->required();
  estimate->add_option("--alpha", est.alpha, "Tick size")->required();
  estimate->add_option("--weight", est.weight, "absolute | relative")->capture_default_str();
  estimate->add_option("--estimator", est.estimator, "tilde | hat | rv | rvlog")->capture_default_str();
  estimate->add_option("--plan", est.plan, "Level plan a,j1,j2,j0");
  estimate->add_option("--rho", est.rho, "Exponent for the default plan")->capture_default_str();
  estimate->add_option("--out", est.out, "Output JSON (stdout if omitted)");

  std::string rate_cfg, rate_out, clt_cfg, clt_out;
  bool rate_timing = false, clt_timing = false;
  auto* mc_rate = app.add_subcommand("mc-rate", "Convergence-rate experiment");
  mc_rate->add_option("--config", rate_cfg, "Experiment JSON")->required();
  mc_rate->add_option("--out", rate_out, "Report JSON (stdout if omitted)");
  mc_rate->add_flag("--timing", rate_timing, "Include wall-clock seconds in the report");
  auto* mc_clt = app.add_subcommand("mc-clt", "Limit-law experiment");
  mc_clt->add_option("--config", clt_cfg, "Experiment JSON")->required();
  mc_clt->add_option("--out", clt_out, "Report JSON (stdout if omitted)");
  mc_clt->add_flag("--timing", clt_timing, "Include wall-clock seconds in the report");

  DeltaArgs del;
  auto* delta = app.add_subcommand("delta-beta", "Monte Carlo table of Delta_beta");
  delta->add_option("--beta", del.beta, "Comma-separated beta values")->capture_default_str();
  delta->add_option("--sigma", del.sigma, "Comma-separated sigma values")->capture_default_str();
  delta->add_option("--n-inner", del.n_inner, "Fixed inner horizon (default: doubling until stable)");
  delta->add_option("--replications", del.replications, "Replications")->capture_default_str();
  delta->add_option("--seed", del.seed, "Random seed")->capture_default_str();
  delta->add_option("--out", del.out, "Output CSV (stdout if omitted)");

  GammaArgs gam;
  auto* gamma = app.add_subcommand("gamma-p", "Quadrature table of gamma_p(sigma, beta)");
  gamma->add_option("--p", gam.p, "Comma-separated exponents")->capture_default_str();
  gamma->add_option("--beta", gam.beta, "Comma-separated beta values")->capture_default_str();
  gamma->add_option("--sigma", gam.sigma, "Comma-separated sigma values")->capture_default_str();
  gamma->add_option("--out", gam.out, "Output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*estimate) return run_estimate(est);
    if (*mc_rate) return run_mc(rate_cfg, rate_out, false, rate_timing);
    if (*mc_clt) return run_mc(clt_cfg, clt_out, true, clt_timing);
    if (*delta) return run_delta_beta(del);
    if (*gamma) return run_gamma_p(gam);
  } catch (const roundvol::ExperimentAborted& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kExitAborted;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::range_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const roundvol::ExitedPathError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAborted;
  }
  return 0;
}
