#pragma once

// Monte Carlo experiments over families alpha_n = c_alpha n^-gamma:
// convergence rates of the estimators and the spread of their normalized
// errors. Every replication draws from its own stream (seed, n-index,
// replication, attempt) and results are reduced in index order, so reports do
// not depend on the number of worker threads.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roundvol/asymptotics.hpp"
#include "roundvol/error.hpp"
#include "roundvol/estimate.hpp"
#include "roundvol/model.hpp"
#include "roundvol/parallel.hpp"
#include "roundvol/rng.hpp"
#include "roundvol/simulate.hpp"
#include "roundvol/wavelet.hpp"

namespace roundvol {

// ---------------------------------------------------------------------------
// Small statistics helpers.

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// sup_x |F_n(x) - Phi((x - mean) / sd)|
inline double ks_distance_normal(std::vector<double> sample, double mean, double sd) {
  if (sample.empty()) throw ValidationError("KS distance of an empty sample");
  if (!(sd > 0.0)) throw ValidationError("KS distance needs a positive standard deviation");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = detail::normal_cdf((sample[i] - mean) / sd);
    d = std::max({d, (static_cast<double>(i) + 1.0) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

// Ordinary least-squares slope of y on x.
inline double fit_log_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw ValidationError("slope fit needs at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("slope fit needs at least two distinct abscissae");
  return sxy / sxx;
}

struct BootstrapInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap interval for the median.
inline BootstrapInterval bootstrap_median_ci(const std::vector<double>& sample, int resamples,
                                             std::uint64_t seed, double level = 0.95) {
  if (sample.empty()) throw ValidationError("bootstrap of an empty sample");
  RandomStream rng(seed, stream_id({0xB007u}));
  std::vector<double> medians(static_cast<std::size_t>(resamples));
  std::vector<double> draw(sample.size());
  for (auto& med : medians) {
    for (auto& x : draw) x = sample[rng.next_u64() % sample.size()];
    med = median_of(draw);
  }
  std::sort(medians.begin(), medians.end());
  const double tail = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::clamp(q * (resamples - 1), 0.0, resamples - 1.0));
    return medians[idx];
  };
  return {pick(tail), pick(1.0 - tail)};
}

// ---------------------------------------------------------------------------

struct PlanOverride {
  double a = 0.5;
  int j1 = 0;
  int j2 = 0;
  std::optional<int> j0;
};

struct ExperimentConfig {
  ModelSpec model;
  std::string weight = "absolute";
  double gamma = 0.5;
  double c_alpha = 1.0;
  std::vector<int> n_list;
  int replications = 200;
  std::uint64_t seed = 1;
  std::vector<EstimatorKind> estimators{EstimatorKind::theta_tilde};
  std::optional<PlanOverride> plan;
  int substeps = kDefaultSubsteps;
  double max_exit_rate = 0.10;
  int delta_beta_replications = 2000;

  double alpha_for(int n) const { return c_alpha * std::pow(static_cast<double>(n), -gamma); }
  double rho() const { return std::min(gamma, 0.9); }
  RegimeSpec regime() const { return regime_for_family(gamma, c_alpha); }
};

struct ReportRow {
  int n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  EstimatorKind estimator = EstimatorKind::theta_tilde;
  int replications = 0;
  int exits = 0;
  double mean_error = 0.0;
  double median_abs_error = 0.0;
  double median_estimate = 0.0;
  double mean_theta = 0.0;
  double normalized_variance = 0.0;
  double ks_fitted = 0.0;
  std::optional<double> target_variance;
  std::optional<double> ks_limit;
  std::vector<double> normalized_errors;  // not serialized
};

struct ExperimentReport {
  std::string mode;
  ExperimentConfig config;
  RegimeSpec regime;
  std::vector<ReportRow> rows;
  std::map<std::string, double> slopes;
  std::vector<std::string> notes;
  std::optional<double> wall_clock_seconds;

  const ReportRow& row(int n, EstimatorKind kind) const {
    for (const auto& r : rows)
      if (r.n == n && r.estimator == kind) return r;
    throw ValidationError("no report row for n = " + std::to_string(n) + ", estimator " + to_string(kind));
  }
};

inline void validate_config(const ExperimentConfig& cfg, bool clt_mode) {
  if (cfg.n_list.empty()) throw ValidationError("n_list is empty");
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    if (!is_power_of_two(cfg.n_list[i]) || cfg.n_list[i] < 16)
      throw ValidationError("n_list entries must be powers of two >= 16");
    if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1]) throw ValidationError("n_list must be ascending");
  }
  if (cfg.replications < 1) throw ValidationError("replications must be positive");
  if (cfg.substeps < 1) throw ValidationError("substeps must be positive");
  if (!(cfg.gamma > 0.0)) throw ValidationError("gamma must be positive");
  if (!(cfg.c_alpha > 0.0)) throw ValidationError("c_alpha must be positive");
  if (cfg.estimators.empty()) throw ValidationError("no estimators requested");
  if (clt_mode) {
    if (cfg.replications < 200) throw ValidationError("CLT experiments need at least 200 replications");
    if (std::find(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::theta_hat_s) == cfg.estimators.end())
      throw ValidationError("CLT experiments need the theta_hat_S estimator");
  } else if (cfg.n_list.size() < 3) {
    throw ValidationError("rate experiments need at least three values of n");
  }
}

namespace detail {

struct ReplicationOutcome {
  double theta = 0.0;
  std::vector<double> estimates;
  double limit_sd = 0.0;
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
  int exits = 0;
};

inline PathSample simulate_until_inside(const VolatilityModel& model, const ExperimentConfig& cfg, int n,
                                        std::size_t n_index, std::size_t rep, int& exits) {
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto path = simulate_path(model, n, cfg.substeps, cfg.seed,
                              stream_id({n_index, rep, static_cast<std::uint64_t>(attempt)}));
    if (!path.exited) return path;
    ++exits;
  }
  throw ExperimentAborted("replication " + std::to_string(rep) + " at n = " + std::to_string(n) +
                          " exited the domain " + std::to_string(kMaxAttempts) + " times");
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, bool clt_mode, unsigned threads) {
  validate_config(cfg, clt_mode);
  const auto start = std::chrono::steady_clock::now();
  const VolatilityModel model = make_model(cfg.model);
  const WeightFunction weight = make_weight_for(cfg.weight, model);
  const RegimeSpec regime = cfg.regime();
  const bool constant_sigma = model.family() == VolatilityModel::Family::constant;

  ExperimentReport report;
  report.mode = clt_mode ? "clt" : "rate";
  report.config = cfg;
  report.regime = regime;
  if (clt_mode && !constant_sigma)
    report.notes.push_back("non-constant sigma: the limit is mixed normal, KS against the limit law suppressed; "
                           "variance compared with the mean path-conditional limit variance");

  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    const int n = cfg.n_list[ni];
    const double alpha = cfg.alpha_for(n);
    std::optional<LevelPlan> plan;
    if (cfg.plan)
      plan = make_level_plan(n, alpha, cfg.plan->a, cfg.plan->j1, cfg.plan->j2, cfg.plan->j0);
    else if (std::find(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::theta_hat_s) !=
             cfg.estimators.end())
      plan = default_level_plan(n, alpha, cfg.rho());

    std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(cfg.replications));
    const bool need_fixed_table = clt_mode && regime.regime == Regime::beta_fixed;
    parallel_for(
        outcomes.size(),
        [&](std::size_t r) {
          auto& out = outcomes[r];
          const PathSample path = simulate_until_inside(model, cfg, n, ni, r, out.exits);
          const RoundedObservations obs = observe_rounded(path, alpha);
          out.theta = theta_oracle(path, weight, model);
          for (EstimatorKind kind : cfg.estimators) {
            std::optional<LevelPlan> est_plan = plan;
            if (kind == EstimatorKind::theta_tilde && !(cfg.plan && cfg.plan->j0)) est_plan.reset();
            out.estimates.push_back(run_estimator(kind, obs, weight, est_plan, cfg.rho()).theta_hat);
          }
          if (clt_mode) {
            if (need_fixed_table) {
              out.sigma_lo = kInf;
              out.sigma_hi = 0.0;
              for (double x : path.fine_values) {
                out.sigma_lo = std::min(out.sigma_lo, model.sigma(x));
                out.sigma_hi = std::max(out.sigma_hi, model.sigma(x));
              }
            } else {
              out.limit_sd = limit_std(regime, path, weight, model);
            }
          }
        },
        threads);

    int exits = 0;
    for (const auto& o : outcomes) exits += o.exits;
    const double exit_rate = static_cast<double>(exits) / static_cast<double>(exits + cfg.replications);
    if (exit_rate > cfg.max_exit_rate)
      throw ExperimentAborted("exit rate " + std::to_string(exit_rate) + " at n = " + std::to_string(n) +
                              " exceeds " + std::to_string(cfg.max_exit_rate));
    if (exits > 0)
      report.notes.push_back("n = " + std::to_string(n) + ": " + std::to_string(exits) +
                             " exited paths resampled");

    if (need_fixed_table) {
      // Delta_beta over the sigma range visited by all paths, then the
      // path-conditional limit variances from a second, identical pass.
      double lo = kInf;
      double hi = 0.0;
      for (const auto& o : outcomes) {
        lo = std::min(lo, o.sigma_lo);
        hi = std::max(hi, o.sigma_hi);
      }
      std::vector<double> sigmas;
      if (hi - lo <= 1e-12 * hi) {
        sigmas = {0.5 * (lo + hi)};
      } else {
        constexpr int kNodes = 9;
        for (int i = 0; i < kNodes; ++i) sigmas.push_back(lo + (hi - lo) * i / (kNodes - 1));
      }
      const DeltaBetaTable table = build_delta_beta_table(regime.beta, sigmas, cfg.delta_beta_replications,
                                                          mix64(cfg.seed ^ 0xDE17Aull), threads);
      if (sigmas.size() == 1) {
        int ignored = 0;
        const PathSample path = simulate_until_inside(model, cfg, n, ni, 0, ignored);
        const double sd = limit_std(regime, path, weight, model, &table);
        for (auto& o : outcomes) o.limit_sd = sd;
      } else {
        parallel_for(
            outcomes.size(),
            [&](std::size_t r) {
              int ignored = 0;
              const PathSample path = simulate_until_inside(model, cfg, n, ni, r, ignored);
              outcomes[r].limit_sd = limit_std(regime, path, weight, model, &table);
            },
            threads);
      }
    }

    const double rate = regime.rate(n, alpha);
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      ReportRow row;
      row.n = n;
      row.alpha = alpha;
      row.beta = alpha * std::sqrt(static_cast<double>(n));
      row.estimator = cfg.estimators[e];
      row.replications = cfg.replications;
      row.exits = exits;
      std::vector<double> errors;
      std::vector<double> abs_errors;
      std::vector<double> estimates;
      std::vector<double> thetas;
      for (const auto& o : outcomes) {
        const double err = o.estimates[e] - o.theta;
        errors.push_back(err);
        abs_errors.push_back(std::abs(err));
        estimates.push_back(o.estimates[e]);
        thetas.push_back(o.theta);
        row.normalized_errors.push_back(rate * err);
      }
      row.mean_error = mean_of(errors);
      row.median_abs_error = median_of(abs_errors);
      row.median_estimate = median_of(estimates);
      row.mean_theta = mean_of(thetas);
      row.normalized_variance = sample_variance(row.normalized_errors);
      const double sd = std::sqrt(row.normalized_variance);
      row.ks_fitted = sd > 0.0 ? ks_distance_normal(row.normalized_errors, mean_of(row.normalized_errors), sd) : 1.0;
      if (clt_mode && row.estimator == EstimatorKind::theta_hat_s) {
        double target = 0.0;
        for (const auto& o : outcomes) target += o.limit_sd * o.limit_sd;
        target /= static_cast<double>(outcomes.size());
        row.target_variance = target;
        if (constant_sigma && target > 0.0) row.ks_limit = ks_distance_normal(row.normalized_errors, 0.0, std::sqrt(target));
      }
      report.rows.push_back(std::move(row));
    }
  }

  if (!clt_mode || cfg.n_list.size() >= 2) {
    for (EstimatorKind kind : cfg.estimators) {
      std::vector<std::pair<double, double>> pts;
      bool usable = true;
      for (const auto& row : report.rows) {
        if (row.estimator != kind) continue;
        if (!(row.median_abs_error > 0.0)) usable = false;
        pts.emplace_back(std::log2(static_cast<double>(row.n)), std::log2(row.median_abs_error));
      }
      if (usable && pts.size() >= 2) report.slopes[to_string(kind)] = fit_log_slope(pts);
    }
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace detail

inline ExperimentReport run_rate_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  return detail::run_experiment(cfg, false, threads);
}

inline ExperimentReport run_clt_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  return detail::run_experiment(cfg, true, threads);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json est = nlohmann::json::array();
  for (auto e : cfg.estimators) est.push_back(to_string(e));
  nlohmann::json j{{"model",
                    {{"name", cfg.model.name},
                     {"params", cfg.model.params},
                     {"x0", cfg.model.x0},
                     {"drift_mode", to_string(cfg.model.drift_mode)}}},
                   {"weight", cfg.weight},
                   {"regime", {{"gamma", cfg.gamma}, {"c_alpha", cfg.c_alpha}}},
                   {"n_list", cfg.n_list},
                   {"replications", cfg.replications},
                   {"seed", cfg.seed},
                   {"estimators", est},
                   {"substeps", cfg.substeps},
                   {"max_exit_rate", cfg.max_exit_rate},
                   {"delta_beta_replications", cfg.delta_beta_replications}};
  if (cfg.plan) {
    j["plan"] = {{"a", cfg.plan->a}, {"j1", cfg.plan->j1}, {"j2", cfg.plan->j2}};
    if (cfg.plan->j0) j["plan"]["j0"] = *cfg.plan->j0;
  } else {
    j["plan"] = nullptr;
  }
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig cfg;
    if (j.contains("model")) cfg.model = model_spec_from_json(j.at("model"));
    cfg.weight = j.value("weight", std::string("absolute"));
    if (j.contains("regime")) {
      cfg.gamma = j.at("regime").at("gamma").get<double>();
      cfg.c_alpha = j.at("regime").value("c_alpha", 1.0);
    }
    cfg.n_list = j.at("n_list").get<std::vector<int>>();
    cfg.replications = j.value("replications", 200);
    cfg.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& e : j.at("estimators")) cfg.estimators.push_back(estimator_from_string(e.get<std::string>()));
    }
    if (j.contains("plan") && !j.at("plan").is_null()) {
      const auto& p = j.at("plan");
      PlanOverride po;
      po.a = p.at("a").get<double>();
      po.j1 = p.at("j1").get<int>();
      po.j2 = p.at("j2").get<int>();
      if (p.contains("j0") && !p.at("j0").is_null()) po.j0 = p.at("j0").get<int>();
      cfg.plan = po;
    }
    cfg.substeps = j.value("substeps", kDefaultSubsteps);
    cfg.max_exit_rate = j.value("max_exit_rate", 0.10);
    cfg.delta_beta_replications = j.value("delta_beta_replications", 2000);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
}

inline nlohmann::json report_to_json(const ExperimentReport& rep, bool include_timing = false) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json row{{"n", r.n},
                       {"alpha", r.alpha},
                       {"beta", r.beta},
                       {"estimator", to_string(r.estimator)},
                       {"replications", r.replications},
                       {"exits", r.exits},
                       {"mean_error", r.mean_error},
                       {"median_abs_error", r.median_abs_error},
                       {"median_estimate", r.median_estimate},
                       {"mean_theta", r.mean_theta},
                       {"normalized_variance", r.normalized_variance},
                       {"ks_fitted", r.ks_fitted}};
    row["target_variance"] = r.target_variance ? nlohmann::json(*r.target_variance) : nlohmann::json(nullptr);
    row["ks_limit"] = r.ks_limit ? nlohmann::json(*r.ks_limit) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"mode", rep.mode},
                   {"config", config_to_json(rep.config)},
                   {"regime", {{"regime", to_string(rep.regime.regime)}, {"beta", rep.regime.beta}}},
                   {"rows", rows},
                   {"slopes", rep.slopes},
                   {"notes", rep.notes}};
  if (include_timing && rep.wall_clock_seconds) j["wall_clock_seconds"] = *rep.wall_clock_seconds;
  return j;
}

}  // namespace roundvol
