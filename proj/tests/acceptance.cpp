// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "roundvol/roundvol.hpp"

using namespace roundvol;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Exact unit properties.
Outcome unit_properties() {
  std::vector<std::string> failures;

  RandomStream rng(101, 0);
  for (int i = 0; i < 100000; ++i) {
    const double x = 200.0 * (rng.uniform() - 0.5);
    const double alpha = std::exp(-8.0 * rng.uniform());
    const double r = round_to_grid(x, alpha);
    const double y = round_to_grid(x + 5.0 * (rng.uniform() - 0.5), alpha);
    const double k = (y - r) / alpha;
    if (round_to_grid(r, alpha) != r || !(r <= x && x < r + alpha) || std::abs(k - std::nearbyint(k)) > 1e-6) {
      failures.push_back("rounding algebra");
      break;
    }
  }

  const int j0 = 2, J = 6, N = 1 << (J + 4);
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < (1 << j0); ++k) {
    std::vector<double> v(N);
    for (int i = 0; i < N; ++i) v[i] = haar_eval({j0, k}, (i + 0.5) / N, HaarKind::indicator);
    rows.push_back(std::move(v));
  }
  for (int j = j0; j <= J; ++j)
    for (int k = 0; k < (1 << j); ++k) {
      std::vector<double> v(N);
      for (int i = 0; i < N; ++i) v[i] = haar_eval({j, k}, (i + 0.5) / N, HaarKind::wavelet);
      rows.push_back(std::move(v));
    }
  double worst = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a; b < rows.size(); ++b) {
      double ip = 0.0;
      for (int i = 0; i < N; ++i) ip += rows[a][i] * rows[b][i];
      worst = std::max(worst, std::abs(ip / N - (a == b ? 1.0 : 0.0)));
    }
  if (worst > 1e-10) failures.push_back(fmt("orthonormality %.2e", worst));

  for (int j = 0; j <= 8; ++j) {
    const int M = 1 << (j + 2);
    for (int k = 0; k < (1 << j); ++k) {
      double pos = 0.0, neg = 0.0;
      for (int i = 1; i <= M; ++i) {
        const double v = haar_eval({j, k}, static_cast<double>(i) / M, HaarKind::wavelet) / M;
        (v > 0.0 ? pos : neg) += v;
      }
      if (pos + neg != 0.0) failures.push_back("vanishing moment");
    }
  }

  double gamma_worst = 0.0;
  RandomStream pairs(202, 0);
  for (int i = 0; i < 50; ++i) {
    const double sigma = 0.05 + 4.0 * pairs.uniform();
    const double beta = std::exp(std::log(0.05) + std::log(1000.0) * pairs.uniform());
    gamma_worst = std::max(gamma_worst, std::abs(gamma_p(sigma, beta, 1.0) - std::sqrt(2.0 / std::numbers::pi) * sigma));
  }
  if (gamma_worst > 1e-6) failures.push_back(fmt("gamma_1 identity %.2e", gamma_worst));

  std::string detail = fmt("orthonormality err %.1e, gamma_1 max err %.1e over 50 pairs", worst, gamma_worst);
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

// 2. Truncated Haar energy converges to the oracle.
Outcome parseval() {
  const int N = 1 << 16;
  std::vector<double> f(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double s = static_cast<double>(i) / N;
    f[i] = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * s) + 0.3 * std::exp(s);
  }
  const double theta = trapezoid_of_squares(f);
  const auto table = haar_coefficients(f, 0, 10);
  bool monotone = true;
  double prev = kInf;
  for (int J = 0; J <= 10; ++J) {
    const double gap = std::abs(table.energy(J) - theta);
    monotone = monotone && gap < prev;
    prev = gap;
  }
  const double g6 = std::abs(table.energy(6) - theta);
  const double g10 = std::abs(table.energy(10) - theta);
  return {monotone && g10 < g6, fmt("gap(jmax=6) %.3e, gap(jmax=10) %.3e, monotone %s", g6, g10, monotone ? "yes" : "no")};
}

ExperimentConfig constant_config(double gamma) {
  ExperimentConfig cfg;
  cfg.model = {"constant", {1.0}, 0.0, DriftMode::zero};
  cfg.weight = "absolute";
  cfg.gamma = gamma;
  cfg.c_alpha = 1.0;
  cfg.seed = 20240611;
  return cfg;
}

// 3. Fitted slope of median |theta_tilde - theta| against log2 n.
Outcome rate_reproduction() {
  bool pass = true;
  std::string detail;
  for (double gamma : {1.0 / 3.0, 0.5, 1.0}) {
    auto cfg = constant_config(gamma);
    cfg.n_list = {1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16};
    cfg.replications = 200;
    cfg.estimators = {EstimatorKind::theta_tilde};
    const auto rep = run_rate_experiment(cfg);
    const double slope = rep.slopes.at("theta_tilde");
    const double target = -std::min(gamma, 0.5);
    const bool ok = std::abs(slope - target) <= 0.1;
    pass = pass && ok;
    detail += fmt("%sgamma=%.3f slope %.3f (target %.3f)", detail.empty() ? "" : "; ", gamma, slope, target);
  }
  return {pass, detail};
}

// 4. Limit variances of the compensated estimator.
Outcome clt_constants() {
  bool pass = true;
  std::string detail;
  const std::vector<std::pair<double, double>> cases{{1.0, 2.0 * (std::numbers::pi - 2.0)}, {1.0 / 3.0, 4.0 / 3.0}};
  for (const auto& [gamma, target] : cases) {
    auto cfg = constant_config(gamma);
    cfg.n_list = {1 << 14};
    cfg.replications = 400;
    cfg.estimators = {EstimatorKind::theta_hat_s};
    const auto rep = run_clt_experiment(cfg);
    const auto& row = rep.row(1 << 14, EstimatorKind::theta_hat_s);
    const double rel = std::abs(row.normalized_variance / target - 1.0);
    const bool ok = rel <= 0.25 && row.ks_fitted < 0.08;
    pass = pass && ok;
    detail += fmt("%sgamma=%.3f var %.4f vs %.4f (%.1f%%), KS %.3f", detail.empty() ? "" : "; ", gamma,
                  row.normalized_variance, target, 100.0 * rel, row.ks_fitted);
  }
  return {pass, detail};
}

// 5. Delta_beta meets the neighbouring regimes.
Outcome delta_beta_regimes() {
  const auto small = delta_beta_converged(0.05, 1.0, 2000, 77, 1024);
  const double small_target = (std::numbers::pi - 2.0) / 2.0;
  const double small_tol = 3.0 * small.std_error + small.stabilization_band();
  const bool small_ok = std::abs(small.value - small_target) <= small_tol;

  const auto large = delta_beta_converged(20.0, 1.0, 2000, 78, 4096);
  const double scale = 400.0;
  const double large_value = large.value / scale;
  const double large_tol = (3.0 * large.std_error + large.stabilization_band()) / scale;
  const bool large_ok = std::abs(large_value - 1.0 / 3.0) <= large_tol;

  return {small_ok && large_ok,
          fmt("Delta_0.05 = %.4f +- %.4f vs %.4f (n_inner %d); Delta_20/400 = %.4f +- %.4f vs 0.3333 (n_inner %d)",
              small.value, small_tol, small_target, small.n_inner, large_value, large_tol, large.n_inner)};
}

// 6. p-variation against its large-beta limit.
Outcome p_variation() {
  const auto model = make_model("constant", {1.0}, 0.0);
  const int n = 1 << 14;
  const double alpha = std::pow(static_cast<double>(n), -0.25);
  double stat = 0.0, theory = 0.0, p1_err = 0.0;
  for (int s = 0; s < 50; ++s) {
    const auto path = simulate_path(model, n, 1, 6000 + s);
    const auto obs = observe_rounded(path, alpha);
    const auto pv = p_variation_stat(obs, 2.0, path, model);
    stat += pv.statistic;
    theory += *pv.theory;
    const auto pv1 = p_variation_stat(obs, 1.0, path, model);
    p1_err = std::max(p1_err, std::abs(*pv1.theory - std::sqrt(2.0 / std::numbers::pi)));
  }
  const double rel = std::abs(stat / theory - 1.0);
  return {rel <= 0.10 && p1_err <= 1e-6,
          fmt("p=2 mean statistic %.4f vs theory %.4f (%.1f%%); p=1 theory err %.1e", stat / 50, theory / 50, 100 * rel,
              p1_err)};
}

// 7. Realized volatility against the first estimator under coarse rounding.
Outcome baseline_contrast() {
  auto cfg = constant_config(1.0 / 3.0);
  cfg.n_list = {1 << 12, 1 << 13, 1 << 14};
  cfg.replications = 200;
  cfg.estimators = {EstimatorKind::rv, EstimatorKind::theta_tilde};
  const auto rep = run_rate_experiment(cfg);
  const auto& rv = rep.row(1 << 14, EstimatorKind::rv);
  const auto& tilde = rep.row(1 << 14, EstimatorKind::theta_tilde);
  const double ratio = rv.median_estimate / rv.mean_theta;
  return {ratio >= 2.0 && tilde.median_abs_error <= 0.1,
          fmt("median RV / theta = %.2f, median |theta_tilde - theta| = %.4f", ratio, tilde.median_abs_error)};
}

// 8. Byte-identical reports across runs and thread counts.
Outcome determinism() {
  ExperimentConfig cfg;
  cfg.model = {"black_scholes", {0.3}, 1.0, DriftMode::assumption_d};
  cfg.weight = "relative";
  cfg.gamma = 0.4;
  cfg.n_list = {256, 512, 1024};
  cfg.replications = 40;
  cfg.seed = 8;
  cfg.estimators = {EstimatorKind::theta_tilde, EstimatorKind::theta_hat_s, EstimatorKind::rv_log};
  const auto ref = report_to_json(run_rate_experiment(cfg, 1)).dump(2);
  bool same = true;
  for (unsigned threads : {1u, 2u, 4u, 7u}) same = same && report_to_json(run_rate_experiment(cfg, threads)).dump(2) == ref;
  return {same, fmt("%zu-byte report identical across thread counts 1, 2, 4, 7 and repeated runs", ref.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact unit properties", unit_properties},
      {"Parseval/oracle convergence", parseval},
      {"rate reproduction", rate_reproduction},
      {"CLT variance constants", clt_constants},
      {"Delta_beta regime consistency", delta_beta_regimes},
      {"p-variation diagnostic", p_variation},
      {"baseline contrast", baseline_contrast},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += out.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
