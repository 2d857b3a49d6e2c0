#pragma once

// Estimators computed from rounded observations only: the local absolute
// variations c_hat, d_hat, e_hat, the first estimator theta_tilde, the
// compensated estimator theta_hat(S), and realized-volatility baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roundvol/error.hpp"
#include "roundvol/model.hpp"
#include "roundvol/simulate.hpp"

namespace roundvol {

// sqrt(pi / 2): E|N(0, s^2)| = s sqrt(2 / pi).
inline constexpr double kAbsMomentScale = 1.2533141373155002512;

inline bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// floor with a small tolerance so exact integers computed through log2 and
// multiplications are not pushed one below.
inline int level_floor(double x) { return static_cast<int>(std::floor(x + 1e-9)); }

namespace detail {

inline void check_level(const RoundedObservations& obs, int j, bool wavelet) {
  if (j < 0 || j > 62) throw ValidationError("level j = " + std::to_string(j) + " out of range");
  const std::int64_t cells = std::int64_t{1} << j;
  const std::int64_t limit = wavelet ? obs.n / 2 : obs.n;
  if (cells > limit)
    throw ValidationError("level j = " + std::to_string(j) + " needs 2^j <= " +
                          (wavelet ? std::string("n/2") : std::string("n")) + " (n = " +
                          std::to_string(obs.n) + ")");
}

// w_i = f(X^(a)_{(i-1)/n}) |X^(a)_{i/n} - X^(a)_{(i-1)/n}|, i = 1..n (stored at i-1).
template <class WeightFn>
std::vector<double> weighted_abs_increments(const RoundedObservations& obs, WeightFn&& f) {
  std::vector<double> w(static_cast<std::size_t>(obs.n));
  for (int i = 1; i <= obs.n; ++i) {
    const double prev = obs.values[i - 1];
    const double fv = f(prev);
    w[i - 1] = fv == 0.0 ? 0.0 : fv * std::abs(obs.values[i] - prev);
  }
  return w;
}

// Index k of the cell (k 2^-j, (k+1) 2^-j] containing i/n, for i >= 1.
inline std::int64_t cell_of(std::int64_t i, int j, std::int64_t n) {
  return ((i << j) - 1) / n;
}

// Sum of w over each cell at level j, scaled by sqrt(pi/2) 2^{j/2} / sqrt(n).
inline std::vector<double> cell_sums(const std::vector<double>& w, std::int64_t n, int j) {
  const std::int64_t cells = std::int64_t{1} << j;
  std::vector<double> out(static_cast<std::size_t>(cells), 0.0);
  for (std::int64_t i = 1; i <= n; ++i) out[cell_of(i, j, n)] += w[i - 1];
  const double scale = kAbsMomentScale * std::sqrt(static_cast<double>(cells) / static_cast<double>(n));
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace detail

inline std::vector<double> c_hat(const RoundedObservations& obs, const WeightFunction& weight, int j) {
  detail::check_level(obs, j, false);
  const auto w = detail::weighted_abs_increments(obs, [&](double x) { return weight.g(x); });
  return detail::cell_sums(w, obs.n, j);
}

inline std::vector<double> d_hat(const RoundedObservations& obs, const WeightFunction& weight, int j) {
  detail::check_level(obs, j, true);
  const auto w = detail::weighted_abs_increments(obs, [&](double x) { return weight.g(x); });
  const std::int64_t n = obs.n;
  const std::int64_t cells = std::int64_t{1} << j;
  std::vector<double> out(static_cast<std::size_t>(cells), 0.0);
  for (std::int64_t i = 1; i <= n; ++i) {
    const std::int64_t k = detail::cell_of(i, j, n);
    // left half: i/n <= (k + 1/2) 2^-j  <=>  i 2^{j+1} <= (2k + 1) n
    const bool left = (i << (j + 1)) <= (2 * k + 1) * n;
    out[k] += left ? -w[i - 1] : w[i - 1];
  }
  const double scale = kAbsMomentScale * std::sqrt(static_cast<double>(cells) / static_cast<double>(n));
  for (double& v : out) v *= scale;
  return out;
}

inline std::vector<double> e_hat(const RoundedObservations& obs, const WeightFunction& weight, int j0) {
  detail::check_level(obs, j0, false);
  const auto w = detail::weighted_abs_increments(obs, [&](double x) { return weight.sqrt_abs_gg_prime(x); });
  return detail::cell_sums(w, obs.n, j0);
}

inline double sum_of_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// j0 = floor(log2(min(1 / alpha, sqrt n))), clamped to >= 0.
inline int default_base_level(int n, double alpha) {
  const double arg = std::min(1.0 / alpha, std::sqrt(static_cast<double>(n)));
  return std::max(0, level_floor(std::log2(arg)));
}

struct LevelPlan {
  int j0 = 0;
  double a = 0.5;
  double rho = 0.5;
  int j1 = 0;
  int j2 = 0;
  int jtop = 0;
  double r_n = 1.0;
  int n = 0;
  double alpha = 0.0;
};

inline double rate_r(int n, double alpha) {
  return std::max(alpha, 1.0 / std::sqrt(static_cast<double>(n)));
}

inline LevelPlan default_level_plan(int n, double alpha, double rho) {
  if (n < 4) throw ValidationError("default_level_plan needs n >= 4");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0, 1)");
  LevelPlan plan;
  plan.n = n;
  plan.alpha = alpha;
  plan.rho = rho;
  plan.a = rho;
  plan.r_n = rate_r(n, alpha);
  const double log_inv_r = -std::log2(plan.r_n);
  plan.j1 = std::max(0, level_floor(0.75 * log_inv_r));
  plan.j2 = std::max(0, level_floor(2.0 / 3.0 * log_inv_r));
  plan.jtop = std::max(0, level_floor((1.0 + plan.a) * log_inv_r));
  plan.j0 = default_base_level(n, alpha);
  return plan;
}

// Explicit (a, j1, j2, j0) with r_n and jtop derived from (n, alpha).
inline LevelPlan make_level_plan(int n, double alpha, double a, int j1, int j2,
                                 std::optional<int> j0 = std::nullopt) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("a must lie in (0, 1)");
  if (j1 < 0 || j2 < 0) throw ValidationError("levels must be non-negative");
  LevelPlan plan;
  plan.n = n;
  plan.alpha = alpha;
  plan.a = a;
  plan.rho = a;
  plan.r_n = rate_r(n, alpha);
  plan.j1 = j1;
  plan.j2 = j2;
  plan.jtop = std::max(0, level_floor((1.0 + a) * -std::log2(plan.r_n)));
  plan.j0 = j0 ? *j0 : default_base_level(n, alpha);
  if (plan.j0 < 0) throw ValidationError("levels must be non-negative");
  return plan;
}

struct PlanCondition {
  std::string name;
  double value = 0.0;
  bool pass = false;
};

struct PlanDiagnostics {
  std::vector<PlanCondition> conditions;  // the seven asymptotic quantities
  std::vector<std::string> warnings;
  bool all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; }) &&
           warnings.empty();
  }
};

// Evaluates the quantities that must vanish asymptotically for the plan to be
// admissible. A quantity passes when it is strictly below its threshold.
inline PlanDiagnostics validate_level_plan(const LevelPlan& plan, int n, double alpha,
                                           double threshold = 1.0) {
  PlanDiagnostics diag;
  const double r = rate_r(n, alpha);
  const double logn = std::log(static_cast<double>(n));
  const double j1 = plan.j1;
  const double j2 = plan.j2;
  auto add = [&](std::string name, double value) {
    diag.conditions.push_back({std::move(name), value, value < threshold});
  };
  add("alpha^(1-a) (log n)^2", std::pow(alpha, 1.0 - plan.a) * logn * logn);
  add("r_n 2^(2 j2 - j1)", r * std::exp2(2.0 * j2 - j1));
  add("r_n^-1 2^(j1/2) (alpha^2 log n + 1/n)", std::exp2(0.5 * j1) * (alpha * alpha * logn + 1.0 / n) / r);
  add("r_n 2^j1", r * std::exp2(j1));
  add("r_n^-1 2^(-3 j1 / 2)", std::exp2(-1.5 * j1) / r);
  add("2^(j2 - j1)", std::exp2(j2 - j1));
  add("r_n^-1 2^-(j1 + j2/2)", std::exp2(-(j1 + 0.5 * j2)) / r);

  const double log2n = std::log2(static_cast<double>(n));
  if (plan.j1 > log2n) diag.warnings.push_back("j1 exceeds log2 n: cells at level j1 contain no samples");
  if (plan.j2 + 1 > log2n) diag.warnings.push_back("j2 + 1 exceeds log2 n: wavelet half-cells contain no samples");
  if (plan.jtop > log2n) diag.warnings.push_back("jtop exceeds log2 n");
  if (plan.j2 > plan.j1) diag.warnings.push_back("j2 exceeds j1");
  if (!is_power_of_two(n)) diag.warnings.push_back("n is not a power of two: dyadic cells hold unequal sample counts");
  if (plan.n != 0 && (plan.n != n || plan.alpha != alpha))
    diag.warnings.push_back("plan was built for different (n, alpha)");
  return diag;
}

enum class EstimatorKind { theta_tilde, theta_hat_s, rv, rv_log };

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::theta_tilde: return "theta_tilde";
    case EstimatorKind::theta_hat_s: return "theta_hat_S";
    case EstimatorKind::rv: return "rv";
    case EstimatorKind::rv_log: return "rv_log";
  }
  return "theta_tilde";
}

inline EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "theta_tilde" || s == "tilde") return EstimatorKind::theta_tilde;
  if (s == "theta_hat_S" || s == "theta_hat_s" || s == "hat") return EstimatorKind::theta_hat_s;
  if (s == "rv") return EstimatorKind::rv;
  if (s == "rv_log" || s == "rvlog") return EstimatorKind::rv_log;
  throw ValidationError("unknown estimator '" + s + "'");
}

struct EstimateResult {
  double theta_hat = 0.0;
  EstimatorKind kind = EstimatorKind::theta_tilde;
  std::optional<LevelPlan> plan;
  int n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::map<std::string, double> components;
};

namespace detail {
inline EstimateResult result_header(const RoundedObservations& obs, EstimatorKind kind) {
  EstimateResult r;
  r.kind = kind;
  r.n = obs.n;
  r.alpha = obs.alpha;
  r.beta = obs.beta;
  return r;
}
}  // namespace detail

// Sum of c_hat^2 at j0 (default: floor(log2(min(1/alpha, sqrt n)))).
inline EstimateResult theta_tilde(const RoundedObservations& obs, const WeightFunction& weight,
                                  std::optional<int> j0 = std::nullopt) {
  if (obs.n < 4) throw ValidationError("theta_tilde needs n >= 4");
  const int level = j0 ? *j0 : default_base_level(obs.n, obs.alpha);
  auto result = detail::result_header(obs, EstimatorKind::theta_tilde);
  result.theta_hat = sum_of_squares(c_hat(obs, weight, level));
  result.components["j0"] = level;
  return result;
}

// sum_{j=j1}^{jtop} 2^{j2 - j}
inline double compensator_factor(const LevelPlan& plan) {
  double f = 0.0;
  for (int j = plan.j1; j <= plan.jtop; ++j) f += std::exp2(static_cast<double>(plan.j2 - j));
  return f;
}

// sum c_hat_{j1}^2 + R_n(S) + alpha (1{g'>=0} - 1{g'<=0}) sum e_hat_{j0}^2,
// with R_n(S) = sum_{j=j1}^{jtop} 2^{j2-j} Q_hat_{j2}.
inline EstimateResult theta_hat(const RoundedObservations& obs, const WeightFunction& weight,
                                const LevelPlan& plan) {
  if (plan.n != obs.n || plan.alpha != obs.alpha)
    throw ValidationError("level plan was built for (n = " + std::to_string(plan.n) + ", alpha = " +
                          std::to_string(plan.alpha) + ") but observations have (n = " +
                          std::to_string(obs.n) + ", alpha = " + std::to_string(obs.alpha) + ")");
  auto result = detail::result_header(obs, EstimatorKind::theta_hat_s);
  result.plan = plan;
  const double c_part = sum_of_squares(c_hat(obs, weight, plan.j1));
  const double q_hat = sum_of_squares(d_hat(obs, weight, plan.j2));
  const double r_part = compensator_factor(plan) * q_hat;
  double bias_part = 0.0;
  const double sign = weight.sign_factor();
  if (sign != 0.0) bias_part = obs.alpha * sign * sum_of_squares(e_hat(obs, weight, plan.j0));
  result.components = {{"c_part", c_part}, {"R_part", r_part}, {"bias_part", bias_part}, {"Q_hat", q_hat}};
  result.theta_hat = c_part + r_part + bias_part;
  return result;
}

enum class RvMode { levels, log_levels };

inline EstimateResult realized_volatility(const RoundedObservations& obs, RvMode mode) {
  auto result = detail::result_header(obs, mode == RvMode::levels ? EstimatorKind::rv : EstimatorKind::rv_log);
  double sum = 0.0;
  if (mode == RvMode::log_levels) {
    for (double v : obs.values)
      if (!(v > 0.0))
        throw ValidationError("log realized volatility needs positive prices, found " + std::to_string(v));
    for (int i = 1; i <= obs.n; ++i) {
      const double d = std::log(obs.values[i]) - std::log(obs.values[i - 1]);
      sum += d * d;
    }
  } else {
    for (int i = 1; i <= obs.n; ++i) {
      const double d = obs.values[i] - obs.values[i - 1];
      sum += d * d;
    }
  }
  result.theta_hat = sum;
  return result;
}

// Dispatch used by the CLI and the harness.
inline EstimateResult run_estimator(EstimatorKind kind, const RoundedObservations& obs,
                                    const WeightFunction& weight, const std::optional<LevelPlan>& plan,
                                    double rho = 0.5) {
  switch (kind) {
    case EstimatorKind::theta_tilde: return theta_tilde(obs, weight, plan ? std::optional<int>(plan->j0) : std::nullopt);
    case EstimatorKind::theta_hat_s:
      return theta_hat(obs, weight, plan ? *plan : default_level_plan(obs.n, obs.alpha, rho));
    case EstimatorKind::rv: return realized_volatility(obs, RvMode::levels);
    case EstimatorKind::rv_log: return realized_volatility(obs, RvMode::log_levels);
  }
  throw ValidationError("unknown estimator");
}

inline nlohmann::json plan_to_json(const LevelPlan& p) {
  return {{"j0", p.j0}, {"a", p.a},       {"rho", p.rho}, {"j1", p.j1}, {"j2", p.j2},
          {"jtop", p.jtop}, {"r_n", p.r_n}, {"n", p.n},     {"alpha", p.alpha}};
}

inline nlohmann::json result_to_json(const EstimateResult& r) {
  nlohmann::json j{{"theta_hat", r.theta_hat}, {"estimator", to_string(r.kind)},
                   {"n", r.n},                 {"alpha", r.alpha},
                   {"beta", r.beta},           {"components", r.components}};
  j["plan"] = r.plan ? plan_to_json(*r.plan) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json diagnostics_to_json(const PlanDiagnostics& d) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : d.conditions) conds.push_back({{"name", c.name}, {"value", c.value}, {"pass", c.pass}});
  return {{"conditions", conds}, {"warnings", d.warnings}};
}

}  // namespace roundvol
