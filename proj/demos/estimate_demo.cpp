// Simulate one geometric Brownian path, round it to a tick grid, and compare
// the estimators with the integrated volatility of the simulated path.

#include <cmath>
#include <cstdio>

#include "roundvol/roundvol.hpp"

int main() {
  using namespace roundvol;
  const int n = 1 << 14;
  const double alpha = std::pow(static_cast<double>(n), -1.0 / 3.0) * 0.5;

  const auto model = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  const auto weight = make_weight_for("absolute", model);
  const auto path = simulate_path(model, n, 4, 42);
  const auto obs = observe_rounded(path, alpha);
  const double theta = theta_oracle(path, weight, model);

  std::printf("n = %d, alpha = %.5f, beta = %.3f\n", n, alpha, obs.beta);
  std::printf("%-12s %12.6f\n", "theta", theta);
  for (auto kind : {EstimatorKind::rv, EstimatorKind::theta_tilde, EstimatorKind::theta_hat_s}) {
    const auto r = run_estimator(kind, obs, weight, std::nullopt, 1.0 / 3.0);
    std::printf("%-12s %12.6f  (error %+.6f)\n", to_string(kind).c_str(), r.theta_hat, r.theta_hat - theta);
  }
}
