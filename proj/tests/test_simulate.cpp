#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roundvol/rng.hpp"
#include "roundvol/simulate.hpp"

using namespace roundvol;

TEST(RoundToGrid, Examples) {
  EXPECT_EQ(round_to_grid(2.7, 0.5), 2.5);
  EXPECT_EQ(round_to_grid(-0.3, 0.25), -0.5);
  EXPECT_EQ(round_to_grid(1.0, 0.25), 1.0);
  EXPECT_THROW(round_to_grid(1.0, 0.0), ValidationError);
  EXPECT_THROW(round_to_grid(1.0, -0.1), ValidationError);
}

TEST(RoundToGrid, Algebra) {
  RandomStream rng(5, 0);
  for (int i = 0; i < 20000; ++i) {
    const double x = 50.0 * (rng.uniform() - 0.5);
    const double alpha = std::exp(-6.0 * rng.uniform());
    const double r = round_to_grid(x, alpha);
    ASSERT_LE(r, x);
    ASSERT_LT(x, r + alpha);
    ASSERT_EQ(round_to_grid(r, alpha), r);
    const double y = x + 3.0 * (rng.uniform() - 0.5);
    const double ratio = (round_to_grid(y, alpha) - r) / alpha;
    ASSERT_NEAR(ratio, std::nearbyint(ratio), 1e-6);
  }
}

TEST(RoundToGrid, TenthsAreAudited) {
  // 0.3 / 0.1 is 2.9999999999999996 in doubles; the audit keeps the invariant
  // alpha * k <= x for the product actually returned.
  for (int k = -1000; k <= 1000; ++k) {
    const double x = k * 0.1;
    const double r = round_to_grid(x, 0.1);
    ASSERT_LE(r, x);
    ASSERT_LT(x, r + 0.1);
  }
}

TEST(SimulatePath, BrownianStartAndIncrements) {
  const auto m = make_model("constant", {1.0}, 0.0);
  const auto path = simulate_path(m, 1024, 4, 17);
  ASSERT_EQ(path.fine_values.size(), 1024u * 4 + 1);
  EXPECT_EQ(path.fine_values[0], 0.0);
  EXPECT_EQ(path.scheme, Scheme::exact_scale);
  const double dt = path.fine_step();
  double s2 = 0.0;
  for (std::size_t i = 1; i < path.fine_values.size(); ++i) {
    const double d = path.fine_values[i] - path.fine_values[i - 1];
    s2 += d * d / dt;
  }
  const double m2 = s2 / static_cast<double>(path.fine_size());
  EXPECT_NEAR(m2, 1.0, 5.0 * std::sqrt(2.0 / path.fine_size()));
}

TEST(SimulatePath, ExactBlackScholesIsExponentialOfW) {
  const auto bs = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  const auto bm = make_model("constant", {1.0}, 0.0);
  const auto x = simulate_path(bs, 256, 8, 99);
  const auto w = simulate_path(bm, 256, 8, 99);
  ASSERT_EQ(x.scheme, Scheme::exact_scale);
  for (int i = 0; i <= 256; ++i)
    ASSERT_NEAR(x.at_observation(i), std::exp(0.3 * w.at_observation(i)), 1e-12 * x.at_observation(i));
}

TEST(SimulatePath, Deterministic) {
  const auto bs = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  const auto a = simulate_path(bs, 512, 4, 3);
  const auto b = simulate_path(bs, 512, 4, 3);
  EXPECT_EQ(a.fine_values, b.fine_values);
  const auto c = simulate_path(bs, 512, 4, 4);
  EXPECT_NE(a.fine_values, c.fine_values);
}

TEST(SimulatePath, EulerConvergesToExact) {
  const auto bs = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  auto sup_error = [&](int substeps, std::uint64_t seed) {
    const auto exact = simulate_path(bs, 256, substeps, seed);
    const auto euler = simulate_path(bs, 256, substeps, seed, 0, true);
    EXPECT_EQ(euler.scheme, Scheme::euler);
    double e = 0.0;
    for (int i = 0; i <= 256; ++i) e = std::max(e, std::abs(exact.at_observation(i) - euler.at_observation(i)));
    return e;
  };
  double coarse = 0.0, fine = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double e64 = sup_error(64, seed);
    EXPECT_LE(e64, 1e-2) << seed;
    coarse += sup_error(4, seed);
    fine += sup_error(16, seed);
  }
  EXPECT_LT(fine, 0.7 * coarse);
}

TEST(SimulatePath, EulerExitIsFlagged) {
  // Large volatility relative to the distance to the boundary at zero.
  const auto bs = make_model("black_scholes", {6.0}, 1.0, DriftMode::zero);
  int exited = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = simulate_path(bs, 16, 1, seed);
    ASSERT_EQ(p.scheme, Scheme::euler);
    if (p.exited) {
      ++exited;
      EXPECT_THROW(observe_rounded(p, 0.01), ExitedPathError);
    }
  }
  EXPECT_GT(exited, 0);
}

TEST(SimulatePath, Preconditions) {
  const auto m = make_model("constant", {1.0}, 0.0);
  EXPECT_THROW(simulate_path(m, 1, 1, 0), ValidationError);
  EXPECT_THROW(simulate_path(m, 8, 0, 0), ValidationError);
}

namespace {
PathSample path_from(std::vector<double> values) {
  PathSample p;
  p.n = static_cast<int>(values.size()) - 1;
  p.substeps = 1;
  p.fine_values = std::move(values);
  return p;
}
}  // namespace

TEST(ObserveRounded, Examples) {
  const auto obs = observe_rounded(path_from({0.0, 0.13, 0.26}), 0.1);
  ASSERT_EQ(obs.values.size(), 3u);
  EXPECT_EQ(obs.values[0], 0.0);
  EXPECT_NEAR(obs.values[1], 0.1, 1e-16);
  EXPECT_NEAR(obs.values[2], 0.2, 1e-16);

  const auto m = make_model("constant", {1.0}, 0.0);
  const auto path = simulate_path(m, 64, 2, 1);
  const auto fine = observe_rounded(path, 1e-12);
  for (int i = 0; i <= 64; ++i) EXPECT_NEAR(fine.values[i], path.at_observation(i), 1e-12);

  EXPECT_EQ(observe_rounded(path_from({0.0, 1.0, 2.0, 3.0, 4.0}), 0.5).beta, 1.0);
}

TEST(ObserveRounded, DyadicScaling) {
  const auto m = make_model("constant", {1.0}, 0.0);
  const auto path = simulate_path(m, 512, 1, 8);
  const double alpha = 0.03;
  const auto base = observe_rounded(path, alpha);
  for (int k : {-3, 1, 5}) {
    const double lambda = std::ldexp(1.0, k);
    auto scaled_path = path;
    for (auto& v : scaled_path.fine_values) v *= lambda;
    const auto scaled = observe_rounded(scaled_path, lambda * alpha);
    for (int i = 0; i <= 512; ++i) ASSERT_EQ(scaled.values[i], lambda * base.values[i]);
  }
}

TEST(FractionalPart, UniformForBrownianPath) {
  const auto m = make_model("constant", {1.0}, 0.0);
  const auto path = simulate_path(m, 10000, 1, 21);
  const auto d = fractional_part_diagnostic(path, 0.01);
  EXPECT_LE(d.ks_distance, 0.05);
  ASSERT_EQ(d.histogram.size(), 20u);
  double total = 0.0;
  for (double h : d.histogram) total += h;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(FractionalPart, Degenerate) {
  const auto flat = path_from(std::vector<double>(201, 3.0));
  EXPECT_EQ(fractional_part_diagnostic(flat, 1.0).ks_distance, 1.0);

  // Path sitting just above a grid point with range far below alpha.
  const auto m = make_model("constant", {1.0}, 0.0);
  auto p = simulate_path(m, 400, 1, 2);
  const double lo = *std::min_element(p.fine_values.begin(), p.fine_values.end());
  const double hi = *std::max_element(p.fine_values.begin(), p.fine_values.end());
  for (auto& v : p.fine_values) v = v - lo + 1e-9;
  EXPECT_GT(fractional_part_diagnostic(p, 100.0 * (hi - lo)).ks_distance, 0.95);
  EXPECT_THROW(fractional_part_diagnostic(path_from(std::vector<double>(50, 0.0)), 1.0), ValidationError);
}

TEST(ShiftedRounding, FloorOfUniformShiftKeepsAbsoluteMean) {
  // E|floor(U + Z)| = E|Z| for U uniform on [0, 1) independent of Z.
  for (double sigma : {0.5, 1.0, 2.0}) {
    RandomStream rng(31, static_cast<std::uint64_t>(sigma * 10));
    const int m = 400000;
    double sum_diff = 0.0, sum_sq = 0.0;
    for (int i = 0; i < m; ++i) {
      const double u = rng.uniform();
      const double z = sigma * rng.normal();
      const double d = std::abs(std::floor(u + z)) - std::abs(z);
      sum_diff += d;
      sum_sq += d * d;
    }
    const double mean = sum_diff / m;
    const double se = std::sqrt((sum_sq / m - mean * mean) / m);
    EXPECT_LT(std::abs(mean), 3.0 * se + 1e-12) << sigma;
  }
}

TEST(Csv, ObservationsRoundTrip) {
  const auto m = make_model("constant", {1.0}, 0.0);
  const auto obs = observe_rounded(simulate_path(m, 128, 2, 4), 0.05);
  std::stringstream ss;
  write_observations_csv(ss, obs, 4, Scheme::exact_scale);
  EXPECT_NE(ss.str().find("# kind=rounded n=128"), std::string::npos);
  const auto prices = read_price_column(ss);
  const auto back = observations_from_prices(prices, 0.05);
  ASSERT_EQ(back.n, 128);
  for (int i = 0; i <= 128; ++i) EXPECT_EQ(back.values[i], obs.values[i]);
}

TEST(Csv, OffGridPricesRejected) {
  EXPECT_THROW(observations_from_prices({1.0, 1.03, 1.1}, 0.1), ValidationError);
}
