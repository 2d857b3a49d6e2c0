#include <gtest/gtest.h>

#include <cmath>

#include "roundvol/model.hpp"

using namespace roundvol;

TEST(MakeModel, Constant) {
  const auto m = make_model("constant", {1.0}, 0.0);
  EXPECT_EQ(m.sigma(5.0), 1.0);
  EXPECT_EQ(m.domain().lower, -kInf);
  EXPECT_EQ(m.domain().upper, kInf);
}

TEST(MakeModel, BlackScholes) {
  const auto m = make_model("black_scholes", {0.3}, 1.0);
  EXPECT_NEAR(m.sigma(2.0), 0.6, 1e-15);
  EXPECT_EQ(m.domain().lower, 0.0);
  EXPECT_EQ(m.domain().upper, kInf);
}

TEST(MakeModel, RejectsBadParameters) {
  EXPECT_THROW(make_model("black_scholes", {-0.3}, 1.0), ValidationError);
  EXPECT_THROW(make_model("constant", {0.0}, 0.0), ValidationError);
  EXPECT_THROW(make_model("black_scholes", {0.3}, -1.0), ValidationError);
  EXPECT_THROW(make_model("heston", {0.3}, 1.0), ValidationError);
}

TEST(EvalCoefficients, Constant) {
  const auto c = make_model("constant", {1.0}, 0.0).eval_coefficients(3.0);
  EXPECT_EQ(c.sigma, 1.0);
  EXPECT_EQ(c.sigma_prime, 0.0);
  EXPECT_EQ(c.drift, 0.0);
}

TEST(EvalCoefficients, BlackScholesAssumptionD) {
  const auto m = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  const auto c = m.eval_coefficients(2.0);
  EXPECT_NEAR(c.sigma, 0.6, 1e-15);
  EXPECT_NEAR(c.sigma_prime, 0.3, 1e-15);
  EXPECT_NEAR(c.drift, 0.09, 1e-15);
  EXPECT_THROW(m.eval_coefficients(-1.0), DomainError);
}

TEST(ScaleTransform, ClosedForms) {
  const auto c = make_model("constant", {2.0}, 0.0);
  EXPECT_DOUBLE_EQ(c.scale_transform(3.0, Direction::forward), 1.5);
  const auto bs = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  EXPECT_NEAR(bs.scale_transform(1.0, Direction::inverse), std::exp(0.3), 1e-12);
  EXPECT_NEAR(bs.scale_transform(1.0, Direction::inverse), 1.349859, 1e-6);
}

namespace {
// Same law as black_scholes but built through the generic custom path, so the
// numerical scale transform can be compared with the closed form.
VolatilityModel custom_black_scholes(double s0) {
  return make_custom_model("custom_bs", Interval{0.0, kInf}, 1.0, DriftMode::assumption_d,
                           {[s0](double x) { return s0 * x; }, [s0](double) { return s0; },
                            [](double) { return 0.0; }, nullptr});
}
}  // namespace

TEST(ScaleTransform, NumericMatchesClosedForm) {
  const auto closed = make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d);
  const auto numeric = custom_black_scholes(0.3);
  for (double x : {0.2, 0.9, 1.0, 1.7, 5.0})
    EXPECT_NEAR(numeric.scale_forward(x), closed.scale_forward(x), 1e-10) << x;
  EXPECT_NEAR(numeric.scale_inverse(1.0), std::exp(0.3), 1e-10);
}

TEST(ScaleTransform, RoundTrip) {
  const auto models = {make_model("constant", {2.0}, 0.0),
                       make_model("black_scholes", {0.3}, 1.0, DriftMode::assumption_d),
                       custom_black_scholes(0.3)};
  for (const auto& m : models) {
    EXPECT_NEAR(m.scale_inverse(m.scale_forward(0.7)), 0.7, 1e-10) << m.name();
    EXPECT_NEAR(m.scale_forward(m.x0()), 0.0, 1e-14) << m.name();
  }
}

TEST(ScaleTransform, StrictlyIncreasing) {
  const auto m = custom_black_scholes(0.5);
  double prev = -kInf;
  for (int i = 1; i <= 200; ++i) {
    const double s = m.scale_forward(0.05 * i);
    ASSERT_GT(s, prev);
    prev = s;
  }
}

TEST(ScaleTransform, InverseOutsideRangeIsRangeError) {
  // sigma(x) = 1 + x^2 on the real line: S is bounded by pi/2 in absolute value.
  const auto m = make_custom_model("arctan", Interval{}, 0.0, DriftMode::zero,
                                   {[](double x) { return 1.0 + x * x; }, [](double x) { return 2.0 * x; },
                                    [](double) { return 2.0; }, nullptr});
  EXPECT_NEAR(m.scale_inverse(std::atan(3.0)), 3.0, 1e-9);
  EXPECT_THROW(m.scale_inverse(2.0), RangeError);
}

TEST(Model, FiniteDifferenceConsistency) {
  const auto bs = make_model("black_scholes", {0.3}, 1.0);
  const auto arctan = make_custom_model("arctan", Interval{}, 0.0, DriftMode::zero,
                                        {[](double x) { return 1.0 + x * x; }, [](double x) { return 2.0 * x; },
                                         [](double) { return 2.0; }, nullptr});
  for (const auto* m : {&bs, &arctan}) {
    for (int i = 1; i <= 100; ++i) {
      const double x = 0.05 * i;
      for (double h : {1e-4, 1e-5}) {
        const double fd1 = (m->sigma(x + h) - m->sigma(x - h)) / (2.0 * h);
        const double fd2 = (m->sigma_prime(x + h) - m->sigma_prime(x - h)) / (2.0 * h);
        ASSERT_NEAR(m->sigma_prime(x), fd1, 10.0 * h * h * (1.0 + std::abs(x)) + 1e-9);
        ASSERT_NEAR(m->sigma_second(x), fd2, 10.0 * h * h * (1.0 + std::abs(x)) + 1e-9);
      }
    }
  }
}

TEST(MakeWeight, Absolute) {
  const auto w = make_weight("absolute");
  EXPECT_EQ(w.g(7.0), 1.0);
  EXPECT_EQ(w.g_prime(7.0), 0.0);
  EXPECT_EQ(w.sign_g_prime(), DerivativeSign::identically_zero);
  EXPECT_EQ(w.sign_factor(), 0.0);
}

TEST(MakeWeight, Relative) {
  const auto w = make_weight("relative", Interval{0.0, kInf});
  EXPECT_DOUBLE_EQ(w.g(2.0), 0.5);
  EXPECT_DOUBLE_EQ(w.g_prime(2.0), -0.25);
  EXPECT_NEAR(w.sqrt_abs_gg_prime(2.0), 0.3535534, 1e-7);
  EXPECT_EQ(w.sign_g_prime(), DerivativeSign::nonpositive);
  EXPECT_EQ(w.sign_factor(), -1.0);
  EXPECT_EQ(w.g(-1.0), 0.0);
  EXPECT_EQ(w.g_prime(-1.0), 0.0);
  EXPECT_EQ(w.g(0.0), 0.0);
}

TEST(MakeWeight, RelativeRejectsDomainWithZero) {
  EXPECT_THROW(make_weight("relative", Interval{}), ValidationError);
  EXPECT_THROW(make_weight("relative", Interval{-1.0, 1.0}), ValidationError);
}

TEST(MakeWeight, SqrtAbsProductInvariant) {
  const auto w = make_weight("relative", Interval{0.0, kInf});
  for (int i = 1; i <= 100; ++i) {
    const double x = 0.037 * i;
    const double lhs = w.sqrt_abs_gg_prime(x) * w.sqrt_abs_gg_prime(x);
    EXPECT_NEAR(lhs, std::abs(w.g(x) * w.g_prime(x)), 1e-12 * std::abs(w.g(x) * w.g_prime(x)));
    EXPECT_NEAR(w.sqrt_abs_gg_prime(x), std::pow(x, -1.5), 1e-12 * std::pow(x, -1.5));
  }
}

TEST(Json, ModelRoundTrip) {
  const auto m = make_model("black_scholes", {0.3}, 1.5, DriftMode::assumption_d);
  const auto j = model_to_json(m);
  EXPECT_EQ(j.at("domain")[1], "inf");
  EXPECT_EQ(j.at("domain")[0], 0.0);
  const auto spec = model_spec_from_json(j);
  EXPECT_EQ(spec.name, "black_scholes");
  EXPECT_EQ(spec.x0, 1.5);
  EXPECT_EQ(spec.drift_mode, DriftMode::assumption_d);
  EXPECT_EQ(make_model(spec).sigma(2.0), m.sigma(2.0));
}
