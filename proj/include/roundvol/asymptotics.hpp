#pragma once

// Ingredients of the limit laws: the long-run variance Delta_beta, the
// p-variation functional gamma_p, regime-dependent limit standard deviations
// and confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "roundvol/error.hpp"
#include "roundvol/estimate.hpp"
#include "roundvol/model.hpp"
#include "roundvol/parallel.hpp"
#include "roundvol/rng.hpp"
#include "roundvol/simulate.hpp"

namespace roundvol {

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0); }

// P(a <= Y < b) for standard normal Y, accurate in both tails.
inline double normal_mass(double a, double b) {
  if (a >= 0.0) return normal_sf(a) - normal_sf(b);
  if (b <= 0.0) return normal_cdf(b) - normal_cdf(a);
  return 1.0 - normal_cdf(a) - normal_sf(b);
}

inline constexpr double kGaussianCutoff = 10.0;

}  // namespace detail

// ---------------------------------------------------------------------------
// gamma_p(sigma, beta) = int_0^1 du int h(y) |(beta u + sigma y)^(beta)|^p dy
// with z^(beta) = beta floor(z / beta).
//
// The inner integrand is constant between the rounding discontinuities
// y_m = (m - u) beta / sigma, so the inner integral is split there and each
// piece contributes its exact Gaussian mass. The outer integral is adaptive
// Gauss-Kronrod.

struct QuadratureValue {
  double value = 0.0;
  double error = 0.0;
};

inline double gamma_p_inner(double u, double sigma, double beta, double p) {
  const double c = beta / sigma;
  const double cutoff = detail::kGaussianCutoff / c;
  const auto m_lo = static_cast<std::int64_t>(std::floor(u - cutoff)) - 1;
  const auto m_hi = static_cast<std::int64_t>(std::ceil(u + cutoff)) + 1;
  double sum = 0.0;
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    if (m == 0) continue;
    const double mass = detail::normal_mass((static_cast<double>(m) - u) * c,
                                            (static_cast<double>(m) + 1.0 - u) * c);
    sum += std::pow(std::abs(static_cast<double>(m)), p) * mass;
  }
  return std::pow(beta, p) * sum;
}

inline QuadratureValue gamma_p_with_error(double sigma_value, double beta, double p) {
  if (!(p > 0.0)) throw ValidationError("gamma_p needs p > 0");
  if (!(beta > 0.0)) throw ValidationError("gamma_p needs beta > 0");
  if (!(sigma_value >= 0.0)) throw ValidationError("gamma_p needs sigma >= 0");
  if (sigma_value == 0.0) return {0.0, 0.0};  // beta u in (0, beta) rounds to 0
  auto inner = [&](double u) { return gamma_p_inner(u, sigma_value, beta, p); };
  QuadratureValue out;
  out.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, 0.0, 1.0, 20, 1e-13,
                                                                          &out.error);
  return out;
}

inline double gamma_p(double sigma_value, double beta, double p) {
  return gamma_p_with_error(sigma_value, beta, p).value;
}

// Moments behind the identity for rounded shifted variables. For U uniform on
// [0, 1] independent of Z ~ N(0, sigma^2):
//   abs_z                 E|Z|
//   abs_shifted           E|U + Z|
//   abs_rounded_shifted   E|floor(U + Z)|
// The identity holds for the rounded form; the unrounded form exceeds E|Z|.
struct ShiftedMoments {
  double abs_z = 0.0;
  double abs_shifted = 0.0;
  double abs_rounded_shifted = 0.0;
};

inline ShiftedMoments uniform_shift_moments(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  ShiftedMoments m;
  m.abs_z = sigma * std::sqrt(2.0 / std::numbers::pi);
  // E|u + Z| = sigma sqrt(2/pi) exp(-u^2 / 2 sigma^2) + u (1 - 2 Phi(-u / sigma))
  auto shifted = [sigma](double u) {
    return sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * u * u / (sigma * sigma)) +
           u * (1.0 - 2.0 * detail::normal_cdf(-u / sigma));
  };
  m.abs_shifted = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(shifted, 0.0, 1.0, 20, 1e-14);
  m.abs_rounded_shifted = gamma_p(sigma, 1.0, 1.0);
  return m;
}

// ---------------------------------------------------------------------------
// Delta_beta(sigma): long-run variance of
//   Z_i = beta sqrt(pi/2) |floor({U + sigma W_{i-1} / beta} + sigma (W_i - W_{i-1}) / beta)| - sigma,
// i.e. the rescaled absolute rounded increment of a Brownian path started at
// a uniform position inside a grid cell, minus its mean. The estimate is the
// Monte Carlo mean of (n^{-1/2} sum_{i<=n} Z_i)^2.

struct DeltaBetaEstimate {
  double beta = 0.0;
  double sigma_value = 0.0;
  double value = 0.0;        // at n_inner
  double std_error = 0.0;
  double value_doubled = 0.0;  // at 2 n_inner, same replications extended
  double std_error_doubled = 0.0;
  int n_inner = 0;
  int replications = 0;

  // |value(2n) - value(n)|: residual dependence on the inner horizon.
  double stabilization_band() const { return std::abs(value_doubled - value); }
  double combined_std_error() const { return std::hypot(std_error, std_error_doubled); }
};

inline DeltaBetaEstimate delta_beta(double beta, double sigma_value, int n_inner, int replications,
                                    std::uint64_t seed, unsigned threads = 0) {
  if (!(beta > 0.0)) throw ValidationError("delta_beta needs beta > 0");
  if (!(sigma_value > 0.0)) throw ValidationError("delta_beta needs sigma > 0");
  if (n_inner < 256) throw ValidationError("delta_beta needs n_inner >= 256");
  if (replications < 100) throw ValidationError("delta_beta needs at least 100 replications");

  std::vector<double> at_n(static_cast<std::size_t>(replications));
  std::vector<double> at_2n(static_cast<std::size_t>(replications));
  const double scale = sigma_value / beta;
  const double amplitude = beta * kAbsMomentScale;
  const std::uint64_t stream_base = stream_id({0xD17Au, static_cast<std::uint64_t>(n_inner)});
  parallel_for(
      static_cast<std::size_t>(replications),
      [&](std::size_t r) {
        RandomStream rng(seed, stream_id({stream_base, r}));
        double frac = rng.uniform();
        double sum = 0.0;
        for (int i = 1; i <= 2 * n_inner; ++i) {
          const double y = frac + scale * rng.normal();
          const double jump = std::floor(y);
          frac = y - jump;
          sum += amplitude * std::abs(jump) - sigma_value;
          if (i == n_inner) at_n[r] = sum * sum / n_inner;
        }
        at_2n[r] = sum * sum / (2.0 * n_inner);
      },
      threads);

  auto mean_se = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(v.size() - 1);
    return std::pair{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };
  DeltaBetaEstimate est;
  est.beta = beta;
  est.sigma_value = sigma_value;
  est.n_inner = n_inner;
  est.replications = replications;
  std::tie(est.value, est.std_error) = mean_se(at_n);
  std::tie(est.value_doubled, est.std_error_doubled) = mean_se(at_2n);
  return est;
}

// Doubles n_inner from n_start until the n / 2n values differ by less than
// two combined standard errors, capped at n_cap.
inline DeltaBetaEstimate delta_beta_converged(double beta, double sigma_value, int replications,
                                              std::uint64_t seed, int n_start = 256, int n_cap = 1 << 16,
                                              unsigned threads = 0) {
  int n = std::max(256, n_start);
  for (;;) {
    auto est = delta_beta(beta, sigma_value, n, replications, seed, threads);
    if (est.stabilization_band() < 2.0 * est.combined_std_error() || 2 * n > n_cap) return est;
    n *= 2;
  }
}

// Delta_beta tabulated over sigma at fixed beta, linearly interpolated.
class DeltaBetaTable {
 public:
  DeltaBetaTable(double beta, std::vector<double> sigmas, std::vector<double> values)
      : beta_(beta), sigmas_(std::move(sigmas)), values_(std::move(values)) {
    if (sigmas_.empty() || sigmas_.size() != values_.size())
      throw ValidationError("Delta_beta table needs matching non-empty columns");
    if (!std::is_sorted(sigmas_.begin(), sigmas_.end()))
      throw ValidationError("Delta_beta table sigmas must be ascending");
  }

  double beta() const { return beta_; }

  double operator()(double sigma) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(sigma));
    if (sigma < sigmas_.front() - tol || sigma > sigmas_.back() + tol)
      throw ValidationError("no Delta_beta data for sigma = " + std::to_string(sigma));
    if (sigmas_.size() == 1 || sigma <= sigmas_.front()) return values_.front();
    if (sigma >= sigmas_.back()) return values_.back();
    const auto it = std::upper_bound(sigmas_.begin(), sigmas_.end(), sigma);
    const std::size_t hi = static_cast<std::size_t>(it - sigmas_.begin());
    const std::size_t lo = hi - 1;
    const double t = (sigma - sigmas_[lo]) / (sigmas_[hi] - sigmas_[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
  }

 private:
  double beta_;
  std::vector<double> sigmas_;
  std::vector<double> values_;
};

inline DeltaBetaTable build_delta_beta_table(double beta, const std::vector<double>& sigmas, int replications,
                                             std::uint64_t seed, unsigned threads = 0) {
  std::vector<double> values;
  values.reserve(sigmas.size());
  for (double s : sigmas) values.push_back(delta_beta_converged(beta, s, replications, seed, 256, 1 << 16, threads).value);
  return {beta, sigmas, values};
}

// ---------------------------------------------------------------------------
// Regimes of the limit theorem, indexed by beta_n = alpha_n sqrt(n).

enum class Regime { beta_to_zero, beta_fixed, beta_to_infinity };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::beta_to_zero: return "beta_to_zero";
    case Regime::beta_fixed: return "beta_fixed";
    case Regime::beta_to_infinity: return "beta_to_infinity";
  }
  return "beta_to_zero";
}

struct RegimeSpec {
  Regime regime = Regime::beta_to_zero;
  double beta = 0.0;  // only for beta_fixed

  // sqrt(n) when beta stays bounded, 1/alpha when beta diverges.
  double rate(int n, double alpha) const {
    return regime == Regime::beta_to_infinity ? 1.0 / alpha : std::sqrt(static_cast<double>(n));
  }
};

// alpha_n = c n^-gamma: gamma > 1/2 -> beta_n -> 0, gamma = 1/2 -> beta_n = c,
// gamma < 1/2 -> beta_n -> infinity.
inline RegimeSpec regime_for_family(double gamma, double c_alpha) {
  constexpr double eps = 1e-12;
  if (gamma > 0.5 + eps) return {Regime::beta_to_zero, 0.0};
  if (gamma < 0.5 - eps) return {Regime::beta_to_infinity, 0.0};
  return {Regime::beta_fixed, c_alpha};
}

namespace detail {
template <class F>
double trapezoid_along(const PathSample& path, F&& f) {
  const auto& xs = path.fine_values;
  double sum = 0.5 * (f(xs.front()) + f(xs.back()));
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) sum += f(xs[i]);
  return sum / static_cast<double>(xs.size() - 1);
}
}  // namespace detail

// Conditional standard deviation of the mixed-normal limit:
//   beta -> 0:   sqrt(2 (pi - 2) int g^4 sigma^4)
//   beta fixed:  sqrt(4 int g^4 sigma^2 Delta_beta(sigma))
//   beta -> inf: sqrt(4/3 int g^4 sigma^2)
inline double limit_std(const RegimeSpec& regime, const PathSample& path, const WeightFunction& weight,
                        const VolatilityModel& model, const DeltaBetaTable* table = nullptr) {
  if (path.exited) throw ExitedPathError("path left the model domain");
  switch (regime.regime) {
    case Regime::beta_to_zero: {
      const double v = detail::trapezoid_along(path, [&](double x) {
        const double gs = weight.g(x) * model.sigma(x);
        return gs * gs * gs * gs;
      });
      return std::sqrt(2.0 * (std::numbers::pi - 2.0) * v);
    }
    case Regime::beta_fixed: {
      if (table == nullptr) throw ValidationError("beta-fixed regime needs Delta_beta data");
      if (std::abs(table->beta() - regime.beta) > 1e-12 * std::max(1.0, regime.beta))
        throw ValidationError("Delta_beta table was built for a different beta");
      const double v = detail::trapezoid_along(path, [&](double x) {
        const double g = weight.g(x);
        const double s = model.sigma(x);
        return g * g * g * g * s * s * (*table)(s);
      });
      return std::sqrt(4.0 * v);
    }
    case Regime::beta_to_infinity: {
      const double v = detail::trapezoid_along(path, [&](double x) {
        const double g = weight.g(x);
        const double s = model.sigma(x);
        return g * g * g * g * s * s;
      });
      return std::sqrt(4.0 / 3.0 * v);
    }
  }
  return 0.0;
}

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

inline double normal_quantile(double prob) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

inline ConfidenceInterval confidence_interval(const EstimateResult& result, const RegimeSpec& regime, double limit_sd,
                                     double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
  if (!(limit_sd >= 0.0)) throw ValidationError("limit standard deviation must be non-negative");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half = z * limit_sd / regime.rate(result.n, result.alpha);
  return {result.theta_hat - half, result.theta_hat + half};
}

// ---------------------------------------------------------------------------
// p-variation of rounded increments and its large-beta limit
//   statistic = alpha^-p beta n^-1 sum |dX^(alpha)|^p
//   theory    = beta^(1-p) int_0^1 gamma_p(sigma(X_s), beta) ds

struct PVariation {
  double statistic = 0.0;
  std::optional<double> theory;
};

inline double p_variation_statistic(const RoundedObservations& obs, double p) {
  if (!(p > 0.0)) throw ValidationError("p must be positive");
  double sum = 0.0;
  for (int i = 1; i <= obs.n; ++i) {
    const double d = std::abs(obs.values[i] - obs.values[i - 1]);
    if (d > 0.0) sum += std::pow(d, p);
  }
  return std::pow(obs.alpha, -p) * obs.beta * sum / obs.n;
}

inline PVariation p_variation_stat(const RoundedObservations& obs, double p) {
  return {p_variation_statistic(obs, p), std::nullopt};
}

// Theory side integrated along the path; gamma_p is tabulated on 257 sigma
// nodes and interpolated linearly unless sigma is constant along the path.
inline PVariation p_variation_stat(const RoundedObservations& obs, double p, const PathSample& path,
                                   const VolatilityModel& model) {
  PVariation out{p_variation_statistic(obs, p), std::nullopt};
  if (path.exited) throw ExitedPathError("path left the model domain");
  double lo = kInf;
  double hi = -kInf;
  for (double x : path.fine_values) {
    const double s = model.sigma(x);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double factor = std::pow(obs.beta, 1.0 - p);
  if (hi - lo <= 1e-12 * hi) {
    out.theory = factor * gamma_p(0.5 * (lo + hi), obs.beta, p);
    return out;
  }
  constexpr int kNodes = 257;
  std::vector<double> sig(kNodes);
  std::vector<double> val(kNodes);
  for (int i = 0; i < kNodes; ++i) {
    sig[i] = lo + (hi - lo) * i / (kNodes - 1);
    val[i] = gamma_p(sig[i], obs.beta, p);
  }
  auto interp = [&](double s) {
    const double pos = (s - lo) / (hi - lo) * (kNodes - 1);
    const int i = std::clamp(static_cast<int>(pos), 0, kNodes - 2);
    const double t = pos - i;
    return val[i] + t * (val[i + 1] - val[i]);
  };
  out.theory = factor * detail::trapezoid_along(path, [&](double x) { return interp(model.sigma(x)); });
  return out;
}

}  // namespace roundvol
