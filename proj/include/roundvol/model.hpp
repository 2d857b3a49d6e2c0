#pragma once

// Diffusion models dX = sigma(X) dW + a(X) dt on an open interval (nu, mu),
// and the weight functions g that define the target int g(X)^2 sigma(X)^2.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "roundvol/error.hpp"

namespace roundvol {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Open interval (lower, upper); either end may be infinite.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  bool contains(double x) const { return x > lower && x < upper; }
  bool contains_zero_or_negative() const { return lower < 0.0; }
};

enum class DriftMode { zero, assumption_d, custom_bounded };

inline std::string to_string(DriftMode mode) {
  switch (mode) {
    case DriftMode::zero: return "zero";
    case DriftMode::assumption_d: return "assumption_D";
    case DriftMode::custom_bounded: return "custom_bounded";
  }
  return "zero";
}

inline DriftMode drift_mode_from_string(const std::string& s) {
  if (s == "zero") return DriftMode::zero;
  if (s == "assumption_D" || s == "assumption_d") return DriftMode::assumption_d;
  if (s == "custom_bounded" || s == "custom-bounded") return DriftMode::custom_bounded;
  throw ValidationError("unknown drift mode '" + s + "'");
}

using RealFunction = std::function<double(double)>;

struct Coefficients {
  double sigma;
  double sigma_prime;
  double drift;
};

enum class Direction { forward, inverse };

class VolatilityModel;

namespace detail {

// Adaptive Simpson on [a, b] with absolute tolerance.
inline double adaptive_simpson(const RealFunction& f, double a, double b, double fa, double fm,
                               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // The last test stops refinement once delta is at rounding level, where the
  // halving tolerance can no longer be met.
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol ||
      std::abs(delta) <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right))
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate_simpson(const RealFunction& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

// int_a^b f over segments whose widths double away from a, so features near
// a are resolved even when b is far away.
inline double integrate_segmented(const RealFunction& f, double a, double b, double tol) {
  const double dir = b >= a ? 1.0 : -1.0;
  double sum = 0.0;
  double left = a;
  double width = std::max(1.0 / 16.0, 1e-3 * std::abs(a));
  while (dir * (b - left) > 0.0) {
    const double right = dir * (b - left) <= width ? b : left + dir * width;
    if (right == left) break;
    sum += integrate_simpson(f, left, right, tol);
    left = right;
    width *= 2.0;
  }
  return sum;
}

}  // namespace detail

// JSON-serializable description of a built-in model.
struct ModelSpec {
  std::string name = "constant";
  std::vector<double> params{1.0};
  double x0 = 0.0;
  DriftMode drift_mode = DriftMode::zero;
};

class VolatilityModel {
 public:
  struct Functions {
    RealFunction sigma;
    RealFunction sigma_prime;
    RealFunction sigma_second;
    RealFunction drift;  // only used in custom_bounded mode
  };

  enum class Family { constant, black_scholes, custom };

  VolatilityModel(std::string name, Family family, std::vector<double> params, Interval domain,
                  double x0, DriftMode drift_mode, Functions fns)
      : name_(std::move(name)),
        family_(family),
        params_(std::move(params)),
        domain_(domain),
        x0_(x0),
        drift_mode_(drift_mode),
        fns_(std::move(fns)) {
    if (!(domain_.lower < domain_.upper))
      throw ValidationError("model '" + name_ + "': empty domain");
    if (!domain_.contains(x0_))
      throw ValidationError("model '" + name_ + "': x0 = " + std::to_string(x0_) +
                            " is outside the domain");
    if (!fns_.sigma || !fns_.sigma_prime || !fns_.sigma_second)
      throw ValidationError("model '" + name_ + "': sigma, sigma' and sigma'' are required");
    if (drift_mode_ == DriftMode::custom_bounded && !fns_.drift)
      throw ValidationError("model '" + name_ + "': custom drift mode needs a drift function");
    if (!(fns_.sigma(x0_) > 0.0))
      throw ValidationError("model '" + name_ + "': sigma(x0) must be positive");
  }

  const std::string& name() const { return name_; }
  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  const Interval& domain() const { return domain_; }
  double x0() const { return x0_; }
  DriftMode drift_mode() const { return drift_mode_; }

  // True when X = h(W) holds exactly: the drift is (1/2) sigma sigma', which
  // for constant sigma coincides with the zero drift.
  bool exact_transform_available() const {
    if (drift_mode_ == DriftMode::assumption_d) return true;
    return drift_mode_ == DriftMode::zero && family_ == Family::constant;
  }

  double sigma(double x) const { return fns_.sigma(x); }
  double sigma_prime(double x) const { return fns_.sigma_prime(x); }
  double sigma_second(double x) const { return fns_.sigma_second(x); }

  double drift(double x) const {
    switch (drift_mode_) {
      case DriftMode::zero: return 0.0;
      case DriftMode::assumption_d: return 0.5 * fns_.sigma(x) * fns_.sigma_prime(x);
      case DriftMode::custom_bounded: return fns_.drift(x);
    }
    return 0.0;
  }

  Coefficients eval_coefficients(double x) const {
    check_domain(x);
    return {sigma(x), sigma_prime(x), drift(x)};
  }

  void check_domain(double x) const {
    if (!domain_.contains(x))
      throw DomainError("x = " + std::to_string(x) + " is outside the domain of model '" + name_ +
                        "'");
  }

  // Natural scale S(x) = int_{x0}^{x} dy / sigma(y), so S(x0) = 0.
  double scale_forward(double x) const {
    check_domain(x);
    switch (family_) {
      case Family::constant: return (x - x0_) / params_[0];
      case Family::black_scholes: return std::log(x / x0_) / params_[0];
      case Family::custom: break;
    }
    const RealFunction inv_sigma = [this](double y) { return 1.0 / fns_.sigma(y); };
    return detail::integrate_segmented(inv_sigma, x0_, x, 1e-13);
  }

  double scale_inverse(double w) const {
    switch (family_) {
      case Family::constant: return x0_ + params_[0] * w;
      case Family::black_scholes: return x0_ * std::exp(params_[0] * w);
      case Family::custom: break;
    }
    return custom_scale_inverse(w);
  }

  double scale_transform(double value, Direction direction) const {
    return direction == Direction::forward ? scale_forward(value) : scale_inverse(value);
  }

  ModelSpec spec() const { return {name_, params_, x0_, drift_mode_}; }

 private:
  // Bracket the root of S(x) = w by geometric expansion from x0, then run a
  // Newton iteration safeguarded by bisection.
  double custom_scale_inverse(double w) const {
    if (w == 0.0) return x0_;
    const double dir = w > 0.0 ? 1.0 : -1.0;
    const double edge = w > 0.0 ? domain_.upper : domain_.lower;
    double inner = x0_;
    double step = sigma(x0_) * std::abs(w);
    if (!(step > 0.0) || !std::isfinite(step)) step = 1.0;
    double outer = x0_;
    double s_outer = 0.0;
    const RealFunction inv_sigma = [this](double y) { return 1.0 / fns_.sigma(y); };
    for (int it = 0;; ++it) {
      double candidate = outer + dir * step;
      if (std::isfinite(edge) && !(dir * (edge - candidate) > 0.0)) candidate = 0.5 * (outer + edge);
      if (!domain_.contains(candidate) || candidate == outer || !std::isfinite(candidate) || it > 2000)
        throw RangeError("w = " + std::to_string(w) + " is outside the range of the scale function");
      const double s_candidate = s_outer + detail::integrate_segmented(inv_sigma, outer, candidate, 1e-13);
      if (dir * (s_candidate - w) >= 0.0) {
        inner = outer;
        outer = candidate;
        break;
      }
      outer = candidate;
      s_outer = s_candidate;
      step *= 2.0;
    }
    double lo = std::min(inner, outer);
    double hi = std::max(inner, outer);
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double fx = scale_forward(x) - w;
      if (std::abs(fx) <= 1e-13) return x;
      if (fx > 0.0) hi = x; else lo = x;
      double next = x - fx * sigma(x);  // S'(x) = 1 / sigma(x)
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) <= 1e-12 * std::max(1.0, std::abs(x))) return next;
      x = next;
    }
    return x;
  }

  std::string name_;
  Family family_;
  std::vector<double> params_;
  Interval domain_;
  double x0_;
  DriftMode drift_mode_;
  Functions fns_;
};

// constant: sigma(x) = sigma0 on the real line.
// black_scholes: sigma(x) = sigma0 * x on (0, inf).
// Default drift: assumption_D for black_scholes (exact simulation), zero otherwise.
inline DriftMode default_drift_mode(const std::string& name) {
  return name == "black_scholes" ? DriftMode::assumption_d : DriftMode::zero;
}

inline VolatilityModel make_model(const std::string& name, const std::vector<double>& params,
                                  double x0, std::optional<DriftMode> drift = std::nullopt) {
  const DriftMode drift_mode = drift.value_or(default_drift_mode(name));
  if (name == "constant") {
    if (params.size() != 1 || !(params[0] > 0.0) || !std::isfinite(params[0]))
      throw ValidationError("constant model needs one parameter sigma0 > 0");
    const double s0 = params[0];
    VolatilityModel::Functions fns{[s0](double) { return s0; }, [](double) { return 0.0; },
                                   [](double) { return 0.0; }, {}};
    return {name, VolatilityModel::Family::constant, params, Interval{}, x0, drift_mode,
            std::move(fns)};
  }
  if (name == "black_scholes") {
    if (params.size() != 1 || !(params[0] > 0.0) || !std::isfinite(params[0]))
      throw ValidationError("black_scholes model needs one parameter sigma0 > 0");
    if (!(x0 > 0.0)) throw ValidationError("black_scholes model needs x0 > 0");
    const double s0 = params[0];
    VolatilityModel::Functions fns{[s0](double x) { return s0 * x; },
                                   [s0](double) { return s0; }, [](double) { return 0.0; }, {}};
    return {name, VolatilityModel::Family::black_scholes, params, Interval{0.0, kInf}, x0,
            drift_mode, std::move(fns)};
  }
  if (name == "custom")
    throw ValidationError("custom models are built with make_custom_model (functions are not serializable)");
  throw ValidationError("unknown model family '" + name + "'");
}

inline VolatilityModel make_model(const ModelSpec& spec) {
  return make_model(spec.name, spec.params, spec.x0, spec.drift_mode);
}

inline VolatilityModel make_custom_model(std::string name, Interval domain, double x0,
                                         DriftMode drift_mode, VolatilityModel::Functions fns,
                                         std::vector<double> params = {}) {
  return {std::move(name), VolatilityModel::Family::custom, std::move(params), domain, x0,
          drift_mode, std::move(fns)};
}

enum class DerivativeSign { nonnegative, nonpositive, identically_zero };

inline std::string to_string(DerivativeSign s) {
  switch (s) {
    case DerivativeSign::nonnegative: return "nonnegative";
    case DerivativeSign::nonpositive: return "nonpositive";
    case DerivativeSign::identically_zero: return "identically_zero";
  }
  return "identically_zero";
}

// Weight g with g = g' = 0 outside its domain.
class WeightFunction {
 public:
  WeightFunction(std::string name, Interval domain, RealFunction g, RealFunction g_prime,
                 DerivativeSign sign)
      : name_(std::move(name)),
        domain_(domain),
        g_(std::move(g)),
        g_prime_(std::move(g_prime)),
        sign_(sign) {}

  const std::string& name() const { return name_; }
  const Interval& domain() const { return domain_; }
  DerivativeSign sign_g_prime() const { return sign_; }

  double g(double x) const { return domain_.contains(x) ? g_(x) : 0.0; }
  double g_prime(double x) const { return domain_.contains(x) ? g_prime_(x) : 0.0; }
  double sqrt_abs_gg_prime(double x) const {
    if (!domain_.contains(x)) return 0.0;
    return std::sqrt(std::abs(g_(x) * g_prime_(x)));
  }

  // +1, -1 or 0: the indicator difference 1{g' >= 0} - 1{g' <= 0}.
  double sign_factor() const {
    switch (sign_) {
      case DerivativeSign::nonnegative: return 1.0;
      case DerivativeSign::nonpositive: return -1.0;
      case DerivativeSign::identically_zero: return 0.0;
    }
    return 0.0;
  }

 private:
  std::string name_;
  Interval domain_;
  RealFunction g_;
  RealFunction g_prime_;
  DerivativeSign sign_;
};

// absolute: g = 1. relative: g = 1/x, requires a domain inside (0, inf).
inline WeightFunction make_weight(const std::string& name, Interval domain = Interval{}) {
  if (name == "absolute")
    return {name, domain, [](double) { return 1.0; }, [](double) { return 0.0; },
            DerivativeSign::identically_zero};
  if (name == "relative") {
    if (domain.contains_zero_or_negative())
      throw ValidationError("relative weight g = 1/x needs a domain inside (0, inf)");
    return {name, domain, [](double x) { return 1.0 / x; },
            [](double x) { return -1.0 / (x * x); }, DerivativeSign::nonpositive};
  }
  if (name == "custom")
    throw ValidationError("custom weights are built with the WeightFunction constructor");
  throw ValidationError("unknown weight '" + name + "'");
}

// Weight over the natural domain of a model (relative on (0, inf)).
inline WeightFunction make_weight_for(const std::string& name, const VolatilityModel& model) {
  if (name == "relative") return make_weight(name, Interval{0.0, kInf});
  return make_weight(name, model.domain());
}

inline void to_json(nlohmann::json& j, const Interval& d) {
  auto bound = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  j = nlohmann::json::array({bound(d.lower), bound(d.upper)});
}

inline void from_json(const nlohmann::json& j, Interval& d) {
  auto bound = [](const nlohmann::json& v) {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return kInf;
      if (s == "-inf") return -kInf;
      throw ValidationError("bad interval bound '" + s + "'");
    }
    return v.get<double>();
  };
  if (!j.is_array() || j.size() != 2) throw ValidationError("domain must be a two-element array");
  d = Interval{bound(j[0]), bound(j[1])};
}

inline nlohmann::json model_to_json(const VolatilityModel& m) {
  return {{"name", m.name()},
          {"params", m.params()},
          {"domain", m.domain()},
          {"x0", m.x0()},
          {"drift_mode", to_string(m.drift_mode())}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.name = j.value("name", std::string("constant"));
  spec.params = j.value("params", std::vector<double>{1.0});
  spec.x0 = j.value("x0", spec.name == "black_scholes" ? 1.0 : 0.0);
  spec.drift_mode = drift_mode_from_string(
      j.value("drift_mode", std::string(spec.name == "black_scholes" ? "assumption_D" : "zero")));
  return spec;
}

inline nlohmann::json weight_to_json(const WeightFunction& w) {
  return {{"name", w.name()}, {"domain", w.domain()}, {"sign_g_prime", to_string(w.sign_g_prime())}};
}

}  // namespace roundvol
