#pragma once

// Path generation on [0, 1] and the rounding observation scheme
// X^(alpha)_{i/n} = alpha * floor(X_{i/n} / alpha).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "roundvol/error.hpp"
#include "roundvol/model.hpp"
#include "roundvol/rng.hpp"

namespace roundvol {

enum class Scheme { exact_scale, euler };

inline std::string to_string(Scheme s) { return s == Scheme::exact_scale ? "exact_scale" : "euler"; }

inline constexpr int kDefaultSubsteps = 16;

// Values on the fine grid i / (n * substeps), i = 0 .. n * substeps.
struct PathSample {
  int n = 0;
  int substeps = 1;
  std::vector<double> fine_values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Scheme scheme = Scheme::exact_scale;
  bool exited = false;

  std::size_t fine_size() const { return static_cast<std::size_t>(n) * substeps; }
  double fine_step() const { return 1.0 / static_cast<double>(fine_size()); }

  // X_{i/n}
  double at_observation(int i) const { return fine_values[static_cast<std::size_t>(i) * substeps]; }

  std::vector<double> observation_values() const {
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) out[i] = at_observation(i);
    return out;
  }
};

struct RoundedObservations {
  int n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> values;  // n + 1 grid values
};

namespace detail {

// floor(x / alpha) with the result audited so that alpha*k <= x < alpha*(k+1)
// holds for the double products actually returned.
inline double grid_floor_index(double x, double alpha) {
  double k = std::floor(static_cast<long double>(x) / static_cast<long double>(alpha));
  if (k * alpha > x) k -= 1.0;
  if ((k + 1.0) * alpha <= x) k += 1.0;
  return k;
}

}  // namespace detail

inline double round_to_grid(double x, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ValidationError("rounding grid alpha must be positive, got " + std::to_string(alpha));
  return detail::grid_floor_index(x, alpha) * alpha;
}

// Fractional part {x / alpha} in [0, 1).
inline double grid_fraction(double x, double alpha) {
  const double k = detail::grid_floor_index(x, alpha);
  const double frac = (x - k * alpha) / alpha;
  return std::clamp(frac, 0.0, std::nextafter(1.0, 0.0));
}

inline RoundedObservations make_rounded_observations(std::vector<double> values, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (values.size() < 2) throw ValidationError("need at least two observations");
  RoundedObservations obs;
  obs.n = static_cast<int>(values.size()) - 1;
  obs.alpha = alpha;
  obs.beta = alpha * std::sqrt(static_cast<double>(obs.n));
  obs.values = std::move(values);
  return obs;
}

// Snap externally supplied prices to the alpha grid. Each price must already
// sit on the grid up to a relative representation error of 1e-9.
inline RoundedObservations observations_from_prices(const std::vector<double>& prices, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  std::vector<double> snapped(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double k = std::nearbyint(prices[i] / alpha);
    if (std::abs(prices[i] / alpha - k) > 1e-9 * std::max(1.0, std::abs(k)))
      throw ValidationError("price " + std::to_string(prices[i]) + " at row " + std::to_string(i) +
                            " is not a multiple of alpha = " + std::to_string(alpha));
    snapped[i] = k * alpha;
  }
  return make_rounded_observations(std::move(snapped), alpha);
}

// Exact scheme X = h(W) when the model has an exact natural-scale
// representation, Euler-Maruyama on the fine grid otherwise. Both schemes
// consume the same Gaussian increments for the same (seed, stream).
inline PathSample simulate_path(const VolatilityModel& model, int n, int substeps,
                                std::uint64_t seed, std::uint64_t stream = 0,
                                bool force_euler = false) {
  if (n < 2) throw ValidationError("simulate_path needs n >= 2");
  if (substeps < 1) throw ValidationError("simulate_path needs substeps >= 1");
  PathSample path;
  path.n = n;
  path.substeps = substeps;
  path.seed = seed;
  path.stream = stream;
  path.scheme = (model.exact_transform_available() && !force_euler) ? Scheme::exact_scale : Scheme::euler;

  const std::size_t steps = path.fine_size();
  const double dt = 1.0 / static_cast<double>(steps);
  const double sqrt_dt = std::sqrt(dt);
  RandomStream rng(seed, stream);
  path.fine_values.resize(steps + 1);
  path.fine_values[0] = model.x0();

  if (path.scheme == Scheme::exact_scale) {
    double w = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
      w += sqrt_dt * rng.normal();
      path.fine_values[i] = model.scale_inverse(w);
    }
    return path;
  }

  double x = model.x0();
  const Interval& dom = model.domain();
  for (std::size_t i = 1; i <= steps; ++i) {
    const double xi = rng.normal();
    x += model.drift(x) * dt + model.sigma(x) * sqrt_dt * xi;
    if (!dom.contains(x) || !std::isfinite(x)) {
      path.exited = true;
      path.fine_values.resize(i + 1);
      path.fine_values[i] = x;
      return path;
    }
    path.fine_values[i] = x;
  }
  return path;
}

inline RoundedObservations observe_rounded(const PathSample& path, double alpha) {
  if (path.exited) throw ExitedPathError("path left the model domain; refusing to observe it");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  std::vector<double> values(static_cast<std::size_t>(path.n) + 1);
  for (int i = 0; i <= path.n; ++i) values[i] = round_to_grid(path.at_observation(i), alpha);
  return make_rounded_observations(std::move(values), alpha);
}

struct FractionalPartDiagnostic {
  double ks_distance = 0.0;
  std::vector<double> histogram;  // 20 bins on [0, 1), relative frequencies
};

// Kolmogorov-Smirnov distance from Uniform[0, 1] of a sample in [0, 1].
inline double ks_distance_uniform(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / m - u, u - static_cast<double>(i) / m});
  }
  return d;
}

// Uniformity of {X_{i/n} / alpha}, i = 1..n.
inline FractionalPartDiagnostic fractional_part_diagnostic(const PathSample& path, double alpha) {
  if (path.n < 100) throw ValidationError("fractional_part_diagnostic needs n >= 100");
  if (path.exited) throw ExitedPathError("path left the model domain");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  constexpr int kBins = 20;
  std::vector<double> fractions(static_cast<std::size_t>(path.n));
  FractionalPartDiagnostic out;
  out.histogram.assign(kBins, 0.0);
  for (int i = 1; i <= path.n; ++i) {
    const double f = grid_fraction(path.at_observation(i), alpha);
    fractions[i - 1] = f;
    out.histogram[std::min(kBins - 1, static_cast<int>(f * kBins))] += 1.0 / path.n;
  }
  out.ks_distance = ks_distance_uniform(std::move(fractions));
  return out;
}

// CSV: '#' header records, then index,time,value rows on the observation grid
// (or on the fine grid when fine = true).
inline void write_path_csv(std::ostream& os, const PathSample& path, bool fine = false) {
  os.precision(17);
  os << "# kind=path n=" << path.n << " substeps=" << path.substeps << " seed=" << path.seed
     << " scheme=" << to_string(path.scheme) << (path.exited ? " exited=1" : "") << '\n';
  os << "index,time,value\n";
  const std::size_t count = fine ? path.fine_values.size() : static_cast<std::size_t>(path.n) + 1;
  const double denom = fine ? static_cast<double>(path.fine_size()) : static_cast<double>(path.n);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = fine ? i : i * path.substeps;
    if (idx >= path.fine_values.size()) break;
    os << i << ',' << static_cast<double>(i) / denom << ',' << path.fine_values[idx] << '\n';
  }
}

inline void write_observations_csv(std::ostream& os, const RoundedObservations& obs,
                                   std::uint64_t seed, Scheme scheme) {
  os.precision(17);
  os << "# kind=rounded n=" << obs.n << " alpha=" << obs.alpha << " beta=" << obs.beta
     << " seed=" << seed << " scheme=" << to_string(scheme) << '\n';
  os << "index,time,value\n";
  for (int i = 0; i <= obs.n; ++i)
    os << i << ',' << static_cast<double>(i) / obs.n << ',' << obs.values[i] << '\n';
}

// Reads the value column of a CSV written above, or a bare one-column file.
inline std::vector<double> read_price_column(std::istream& is) {
  std::vector<double> values;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find_last_of(',');
    const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      values.push_back(v);
    } catch (const std::exception&) {
      if (values.empty()) continue;  // header row
      throw ValidationError("unparseable value '" + field + "'");
    }
  }
  return values;
}

}  // namespace roundvol
