#pragma once

// Haar system on [0, 1] and the ground-truth side of the estimation problem:
// the coefficients of s -> g(X_s) sigma(X_s) and theta = int g^2 sigma^2.
//
// Supports are left-open, right-closed: 1_{jk} lives on (k 2^-j, (k+1) 2^-j],
// psi_{jk} is -2^{j/2} on the left half (k 2^-j, (k+1/2) 2^-j] and +2^{j/2} on
// the right half. s = 0 belongs to no cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "roundvol/error.hpp"
#include "roundvol/model.hpp"
#include "roundvol/simulate.hpp"

namespace roundvol {

struct HaarIndex {
  int j = 0;
  std::int64_t k = 0;
};

enum class HaarKind { indicator, wavelet };

inline double haar_eval(HaarIndex idx, double s, HaarKind kind) {
  if (idx.j < 0 || idx.k < 0 || idx.k >= (std::int64_t{1} << idx.j))
    throw ValidationError("Haar index out of range");
  const double scale = std::ldexp(1.0, idx.j);
  const double u = scale * s - static_cast<double>(idx.k);  // position inside the cell
  if (!(u > 0.0 && u <= 1.0)) return 0.0;
  const double amplitude = std::sqrt(scale);
  if (kind == HaarKind::indicator) return amplitude;
  return u <= 0.5 ? -amplitude : amplitude;
}

struct CoefficientTable {
  int j0 = 0;
  int jmax = 0;
  std::vector<double> c;               // 2^j0 entries
  std::vector<std::vector<double>> d;  // d[j - j0] has 2^j entries

  const std::vector<double>& detail(int j) const { return d.at(static_cast<std::size_t>(j - j0)); }

  // sum_k c^2 + sum_{j <= up_to} sum_k d^2
  double energy(int up_to) const {
    double e = 0.0;
    for (double v : c) e += v * v;
    for (int j = j0; j <= std::min(up_to, jmax); ++j)
      for (double v : detail(j)) e += v * v;
    return e;
  }
  double energy() const { return energy(jmax); }
};

inline void write_coefficients_csv(std::ostream& os, const CoefficientTable& table) {
  os.precision(17);
  os << "level,translate,kind,value\n";
  for (std::size_t k = 0; k < table.c.size(); ++k)
    os << table.j0 << ',' << k << ",scaling," << table.c[k] << '\n';
  for (int j = table.j0; j <= table.jmax; ++j) {
    const auto& row = table.detail(j);
    for (std::size_t k = 0; k < row.size(); ++k) os << j << ',' << k << ",wavelet," << row[k] << '\n';
  }
}

// Integrals of the piecewise-linear interpolant of samples f(i/N), i = 0..N.
class LinearInterpolantIntegrator {
 public:
  explicit LinearInterpolantIntegrator(std::span<const double> samples)
      : f_(samples.begin(), samples.end()), cumulative_(samples.size(), 0.0) {
    if (f_.size() < 2) throw ValidationError("need at least two quadrature nodes");
    intervals_ = f_.size() - 1;
    h_ = 1.0 / static_cast<double>(intervals_);
    for (std::size_t i = 1; i < f_.size(); ++i)
      cumulative_[i] = cumulative_[i - 1] + 0.5 * h_ * (f_[i - 1] + f_[i]);
  }

  std::size_t intervals() const { return intervals_; }

  // int_0^t of the interpolant, t in [0, 1].
  double primitive(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return cumulative_.back();
    const double pos = t * static_cast<double>(intervals_);
    auto i = static_cast<std::size_t>(pos);
    if (i >= intervals_) i = intervals_ - 1;
    const double frac = pos - static_cast<double>(i);
    if (frac == 0.0) return cumulative_[i];
    const double ft = f_[i] + frac * (f_[i + 1] - f_[i]);
    return cumulative_[i] + 0.5 * frac * h_ * (f_[i] + ft);
  }

  // Exact on dyadic points when N is a multiple of 2^level.
  double integrate(double a, double b) const { return primitive(b) - primitive(a); }

  double integrate_dyadic(std::int64_t num, int level) const {
    const std::int64_t cells = std::int64_t{1} << level;
    if (static_cast<std::int64_t>(intervals_) % cells == 0)
      return cumulative_[static_cast<std::size_t>(num * (static_cast<std::int64_t>(intervals_) / cells))];
    return primitive(std::ldexp(static_cast<double>(num), -level));
  }

 private:
  std::vector<double> f_;
  std::vector<double> cumulative_;
  std::size_t intervals_ = 0;
  double h_ = 0.0;
};

// Haar coefficients of the piecewise-linear interpolant of integrand samples
// on a uniform grid of [0, 1].
inline CoefficientTable haar_coefficients(std::span<const double> integrand, int j0, int jmax) {
  if (j0 < 0 || jmax < j0) throw ValidationError("need 0 <= j0 <= jmax");
  const std::size_t intervals = integrand.size() - 1;
  if (integrand.size() < 2 || (std::size_t{1} << jmax) > intervals)
    throw ValidationError("quadrature grid too coarse: need at least 2^jmax = " +
                          std::to_string(std::size_t{1} << jmax) + " fine intervals, have " +
                          std::to_string(intervals));
  const LinearInterpolantIntegrator quad(integrand);
  CoefficientTable table;
  table.j0 = j0;
  table.jmax = jmax;
  const std::int64_t cells0 = std::int64_t{1} << j0;
  table.c.resize(static_cast<std::size_t>(cells0));
  const double amp0 = std::sqrt(static_cast<double>(cells0));
  for (std::int64_t k = 0; k < cells0; ++k)
    table.c[k] = amp0 * (quad.integrate_dyadic(k + 1, j0) - quad.integrate_dyadic(k, j0));
  for (int j = j0; j <= jmax; ++j) {
    const std::int64_t cells = std::int64_t{1} << j;
    const double amp = std::sqrt(static_cast<double>(cells));
    std::vector<double> row(static_cast<std::size_t>(cells));
    for (std::int64_t k = 0; k < cells; ++k) {
      const double left = quad.integrate_dyadic(2 * k + 1, j + 1) - quad.integrate_dyadic(2 * k, j + 1);
      const double right = quad.integrate_dyadic(2 * k + 2, j + 1) - quad.integrate_dyadic(2 * k + 1, j + 1);
      row[k] = amp * (right - left);
    }
    table.d.push_back(std::move(row));
  }
  return table;
}

// s -> g(X_s) sigma(X_s) along the fine grid.
inline std::vector<double> weighted_sigma_profile(const PathSample& path, const WeightFunction& weight,
                                                  const VolatilityModel& model) {
  if (path.exited) throw ExitedPathError("path left the model domain");
  std::vector<double> f(path.fine_values.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = path.fine_values[i];
    f[i] = weight.g(x) * model.sigma(x);
  }
  return f;
}

inline CoefficientTable oracle_coefficients(const PathSample& path, const WeightFunction& weight,
                                            const VolatilityModel& model, int j0, int jmax) {
  if (jmax >= 0 && (std::size_t{1} << jmax) > path.fine_size())
    throw ValidationError("oracle_coefficients: n * substeps = " + std::to_string(path.fine_size()) +
                          " is below the required 2^jmax = " + std::to_string(std::size_t{1} << jmax));
  const auto profile = weighted_sigma_profile(path, weight, model);
  return haar_coefficients(profile, j0, jmax);
}

// Trapezoid rule for int_0^1 f(s)^2 ds over uniform samples.
inline double trapezoid_of_squares(std::span<const double> f) {
  if (f.size() < 2) throw ValidationError("need at least two quadrature nodes");
  double sum = 0.5 * (f.front() * f.front() + f.back() * f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += f[i] * f[i];
  return sum / static_cast<double>(f.size() - 1);
}

// theta = int_0^1 g(X_s)^2 sigma(X_s)^2 ds by the trapezoid rule on the fine grid.
inline double theta_oracle(const PathSample& path, const WeightFunction& weight,
                           const VolatilityModel& model) {
  return trapezoid_of_squares(weighted_sigma_profile(path, weight, model));
}

}  // namespace roundvol
