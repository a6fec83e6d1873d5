#pragma once

#include <cstdint>
#include <random>

#include "maxent/moment_basis.hpp"

namespace maxent {

/// 64-bit Mersenne twister with a portable mapping to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// 53 random bits scaled to [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

enum class TrueDensityKind { uniform, truncated_exponential, unit_exponential, grid_tabulated };

std::string to_string(TrueDensityKind kind);

/// The law of X used to generate synthetic samples.
class TrueDensity {
 public:
  static TrueDensity uniform(const SupportSpec& support);
  /// Density proportional to exp(-rate (x - a)) on a finite interval.
  static TrueDensity truncated_exponential(const SupportSpec& support, double rate);
  /// exp(-(x - a)) on the half-line [a, inf).
  static TrueDensity unit_exponential(const SupportSpec& support);
  /// Piecewise-linear density through (x_i, v_i), zero outside [x_0, x_n];
  /// normalized on construction.
  static TrueDensity grid_tabulated(const SupportSpec& support, std::vector<double> x,
                                    std::vector<double> values);

  TrueDensityKind kind() const { return kind_; }
  const SupportSpec& support() const { return support_; }
  double rate() const { return rate_; }
  const std::vector<double>& table_x() const { return table_x_; }
  const std::vector<double>& table_values() const { return table_values_; }

  /// Density with respect to Lebesgue measure.
  double pdf(double x) const;

  /// N i.i.d. draws; inverse CDF for closed-form kinds, rejection under a
  /// uniform envelope for grid_tabulated. Deterministic in the seed.
  SampleSet draw(std::size_t n, std::uint64_t seed) const;

  /// E[h(X)] by quadrature.
  Vector exact_moments(const MomentBasis& basis, int quad_points = 256) const;
  /// Cov[h(X)] by quadrature.
  Matrix exact_covariance(const MomentBasis& basis, int quad_points = 256) const;

  /// Expected fraction of accepted proposals in the rejection sampler.
  double acceptance_rate() const;

 private:
  TrueDensity() = default;
  // Lebesgue-measure nodes and weights covering the density's support.
  void lebesgue_rule(int n, std::vector<double>& x, std::vector<double>& w) const;
  double draw_one(Rng& rng) const;

  TrueDensityKind kind_ = TrueDensityKind::uniform;
  SupportSpec support_;
  double rate_ = 0.0;
  double trunc_mass_ = 1.0;
  std::vector<double> table_x_;
  std::vector<double> table_values_;
  double table_max_ = 0.0;
};

}  // namespace maxent
