#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maxent/sampling.hpp"
#include "maxent/sensitivity.hpp"
#include "maxent/solver.hpp"

namespace maxent {

/// Bounded test function g for the probability bands on int g f_hat*.
struct TestFunction {
  enum class Kind { indicator, constant };
  Kind kind = Kind::indicator;
  double lo = 0.0;
  double hi = 0.0;
  double value = 1.0;
  /// Deviation level a for the band |int g f_hat - int g f*| <= a.
  double a = 0.05;

  double operator()(double x) const;
  std::string label() const;
};

struct BoundsConfig {
  /// Levels a for P(|| |D|^{1/2} (d_hat - d) || > a).
  std::vector<double> chebyshev_a;
  std::vector<TestFunction> functions;
};

struct ExperimentConfig {
  ExperimentConfig(TrueDensity truth, MomentBasis basis);

  TrueDensity truth;
  MomentBasis basis;
  /// Support on which models are fitted; defaults to the truth's support.
  SupportSpec support;
  std::vector<long> n_grid{100, 1000, 10000};
  int replicates = 200;
  std::uint64_t seed = 12345;
  std::vector<double> grid_points;
  SolverOptions solver;
  int quad_points = kDefaultQuadPoints;
  double z = 1.96;
  BoundsConfig bounds;

  void validate() const;
  /// base_seed + r * 10^6 + index(N)
  std::uint64_t cell_seed(int n_index, int replicate) const;
};

struct ReplicateRecord {
  long n = 0;
  int n_index = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  Vector d_hat;
  Vector lambda_hat;
  double l1_err = 0.0;
  double kl = 0.0;
  double sup_err = 0.0;
  /// ||actual - first-order prediction||_1 / ||actual||_1
  double first_order_resid = 0.0;
  /// f_hat* at the configured grid points (density w.r.t. m).
  Vector f_grid;
  /// || |D|^{1/2} (d_hat - d) ||
  double cheb_stat = 0.0;
  /// int g f_hat* - int g f*, one entry per test function.
  Vector g_change;
};

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

Summary summarize(std::vector<double> values);

struct GridPointStats {
  double x = 0.0;
  double f_star = 0.0;
  double sigma2 = 0.0;
  /// Variance over replicates of sqrt(N) (f_hat(x) - f*(x)).
  double emp_var = 0.0;
  /// Mean over replicates of f_hat(x) - f*(x).
  double mean_bias = 0.0;
  /// Fraction of replicates inside f* +- z sigma(x) / sqrt(N).
  double coverage = 0.0;
  double ks_stat = 0.0;
  bool ks_pass = false;
  bool ks_skipped = false;
};

struct NAggregate {
  long n = 0;
  int succeeded = 0;
  int failed = 0;
  Summary l1;
  Summary kl;
  Summary sup;
  Summary first_order;
  Summary lambda_abs_max;
  std::vector<GridPointStats> points;
  std::vector<double> chebyshev_bound;
  std::vector<double> chebyshev_exceedance;
  std::vector<double> band_bound;
  std::vector<double> band_coverage;
  std::vector<double> sigma2_g;
};

struct ExperimentResult {
  MaxentModel reference;
  Vector exact_d;
  Matrix D;
  Matrix sigma_h;
  std::vector<ReplicateRecord> records;
  std::vector<NAggregate> per_n;
  /// Log-log least-squares slopes of the medians against N.
  double l1_slope = 0.0;
  double kl_slope = 0.0;

  const ReplicateRecord& record(int n_index, int replicate) const;
};

/// Reference maxent fit to the exact moments of the true density.
MaxentModel fit_reference(const ExperimentConfig& config);

/// Monte Carlo over (N, replicate) cells, OpenMP-parallel across cells.
/// Output is bit-identical to run_replicates_serial.
ExperimentResult run_replicates(const ExperimentConfig& config);

/// Single-threaded reference implementation of run_replicates.
ExperimentResult run_replicates_serial(const ExperimentConfig& config);

/// Kolmogorov-Smirnov statistic of a sample against N(0, 1).
double ks_statistic_normal(std::vector<double> z);

struct NormalityCheck {
  double statistic = 0.0;
  double critical = 0.0;
  bool pass = false;
  bool skipped = false;
  int count = 0;
};

/// KS test of sqrt(N)(f_hat(x) - f*(x)) / sigma(x) against N(0,1) at the
/// grid point closest to x, for the N at n_index (-1 selects the largest N).
NormalityCheck clt_normality_check(const ExperimentResult& result,
                                   const ExperimentConfig& config, double x,
                                   int n_index = -1);

struct BoundCheck {
  long n = 0;
  std::string kind;  ///< "chebyshev" or "corollary"
  std::string label;
  double a = 0.0;
  double bound = 0.0;
  double empirical = 0.0;
  double tolerance = 0.0;
  bool respected = false;
};

struct BoundsReport {
  std::vector<BoundCheck> checks;
  bool all_respected = true;
};

/// Compares empirical exceedance / coverage frequencies against the
/// Chebyshev and functional-band bounds, allowing 3 binomial standard errors.
BoundsReport validate_bounds(const ExperimentResult& result,
                             const ExperimentConfig& config);

/// Least-squares slope of ln(y) against ln(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace maxent
