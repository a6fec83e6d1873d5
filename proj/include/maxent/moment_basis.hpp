#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "maxent/quadrature.hpp"

namespace maxent {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class BasisFamily { powers, exponentials, tabulated };

std::string to_string(BasisFamily family);

/// The constraint functions h_1..h_M. h_0 = 1 is implicit.
class MomentBasis {
 public:
  static MomentBasis powers(std::vector<int> exponents);
  static MomentBasis exponentials(std::vector<double> alphas);
  /// h_k given at abscissas `x` (strictly increasing), linearly interpolated.
  /// `values[k]` holds h_{k+1} at each abscissa.
  static MomentBasis tabulated(std::vector<double> x,
                               std::vector<std::vector<double>> values);

  BasisFamily family() const { return family_; }
  int size() const { return size_; }
  const std::vector<int>& exponents() const { return exponents_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& table_x() const { return table_x_; }
  const std::vector<std::vector<double>>& table_values() const { return table_values_; }

  /// h(x). Tabulated bases throw InputError outside their abscissa range.
  Vector eval(double x) const;
  void eval_into(double x, Eigen::Ref<Vector> out) const;

  /// Row i holds h(x_i).
  Matrix eval_many(std::span<const double> xs) const;

  bool operator==(const MomentBasis&) const = default;

 private:
  MomentBasis() = default;

  BasisFamily family_ = BasisFamily::powers;
  int size_ = 0;
  std::vector<int> exponents_;
  std::vector<double> alphas_;
  std::vector<double> table_x_;
  std::vector<std::vector<double>> table_values_;
};

/// Target moments d_1..d_M (d_0 = 1 is implicit).
struct MomentVector {
  Vector d;

  int size() const { return static_cast<int>(d.size()); }
  double operator[](int k) const { return d[k]; }
};

/// Necessary feasibility conditions that can be checked without solving.
/// Throws InfeasibleError with the violated condition.
void check_feasibility_screen(const MomentBasis& basis, const SupportSpec& support,
                              const MomentVector& d);

/// i.i.d. observations of X, all inside the support.
class SampleSet {
 public:
  /// Throws OutOfSupportError naming every offending row.
  SampleSet(std::vector<double> values, const SupportSpec& support,
            std::uint64_t seed = 0);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t seed() const { return seed_; }
  const SupportSpec& support() const { return support_; }

 private:
  std::vector<double> values_;
  SupportSpec support_;
  std::uint64_t seed_;
};

/// Sample mean of h over the observations.
MomentVector estimate_moments(const MomentBasis& basis, const SampleSet& sample);

/// Unbiased (1/(N-1)) sample covariance of h(X_n).
Matrix sample_covariance(const MomentBasis& basis, const SampleSet& sample);

}  // namespace maxent
