#pragma once

#include <memory>
#include <utility>

#include "maxent/solver.hpp"

namespace maxent {

/// A density tabulated at the nodes of a quadrature rule.
class GridDensity {
 public:
  /// Values must be nonnegative. With `normalize`, they are rescaled to unit
  /// mass; otherwise they are stored as given.
  GridDensity(std::shared_ptr<const QuadratureRule> rule, Vector values,
              bool normalize = false);

  static GridDensity from_model(const MaxentModel& model);

  const QuadratureRule& rule() const { return *rule_; }
  std::shared_ptr<const QuadratureRule> rule_ptr() const { return rule_; }
  const Vector& values() const { return values_; }
  double mass() const;

 private:
  std::shared_ptr<const QuadratureRule> rule_;
  Vector values_;
};

inline constexpr double kZeroDensity = 1e-300;

/// -int f ln f dm, with 0 ln 0 = 0.
double shannon_entropy(const GridDensity& f);

/// -int f ln f dm + (int f dm - 1), for unnormalized f >= 0.
double extended_entropy(const GridDensity& f);

/// K(f, g) = int f ln(f / g) dm. Throws SupportMismatchError when f > 0
/// at a node where g vanishes.
double kl_divergence(const GridDensity& f, const GridDensity& g);

/// int |f - g| dm
double l1_distance(const GridDensity& f, const GridDensity& g);

struct PinskerGap {
  double lhs;  ///< (1/4) ||f - g||_1^2
  double rhs;  ///< K(f, g)
};

PinskerGap pinsker_gap(const GridDensity& f, const GridDensity& g);

/// K(f_hat, f_star) from the multipliers alone:
///   <lambda*, d_hat> - <lambda_hat, d_hat> + ln Z(lambda*) - ln Z(lambda_hat).
double dual_form_divergence(const MaxentModel& model_hat,
                            const MaxentModel& model_star);

}  // namespace maxent
