#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "maxent/errors.hpp"

namespace maxent {

inline constexpr int kDefaultQuadPoints = 128;

enum class SupportKind { finite_interval, half_line };

/// Base measure m on the support. `exponential` is only meaningful on the
/// half-line, where it stands for m(dx) = exp(-(x - a) / scale) dx / scale.
enum class BaseMeasure { lebesgue, exponential };

/// The measure space (S, m) on which densities live.
struct SupportSpec {
  SupportKind kind = SupportKind::finite_interval;
  double a = 0.0;
  double b = 1.0;
  double halfline_scale = 1.0;
  BaseMeasure measure = BaseMeasure::lebesgue;

  static SupportSpec finite(double a, double b);
  static SupportSpec half_line(double a, double scale,
                               BaseMeasure measure = BaseMeasure::lebesgue);

  /// Throws ConfigError when the parameters do not describe a valid support.
  void validate() const;

  bool contains(double x) const;

  /// Upper endpoint, +inf on the half-line.
  double upper() const;

  /// Radon-Nikodym derivative dm/dx with respect to Lebesgue measure.
  double measure_density(double x) const;

  /// Total mass m(S).
  double total_mass() const;

  bool operator==(const SupportSpec&) const = default;
};

std::string to_string(SupportKind kind);
std::string to_string(BaseMeasure measure);

/// Gauss-Legendre rule on a support, with the base measure folded into the
/// weights so that integrate() realizes the integral against m.
class QuadratureRule {
 public:
  QuadratureRule(std::vector<double> nodes, std::vector<double> weights,
                 SupportSpec support);

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  const SupportSpec& support() const { return support_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  SupportSpec support_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

/// n-point rule on the support. Half-lines are mapped from t in (0, 1) by
/// x = a - scale * ln(1 - t).
QuadratureRule build_rule(const SupportSpec& support, int n = kDefaultQuadPoints);

/// Sum of w_i fn(x_i). Throws NumericError when fn is not finite at a node.
template <typename Fn>
double integrate(const QuadratureRule& rule, Fn&& fn) {
  const auto x = rule.nodes();
  const auto w = rule.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = fn(x[i]);
    if (!std::isfinite(v)) {
      throw NumericError("integrand is not finite at node x = " +
                             std::to_string(x[i]),
                         x[i]);
    }
    sum += w[i] * v;
  }
  return sum;
}

/// Weighted sum over values already tabulated at the rule's nodes.
double integrate_values(const QuadratureRule& rule, std::span<const double> values);

}  // namespace maxent
