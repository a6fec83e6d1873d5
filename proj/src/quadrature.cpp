#include "maxent/quadrature.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace maxent {

SupportSpec SupportSpec::finite(double a, double b) {
  SupportSpec s;
  s.kind = SupportKind::finite_interval;
  s.a = a;
  s.b = b;
  s.validate();
  return s;
}

SupportSpec SupportSpec::half_line(double a, double scale, BaseMeasure measure) {
  SupportSpec s;
  s.kind = SupportKind::half_line;
  s.a = a;
  s.b = std::numeric_limits<double>::infinity();
  s.halfline_scale = scale;
  s.measure = measure;
  s.validate();
  return s;
}

void SupportSpec::validate() const {
  if (!std::isfinite(a)) {
    throw ConfigError("support: lower endpoint a must be finite");
  }
  if (kind == SupportKind::finite_interval) {
    if (!std::isfinite(b) || !(a < b)) {
      throw ConfigError("support: finite_interval requires finite a < b");
    }
    if (measure != BaseMeasure::lebesgue) {
      throw ConfigError("support: exponential base measure requires half_line");
    }
  } else {
    if (!(halfline_scale > 0.0) || !std::isfinite(halfline_scale)) {
      throw ConfigError("support: half_line requires halfline_scale > 0");
    }
  }
}

bool SupportSpec::contains(double x) const {
  if (!std::isfinite(x) || x < a) return false;
  return kind == SupportKind::half_line || x <= b;
}

double SupportSpec::upper() const {
  return kind == SupportKind::finite_interval
             ? b
             : std::numeric_limits<double>::infinity();
}

double SupportSpec::measure_density(double x) const {
  if (measure == BaseMeasure::lebesgue) return 1.0;
  return std::exp(-(x - a) / halfline_scale) / halfline_scale;
}

double SupportSpec::total_mass() const {
  if (kind == SupportKind::finite_interval) return b - a;
  return measure == BaseMeasure::exponential
             ? 1.0
             : std::numeric_limits<double>::infinity();
}

std::string to_string(SupportKind kind) {
  return kind == SupportKind::finite_interval ? "finite_interval" : "half_line";
}

std::string to_string(BaseMeasure measure) {
  return measure == BaseMeasure::lebesgue ? "lebesgue" : "exponential";
}

QuadratureRule::QuadratureRule(std::vector<double> nodes,
                               std::vector<double> weights, SupportSpec support)
    : nodes_(std::move(nodes)),
      weights_(std::move(weights)),
      support_(support) {
  if (nodes_.size() != weights_.size() || nodes_.empty()) {
    throw InputError("quadrature rule: nodes and weights must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(weights_[i] > 0.0)) {
      throw InputError("quadrature rule: weights must be strictly positive");
    }
    if (!support_.contains(nodes_[i])) {
      throw InputError("quadrature rule: node outside support");
    }
  }
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    long double z = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) /
                             (n + 0.5L));
    long double dp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p0 = 1.0L;
      long double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2.0L * k - 1.0L) * z * p1 - (k - 1.0L) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(z), p0 = P_{n-1}(z)
      dp = n * (z * p1 - p0) / (z * z - 1.0L);
      const long double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-19L) break;
    }
    const long double w = 2.0L / ((1.0L - z * z) * dp * dp);
    nodes[static_cast<std::size_t>(i)] = static_cast<double>(-z);
    nodes[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(z);
    weights[static_cast<std::size_t>(i)] = static_cast<double>(w);
    weights[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(w);
  }
  if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

QuadratureRule build_rule(const SupportSpec& support, int n) {
  support.validate();
  if (n < 2) throw ConfigError("quadrature: n must be at least 2");

  std::vector<double> t;
  std::vector<double> w;
  gauss_legendre(n, t, w);

  std::vector<double> x(t.size());
  std::vector<double> wx(t.size());
  if (support.kind == SupportKind::finite_interval) {
    const double half = 0.5 * (support.b - support.a);
    const double mid = 0.5 * (support.a + support.b);
    for (std::size_t i = 0; i < t.size(); ++i) {
      x[i] = mid + half * t[i];
      wx[i] = half * w[i];
    }
  } else {
    const double s = support.halfline_scale;
    for (std::size_t i = 0; i < t.size(); ++i) {
      // 1 - u computed as (1 - t)/2 keeps precision for u near 1.
      const double one_minus_u = 0.5 * (1.0 - t[i]);
      x[i] = support.a - s * std::log(one_minus_u);
      const double wu = 0.5 * w[i];
      wx[i] = support.measure == BaseMeasure::exponential ? wu
                                                          : wu * s / one_minus_u;
    }
  }
  return QuadratureRule(std::move(x), std::move(wx), support);
}

double integrate_values(const QuadratureRule& rule,
                        std::span<const double> values) {
  if (values.size() != rule.size()) {
    throw InputError("integrate_values: value count does not match rule size");
  }
  const auto w = rule.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += w[i] * values[i];
  return sum;
}

}  // namespace maxent
