#include "maxent/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace maxent {

std::string to_string(TrueDensityKind kind) {
  switch (kind) {
    case TrueDensityKind::uniform: return "uniform";
    case TrueDensityKind::truncated_exponential: return "truncated_exponential";
    case TrueDensityKind::unit_exponential: return "unit_exponential";
    case TrueDensityKind::grid_tabulated: return "grid_tabulated";
  }
  return "unknown";
}

namespace {

constexpr double kMinAcceptance = 1e-3;

void require_finite(const SupportSpec& support, const char* what) {
  support.validate();
  if (support.kind != SupportKind::finite_interval) {
    throw ConfigError(std::string("true_density: ") + what +
                      " requires a finite_interval support");
  }
}

}  // namespace

TrueDensity TrueDensity::uniform(const SupportSpec& support) {
  require_finite(support, "uniform");
  TrueDensity t;
  t.kind_ = TrueDensityKind::uniform;
  t.support_ = support;
  return t;
}

TrueDensity TrueDensity::truncated_exponential(const SupportSpec& support, double rate) {
  require_finite(support, "truncated_exponential");
  if (!(rate != 0.0) || !std::isfinite(rate)) {
    throw ConfigError("true_density: rate must be finite and nonzero");
  }
  TrueDensity t;
  t.kind_ = TrueDensityKind::truncated_exponential;
  t.support_ = support;
  t.rate_ = rate;
  t.trunc_mass_ = -std::expm1(-rate * (support.b - support.a));
  return t;
}

TrueDensity TrueDensity::unit_exponential(const SupportSpec& support) {
  support.validate();
  if (support.kind != SupportKind::half_line) {
    throw ConfigError("true_density: unit_exponential requires a half_line support");
  }
  TrueDensity t;
  t.kind_ = TrueDensityKind::unit_exponential;
  t.support_ = support;
  return t;
}

TrueDensity TrueDensity::grid_tabulated(const SupportSpec& support, std::vector<double> x,
                                        std::vector<double> values) {
  support.validate();
  if (x.size() < 2 || x.size() != values.size()) {
    throw ConfigError("true_density: grid_tabulated needs matching x and values, length >= 2");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw ConfigError("true_density: grid_tabulated abscissas must be strictly increasing");
    }
    if (!support.contains(x[i])) {
      throw ConfigError("true_density: grid_tabulated abscissa outside the support");
    }
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw ConfigError("true_density: grid_tabulated values must be finite and nonnegative");
    }
  }
  double mass = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    mass += 0.5 * (values[i] + values[i - 1]) * (x[i] - x[i - 1]);
  }
  if (!(mass > 0.0)) throw ConfigError("true_density: grid_tabulated has zero mass");
  for (double& v : values) v /= mass;

  TrueDensity t;
  t.kind_ = TrueDensityKind::grid_tabulated;
  t.support_ = support;
  t.table_x_ = std::move(x);
  t.table_values_ = std::move(values);
  t.table_max_ = *std::max_element(t.table_values_.begin(), t.table_values_.end());
  if (t.acceptance_rate() < kMinAcceptance) {
    throw EnvelopeError("true_density: rejection acceptance rate " +
                        std::to_string(t.acceptance_rate()) + " is below 1e-3");
  }
  return t;
}

double TrueDensity::acceptance_rate() const {
  if (kind_ != TrueDensityKind::grid_tabulated) return 1.0;
  return 1.0 / ((table_x_.back() - table_x_.front()) * table_max_);
}

double TrueDensity::pdf(double x) const {
  if (!support_.contains(x)) return 0.0;
  switch (kind_) {
    case TrueDensityKind::uniform:
      return 1.0 / (support_.b - support_.a);
    case TrueDensityKind::truncated_exponential:
      return rate_ * std::exp(-rate_ * (x - support_.a)) / trunc_mass_;
    case TrueDensityKind::unit_exponential:
      return std::exp(-(x - support_.a));
    case TrueDensityKind::grid_tabulated: {
      if (x < table_x_.front() || x > table_x_.back()) return 0.0;
      auto it = std::upper_bound(table_x_.begin(), table_x_.end(), x);
      std::size_t hi = static_cast<std::size_t>(it - table_x_.begin());
      if (hi >= table_x_.size()) hi = table_x_.size() - 1;
      const std::size_t lo = hi - 1;
      const double t = (x - table_x_[lo]) / (table_x_[hi] - table_x_[lo]);
      return (1.0 - t) * table_values_[lo] + t * table_values_[hi];
    }
  }
  return 0.0;
}

double TrueDensity::draw_one(Rng& rng) const {
  switch (kind_) {
    case TrueDensityKind::uniform:
      return support_.a + (support_.b - support_.a) * rng.uniform();
    case TrueDensityKind::truncated_exponential: {
      const double u = rng.uniform();
      const double x = support_.a - std::log1p(-u * trunc_mass_) / rate_;
      return std::clamp(x, support_.a, support_.b);
    }
    case TrueDensityKind::unit_exponential:
      return support_.a - std::log1p(-rng.uniform());
    case TrueDensityKind::grid_tabulated: {
      const double lo = table_x_.front();
      const double width = table_x_.back() - lo;
      for (;;) {
        const double x = lo + width * rng.uniform();
        if (rng.uniform() * table_max_ < pdf(x)) return x;
      }
    }
  }
  return support_.a;
}

SampleSet TrueDensity::draw(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw InputError("draw_sample: N must be at least 1");
  Rng rng(seed);
  std::vector<double> values(n);
  for (double& v : values) v = draw_one(rng);
  return SampleSet(std::move(values), support_, seed);
}

void TrueDensity::lebesgue_rule(int n, std::vector<double>& x,
                                std::vector<double>& w) const {
  x.clear();
  w.clear();
  switch (kind_) {
    case TrueDensityKind::uniform:
    case TrueDensityKind::truncated_exponential: {
      const QuadratureRule r = build_rule(SupportSpec::finite(support_.a, support_.b), n);
      x.assign(r.nodes().begin(), r.nodes().end());
      w.assign(r.weights().begin(), r.weights().end());
      break;
    }
    case TrueDensityKind::unit_exponential: {
      // Unit decay scale matches the density, so h * pdf is smooth in t.
      const QuadratureRule r = build_rule(SupportSpec::half_line(support_.a, 1.0), n);
      x.assign(r.nodes().begin(), r.nodes().end());
      w.assign(r.weights().begin(), r.weights().end());
      break;
    }
    case TrueDensityKind::grid_tabulated: {
      // The density is linear between knots; integrate each piece separately.
      const int per = std::max(4, n / static_cast<int>(table_x_.size() - 1));
      std::vector<double> t;
      std::vector<double> tw;
      gauss_legendre(per, t, tw);
      for (std::size_t s = 1; s < table_x_.size(); ++s) {
        const double half = 0.5 * (table_x_[s] - table_x_[s - 1]);
        const double mid = 0.5 * (table_x_[s] + table_x_[s - 1]);
        for (std::size_t i = 0; i < t.size(); ++i) {
          x.push_back(mid + half * t[i]);
          w.push_back(half * tw[i]);
        }
      }
      break;
    }
  }
}

Vector TrueDensity::exact_moments(const MomentBasis& basis, int quad_points) const {
  std::vector<double> x;
  std::vector<double> w;
  lebesgue_rule(quad_points, x, w);
  Vector sum = Vector::Zero(basis.size());
  Vector h(basis.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    basis.eval_into(x[i], h);
    sum += w[i] * pdf(x[i]) * h;
  }
  return sum;
}

Matrix TrueDensity::exact_covariance(const MomentBasis& basis, int quad_points) const {
  std::vector<double> x;
  std::vector<double> w;
  lebesgue_rule(quad_points, x, w);
  const Vector mean = exact_moments(basis, quad_points);
  Matrix cov = Matrix::Zero(basis.size(), basis.size());
  Vector h(basis.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    basis.eval_into(x[i], h);
    h -= mean;
    cov += w[i] * pdf(x[i]) * h * h.transpose();
  }
  return 0.5 * (cov + cov.transpose());
}

}  // namespace maxent
