#include "maxent/divergence.hpp"

#include <cmath>

namespace maxent {

namespace {

void require_same_grid(const GridDensity& f, const GridDensity& g) {
  if (f.rule_ptr() != g.rule_ptr() && (f.rule().size() != g.rule().size() ||
                                       f.rule().support() != g.rule().support())) {
    throw InputError("densities are tabulated on different grids");
  }
}

}  // namespace

GridDensity::GridDensity(std::shared_ptr<const QuadratureRule> rule, Vector values,
                         bool normalize)
    : rule_(std::move(rule)), values_(std::move(values)) {
  if (!rule_) throw InputError("GridDensity: null quadrature rule");
  if (static_cast<std::size_t>(values_.size()) != rule_->size()) {
    throw InputError("GridDensity: one value per quadrature node required");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
      throw InputError("GridDensity: values must be finite and nonnegative");
    }
  }
  if (normalize) {
    const double total = mass();
    if (!(total > 0.0)) throw InputError("GridDensity: cannot normalize zero mass");
    values_ /= total;
  }
}

GridDensity GridDensity::from_model(const MaxentModel& model) {
  return GridDensity(model.rule, model.density_at_nodes());
}

double GridDensity::mass() const {
  return integrate_values(*rule_, {values_.data(), static_cast<std::size_t>(values_.size())});
}

double shannon_entropy(const GridDensity& f) {
  const auto w = f.rule().weights();
  const Vector& v = f.values();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] >= kZeroDensity) s -= w[static_cast<std::size_t>(i)] * v[i] * std::log(v[i]);
  }
  return s;
}

double extended_entropy(const GridDensity& f) {
  return shannon_entropy(f) + (f.mass() - 1.0);
}

double kl_divergence(const GridDensity& f, const GridDensity& g) {
  require_same_grid(f, g);
  const auto w = f.rule().weights();
  const auto x = f.rule().nodes();
  const Vector& fv = f.values();
  const Vector& gv = g.values();
  double k = 0.0;
  for (Eigen::Index i = 0; i < fv.size(); ++i) {
    if (fv[i] < kZeroDensity) continue;
    if (!(gv[i] > 0.0)) {
      throw SupportMismatchError("kl_divergence: f > 0 where g = 0 at x = " +
                                 std::to_string(x[static_cast<std::size_t>(i)]));
    }
    k += w[static_cast<std::size_t>(i)] * fv[i] * std::log(fv[i] / gv[i]);
  }
  return k;
}

double l1_distance(const GridDensity& f, const GridDensity& g) {
  require_same_grid(f, g);
  const auto w = f.rule().weights();
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.values().size(); ++i) {
    s += w[static_cast<std::size_t>(i)] * std::abs(f.values()[i] - g.values()[i]);
  }
  return s;
}

PinskerGap pinsker_gap(const GridDensity& f, const GridDensity& g) {
  const double l1 = l1_distance(f, g);
  return {0.25 * l1 * l1, kl_divergence(f, g)};
}

double dual_form_divergence(const MaxentModel& model_hat,
                            const MaxentModel& model_star) {
  if (!(model_hat.basis == model_star.basis) ||
      model_hat.support != model_star.support) {
    throw InputError("dual_form_divergence: models must share basis and support");
  }
  const Vector& d_hat = model_hat.target.d;
  // The ln Z terms carry the sign that makes this equal int f_hat ln(f_hat/f*).
  return model_star.lambda.dot(d_hat) - model_hat.lambda.dot(d_hat) +
         model_star.log_z - model_hat.log_z;
}

}  // namespace maxent
