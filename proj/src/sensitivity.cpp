#include "maxent/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maxent/log.hpp"

namespace maxent {

namespace {

constexpr double kEigenFloor = 1e-12;

// |D| = C^{-1} = -D for the negative definite D produced by jacobian_D.
Matrix abs_D(const Matrix& D) { return -D; }

}  // namespace

Matrix jacobian_D(const MaxentModel& model) {
  const DualProblem dual(model.basis, model.rule);
  const Matrix c = dual.hessian(model.lambda);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  const Vector ev = eig.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || !(ev.minCoeff() > kEigenFloor * ev.maxCoeff())) {
    std::ostringstream os;
    os << "covariance of h under f* is not invertible; eigenvalues:";
    for (Eigen::Index i = 0; i < ev.size(); ++i) os << ' ' << ev[i];
    throw ConditioningError(os.str(), {ev.data(), ev.data() + ev.size()});
  }
  const Matrix& q = eig.eigenvectors();
  Matrix d = -(q * ev.cwiseInverse().asDiagonal() * q.transpose());
  return 0.5 * (d + d.transpose());
}

double perturb_density(const MaxentModel& model, const Matrix& D,
                       const Vector& delta_d, double x) {
  if (delta_d.size() != model.basis.size()) {
    throw InputError("perturb_density: delta_d has the wrong length");
  }
  const double rel = delta_d.norm() / std::max(model.target.d.norm(), 1e-300);
  if (rel > 0.1) {
    log::warn("perturb_density: ||delta_d|| is " + std::to_string(100.0 * rel) +
              "% of ||d||; first-order prediction may be poor");
  }
  const Vector h = model.basis.eval(x);
  return -model.density(x) * (h - model.target.d).dot(D * delta_d);
}

Vector perturb_density_nodes(const MaxentModel& model, const Matrix& D,
                             const Vector& delta_d) {
  const Matrix h = model.basis.eval_many(model.rule->nodes());
  const Vector f = model.density_at_nodes();
  const Vector dl = D * delta_d;
  const Vector proj = (h.rowwise() - model.target.d.transpose()) * dl;
  return -(f.array() * proj.array()).matrix();
}

Vector functional_coefficient(const MaxentModel& model, const BoundedFn& g) {
  const auto x = model.rule->nodes();
  const auto w = model.rule->weights();
  const Vector f = model.density_at_nodes();
  Vector hg = Vector::Zero(model.basis.size());
  double gint = 0.0;
  Vector h(model.basis.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wgf = w[i] * g(x[i]) * f[static_cast<Eigen::Index>(i)];
    model.basis.eval_into(x[i], h);
    hg += wgf * h;
    gint += wgf;
  }
  return hg - model.target.d * gint;
}

BoundPair functional_delta_bound(const MaxentModel& model, const Matrix& D,
                                 const BoundedFn& g, const Vector& delta_d) {
  const Vector u = functional_coefficient(model, g);
  // int g (f_hat - f*) dm = -<u, D delta_d> to first order.
  const double change = -u.dot(D * delta_d);
  const Matrix ad = abs_D(D);
  return {change * change, u.dot(ad * u) * std::abs(delta_d.dot(D * delta_d))};
}

double chebyshev_tail(const Matrix& sigma_h, const Matrix& D, long N, double a) {
  if (!(a > 0.0)) throw InputError("chebyshev_tail: a must be positive");
  if (N < 1) throw InputError("chebyshev_tail: N must be at least 1");
  return (abs_D(D) * sigma_h).trace() / (static_cast<double>(N) * a * a);
}

double corollary_band(const MaxentModel& model, const Matrix& D,
                      const Matrix& sigma_h, const BoundedFn& g, long N, double a) {
  const Vector u = functional_coefficient(model, g);
  const double bound = 1.0 - u.dot(abs_D(D) * u) * chebyshev_tail(sigma_h, D, N, a);
  return std::clamp(bound, 0.0, 1.0);
}

double clt_sigma2_x(const MaxentModel& model, const Matrix& D,
                    const Matrix& sigma_h, double x) {
  const Vector v = D * (model.basis.eval(x) - model.target.d);
  const double f = model.density(x);
  return std::max(0.0, f * f * v.dot(sigma_h * v));
}

double clt_sigma2_g(const MaxentModel& model, const Matrix& D,
                    const Matrix& sigma_h, const BoundedFn& g) {
  const Vector w = D * functional_coefficient(model, g);
  return std::max(0.0, w.dot(sigma_h * w));
}

SensitivityReport analyze_sensitivity(std::shared_ptr<const MaxentModel> model,
                                      const Matrix& sigma_h) {
  if (!model) throw InputError("analyze_sensitivity: null model");
  const int m = model->basis.size();
  if (sigma_h.rows() != m || sigma_h.cols() != m) {
    throw InputError("analyze_sensitivity: Sigma(h) has the wrong shape");
  }
  SensitivityReport r;
  r.C = DualProblem(model->basis, model->rule).hessian(model->lambda);
  r.D = jacobian_D(*model);
  r.sigma_h = sigma_h;
  const auto x = model->rule->nodes();
  r.sigma2_grid.resize(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.sigma2_grid[static_cast<Eigen::Index>(i)] = clt_sigma2_x(*model, r.D, sigma_h, x[i]);
  }
  r.model = std::move(model);
  return r;
}

std::vector<BandRow> clt_band(const SensitivityReport& report,
                              std::span<const double> xs, long N, double z) {
  if (N < 1) throw InputError("clt_band: N must be at least 1");
  std::vector<BandRow> rows;
  rows.reserve(xs.size());
  const double root_n = std::sqrt(static_cast<double>(N));
  for (double x : xs) {
    const double f = report.model->density(x);
    const double s2 = clt_sigma2_x(*report.model, report.D, report.sigma_h, x);
    const double half = z * std::sqrt(s2) / root_n;
    rows.push_back({x, f, s2, f - half, f + half});
  }
  return rows;
}

}  // namespace maxent
