#include "maxent/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maxent/log.hpp"

namespace maxent {

void SolverOptions::validate(int m) const {
  if (!(tol_grad > 0.0)) throw ConfigError("solver: tol_grad must be positive");
  if (max_iter < 1) throw ConfigError("solver: max_iter must be at least 1");
  if (!(ridge >= 0.0)) throw ConfigError("solver: ridge must be nonnegative");
  if (!(lambda_bound > 0.0)) throw ConfigError("solver: lambda_bound must be positive");
  if (initial_lambda && initial_lambda->size() != m) {
    throw ConfigError("solver: initial_lambda has the wrong length");
  }
}

DualProblem::DualProblem(MomentBasis basis, std::shared_ptr<const QuadratureRule> rule)
    : basis_(std::move(basis)), rule_(std::move(rule)) {
  if (!rule_) throw InputError("DualProblem: null quadrature rule");
  h_nodes_ = basis_.eval_many(rule_->nodes());
}

Vector DualProblem::shifted_weights(const Vector& lambda, double& shift) const {
  if (lambda.size() != basis_.size()) {
    throw InputError("lambda has length " + std::to_string(lambda.size()) +
                     ", basis has " + std::to_string(basis_.size()));
  }
  if (!lambda.allFinite()) throw InputError("lambda must be finite");
  Vector expo = -(h_nodes_ * lambda);
  shift = expo.maxCoeff();
  const auto w = rule_->weights();
  Vector u(expo.size());
  for (Eigen::Index i = 0; i < expo.size(); ++i) {
    u[i] = w[static_cast<std::size_t>(i)] * std::exp(expo[i] - shift);
  }
  return u;
}

PartitionValue DualProblem::partition(const Vector& lambda) const {
  double shift = 0.0;
  const Vector u = shifted_weights(lambda, shift);
  const double total = u.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("partition function integrand vanished on the grid",
                       rule_->nodes().front());
  }
  const double log_z = shift + std::log(total);
  return {std::exp(log_z), log_z};
}

double DualProblem::objective(const Vector& lambda, const Vector& d) const {
  return partition(lambda).log_z + lambda.dot(d);
}

DualProblem::Moments DualProblem::moments(const Vector& lambda) const {
  double shift = 0.0;
  const Vector u = shifted_weights(lambda, shift);
  const double total = u.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("partition function integrand vanished on the grid",
                       rule_->nodes().front());
  }
  const Vector p = u / total;
  Vector mu = h_nodes_.transpose() * p;
  Matrix centered = h_nodes_.rowwise() - mu.transpose();
  Matrix cov = centered.transpose() * p.asDiagonal() * centered;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {shift + std::log(total), std::move(mu), std::move(cov)};
}

Vector DualProblem::mean(const Vector& lambda) const {
  double shift = 0.0;
  const Vector u = shifted_weights(lambda, shift);
  return h_nodes_.transpose() * (u / u.sum());
}

Vector DualProblem::gradient(const Vector& lambda, const Vector& d) const {
  return d - mean(lambda);
}

Matrix DualProblem::hessian(const Vector& lambda) const {
  return moments(lambda).cov;
}

double MaxentModel::density(double x) const {
  return std::exp(-log_z - lambda.dot(basis.eval(x)));
}

double MaxentModel::lebesgue_density(double x) const {
  return density(x) * support.measure_density(x);
}

Vector MaxentModel::density_at_nodes() const {
  const Matrix h = basis.eval_many(rule->nodes());
  Vector expo = -(h * lambda);
  return (expo.array() - log_z).exp().matrix();
}

Vector MaxentModel::reproduced_moments() const {
  const Matrix h = basis.eval_many(rule->nodes());
  const Vector f = density_at_nodes();
  const auto w = rule->weights();
  Vector out = Vector::Zero(basis.size());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    out += w[static_cast<std::size_t>(i)] * f[i] * h.row(i).transpose();
  }
  return out;
}

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr double kEigenFloor = 1e-12;

std::string describe(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

}  // namespace

MaxentModel fit(const MomentVector& d, const MomentBasis& basis,
                std::shared_ptr<const QuadratureRule> rule,
                const SolverOptions& opts) {
  const int m = basis.size();
  opts.validate(m);
  if (!rule) throw InputError("fit: null quadrature rule");
  check_feasibility_screen(basis, rule->support(), d);

  const DualProblem dual(basis, rule);
  Vector lambda = opts.initial_lambda ? *opts.initial_lambda : Vector::Zero(m);

  auto moments = dual.moments(lambda);
  Vector grad = d.d - moments.mean;
  double grad_norm = grad.lpNorm<Eigen::Infinity>();
  int iter = 0;

  while (grad_norm > opts.tol_grad) {
    if (iter >= opts.max_iter) {
      std::ostringstream os;
      os << "solver did not converge in " << opts.max_iter
         << " iterations (||grad||_inf = " << grad_norm << ")";
      throw NonConvergenceError(os.str(), grad_norm, iter);
    }

    Matrix hess = moments.cov;
    if (opts.ridge > 0.0) hess.diagonal().array() += opts.ridge;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
    const Vector ev = eig.eigenvalues();
    const double ev_max = ev.maxCoeff();
    const double ev_min = ev.minCoeff();
    if (!(ev_max > 0.0) || !(ev_min > kEigenFloor * ev_max)) {
      // A Hessian that degenerates only after the multipliers have run off is
      // the density collapsing onto the boundary of the moment space.
      if (iter > 0 && lambda.norm() > std::sqrt(opts.lambda_bound)) {
        throw InfeasibleError("multipliers diverging (||lambda|| = " +
                              std::to_string(lambda.norm()) +
                              ") with a degenerate Hessian; moments " +
                              describe(d.d) + " appear infeasible");
      }
      std::vector<double> evs(ev.data(), ev.data() + ev.size());
      throw ConditioningError(
          "Hessian of ln Z is numerically singular at lambda = " + describe(lambda) +
              ", eigenvalues " + describe(ev) +
              "; reduce the number of moments or set a positive ridge",
          std::move(evs));
    }
    // Newton direction -H^{-1} grad, via the eigendecomposition already at hand.
    const Matrix& q = eig.eigenvectors();
    const Vector step = -(q * ((q.transpose() * grad).array() / ev.array()).matrix());

    const double f0 = moments.log_z + lambda.dot(d.d);
    const double slope = grad.dot(step);
    double t = 1.0;
    Vector trial;
    DualProblem::Moments trial_moments;
    bool accepted = false;
    while (t > 1e-12) {
      trial = lambda + t * step;
      trial_moments = dual.moments(trial);
      const double f1 = trial_moments.log_z + trial.dot(d.d);
      if (f1 <= f0 + kArmijoSlope * t * slope) {
        accepted = true;
        break;
      }
      // Near the optimum Sigma is flat to rounding; fall back to the gradient.
      if (std::abs(f1 - f0) <= 1e-13 * (1.0 + std::abs(f0)) &&
          (d.d - trial_moments.mean).lpNorm<Eigen::Infinity>() < grad_norm) {
        accepted = true;
        break;
      }
      t *= kBacktrack;
    }
    ++iter;
    if (!accepted) {
      std::ostringstream os;
      os << "line search stalled at iteration " << iter
         << " (||grad||_inf = " << grad_norm << ")";
      throw NonConvergenceError(os.str(), grad_norm, iter);
    }

    lambda = std::move(trial);
    moments = std::move(trial_moments);
    grad = d.d - moments.mean;
    grad_norm = grad.lpNorm<Eigen::Infinity>();

    if (lambda.norm() > opts.lambda_bound) {
      std::ostringstream os;
      os << "multipliers diverged (||lambda|| = " << lambda.norm()
         << " > " << opts.lambda_bound << "); moments " << describe(d.d)
         << " appear infeasible";
      throw InfeasibleError(os.str());
    }
    log::debug("newton iter " + std::to_string(iter) +
               " grad_norm=" + std::to_string(grad_norm));
  }

  MaxentModel model{basis,     rule->support(), rule,     lambda, moments.log_z,
                    d,         true,            iter,     grad_norm};
  return model;
}

MaxentModel fit(const MomentVector& d, const MomentBasis& basis,
                const SupportSpec& support, const SolverOptions& opts,
                int quad_points) {
  auto rule = std::make_shared<const QuadratureRule>(build_rule(support, quad_points));
  return fit(d, basis, std::move(rule), opts);
}

double entropy_primal(const MaxentModel& model) {
  const Vector f = model.density_at_nodes();
  const auto w = model.rule->weights();
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f[i] > 1e-300) s -= w[static_cast<std::size_t>(i)] * f[i] * std::log(f[i]);
  }
  return s;
}

double duality_gap(const MaxentModel& model) {
  return std::abs(entropy_primal(model) -
                  (model.log_z + model.lambda.dot(model.target.d)));
}

}  // namespace maxent
