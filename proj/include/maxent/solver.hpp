#pragma once

#include <memory>
#include <optional>

#include "maxent/moment_basis.hpp"
#include "maxent/quadrature.hpp"

namespace maxent {

struct SolverOptions {
  double tol_grad = 1e-10;
  int max_iter = 200;
  std::optional<Vector> initial_lambda;
  double ridge = 0.0;
  /// Iterates with ||lambda|| above this are treated as divergence.
  double lambda_bound = 1e6;

  void validate(int m) const;
};

struct PartitionValue {
  double z;
  double log_z;
};

/// The dual entropy Sigma(lambda, d) = ln Z(lambda) + <lambda, d> and its
/// derivatives, evaluated on a fixed quadrature grid.
///
/// ln Z is computed with a max-exponent shift so that no exponential
/// overflows regardless of ||lambda||.
class DualProblem {
 public:
  DualProblem(MomentBasis basis, std::shared_ptr<const QuadratureRule> rule);

  const MomentBasis& basis() const { return basis_; }
  const QuadratureRule& rule() const { return *rule_; }
  std::shared_ptr<const QuadratureRule> rule_ptr() const { return rule_; }
  /// h evaluated at the quadrature nodes, one row per node.
  const Matrix& basis_at_nodes() const { return h_nodes_; }

  PartitionValue partition(const Vector& lambda) const;
  double objective(const Vector& lambda, const Vector& d) const;
  /// d - E_lambda[h]
  Vector gradient(const Vector& lambda, const Vector& d) const;
  /// Covariance of h under f_lambda.
  Matrix hessian(const Vector& lambda) const;
  /// E_lambda[h]
  Vector mean(const Vector& lambda) const;

  struct Moments {
    double log_z;
    Vector mean;
    Matrix cov;
  };
  /// ln Z, E[h] and Cov[h] from a single pass over the nodes.
  Moments moments(const Vector& lambda) const;

 private:
  // Shifted weights w_i exp(-<lambda, h_i> - s) and the shift s.
  Vector shifted_weights(const Vector& lambda, double& shift) const;

  MomentBasis basis_;
  std::shared_ptr<const QuadratureRule> rule_;
  Matrix h_nodes_;
};

/// The maximum entropy density f*(x) = exp(-log_z - <lambda, h(x)>) with
/// respect to the base measure of its support.
struct MaxentModel {
  MomentBasis basis;
  SupportSpec support;
  std::shared_ptr<const QuadratureRule> rule;
  Vector lambda;
  double log_z = 0.0;
  MomentVector target;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;

  /// Density with respect to the base measure m.
  double density(double x) const;
  /// Density with respect to Lebesgue measure (differs only for an
  /// exponential base measure).
  double lebesgue_density(double x) const;
  /// f* at the rule's nodes.
  Vector density_at_nodes() const;
  /// Moments of h under f*, by quadrature.
  Vector reproduced_moments() const;
};

/// Newton minimization of the dual entropy with Armijo backtracking.
///
/// Throws InfeasibleError when the screen rejects d or the iterates diverge,
/// NonConvergenceError when max_iter is exhausted, and ConditioningError when
/// the Hessian is numerically singular and no ridge was requested.
MaxentModel fit(const MomentVector& d, const MomentBasis& basis,
                std::shared_ptr<const QuadratureRule> rule,
                const SolverOptions& opts = {});

MaxentModel fit(const MomentVector& d, const MomentBasis& basis,
                const SupportSpec& support, const SolverOptions& opts = {},
                int quad_points = kDefaultQuadPoints);

/// -int f* ln f* dm by quadrature.
double entropy_primal(const MaxentModel& model);

/// |entropy_primal - (ln Z(lambda*) + <lambda*, d>)|
double duality_gap(const MaxentModel& model);

}  // namespace maxent
