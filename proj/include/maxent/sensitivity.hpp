#pragma once

#include <functional>

#include "maxent/solver.hpp"

namespace maxent {

/// A bounded measurable function g on the support.
using BoundedFn = std::function<double(double)>;

/// Jacobian of lambda*(d): D = -C^{-1}, with C the covariance of h under f*.
/// Throws ConditioningError when C is numerically singular.
Matrix jacobian_D(const MaxentModel& model);

/// First-order change f_hat*(x) - f*(x) = -f*(x) <h(x) - d, D delta_d>.
double perturb_density(const MaxentModel& model, const Matrix& D,
                       const Vector& delta_d, double x);

/// Same prediction at every quadrature node.
Vector perturb_density_nodes(const MaxentModel& model, const Matrix& D,
                             const Vector& delta_d);

/// u(g) = int h g f* dm - d int g f* dm.
Vector functional_coefficient(const MaxentModel& model, const BoundedFn& g);

struct BoundPair {
  double lhs;
  double rhs;
};

/// lhs = (int g (f_hat* - f*) dm)^2 with the first-order f_hat*;
/// rhs = <u, |D| u> |<delta_d, D delta_d>|.
BoundPair functional_delta_bound(const MaxentModel& model, const Matrix& D,
                                 const BoundedFn& g, const Vector& delta_d);

/// Chebyshev bound on P(|| |D|^{1/2} (d_hat - d) || > a) = tr(|D| Sigma_h) / (N a^2).
double chebyshev_tail(const Matrix& sigma_h, const Matrix& D, long N, double a);

/// Lower bound on P(|int g f_hat* - int g f*| <= a), clipped to [0, 1].
double corollary_band(const MaxentModel& model, const Matrix& D,
                      const Matrix& sigma_h, const BoundedFn& g, long N, double a);

/// Asymptotic variance of sqrt(N) (f_hat*(x) - f*(x)).
double clt_sigma2_x(const MaxentModel& model, const Matrix& D,
                    const Matrix& sigma_h, double x);

/// Asymptotic variance of sqrt(N) (int g f_hat* - int g f*).
double clt_sigma2_g(const MaxentModel& model, const Matrix& D,
                    const Matrix& sigma_h, const BoundedFn& g);

struct SensitivityReport {
  Matrix C;
  Matrix D;
  Matrix sigma_h;
  /// sigma^2(x) at the model's quadrature nodes.
  Vector sigma2_grid;
  std::shared_ptr<const MaxentModel> model;
};

SensitivityReport analyze_sensitivity(std::shared_ptr<const MaxentModel> model,
                                      const Matrix& sigma_h);

struct BandRow {
  double x;
  double f_star;
  double sigma2;
  double lo;
  double hi;
};

/// f* +- z sigma(x) / sqrt(N) on the given abscissas (densities w.r.t. m).
std::vector<BandRow> clt_band(const SensitivityReport& report,
                              std::span<const double> xs, long N, double z = 1.96);

}  // namespace maxent
