#include <doctest.h>

#include <cmath>
#include <random>

#include "maxent/divergence.hpp"
#include "maxent/solver.hpp"

using namespace maxent;

namespace {

const SupportSpec kUnit = SupportSpec::finite(0.0, 1.0);
const SupportSpec kLaplace = SupportSpec::half_line(0.0, 1.0, BaseMeasure::exponential);

std::shared_ptr<const QuadratureRule> rule_for(const SupportSpec& s, int n = kDefaultQuadPoints) {
  return std::make_shared<const QuadratureRule>(build_rule(s, n));
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Mean of the density proportional to e^{-lambda x} on [0,1], minus target.
double mean_residual(double lambda, double target) {
  return 1.0 / lambda - 1.0 / std::expm1(lambda) - target;
}

// Bisection oracle for the scalar multiplier matching mean `target` on [0,1].
double bisect_lambda(double target) {
  double lo = 1e-9;
  double hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    // The mean decreases in lambda.
    if (mean_residual(mid, target) > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Family {
  const char* name;
  MomentBasis basis;
  SupportSpec support;
  double lambda_scale;
};

std::vector<Family> families() {
  return {
      {"powers", MomentBasis::powers({1, 2, 3}), kUnit, 2.0},
      {"exponentials", MomentBasis::exponentials({0.5, 1.0, 2.0}), kLaplace, 1.0},
      {"tabulated",
       MomentBasis::tabulated({0.0, 0.25, 0.5, 0.75, 1.0},
                              {{0.0, 1.0, 0.0, -1.0, 0.0}, {1.0, 0.5, 0.0, 0.5, 1.0}}),
       kUnit, 2.0},
  };
}

}  // namespace

TEST_CASE("partition_function examples") {
  const DualProblem dual(MomentBasis::powers({1}), rule_for(kUnit));
  auto p0 = dual.partition(vec({0.0}));
  CHECK(p0.z == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(p0.log_z) < 1e-14);
  CHECK(dual.partition(vec({1.0})).z == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
  CHECK(dual.partition(vec({-1.0})).z == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("partition_function survives huge multipliers") {
  const DualProblem dual(MomentBasis::powers({1}), rule_for(kUnit));
  const auto p = dual.partition(vec({-5000.0}));
  CHECK(std::isfinite(p.log_z));
  // ln int_0^1 e^{5000 x} dx ~ 5000 - ln 5000
  CHECK(p.log_z == doctest::Approx(5000.0 - std::log(5000.0)).epsilon(1e-6));
  CHECK_THROWS_AS(dual.partition(vec({std::nan("")})), InputError);
}

TEST_CASE("dual_objective examples") {
  const DualProblem dual(MomentBasis::powers({1}), rule_for(kUnit));
  CHECK(std::abs(dual.objective(vec({0.0}), vec({0.7}))) < 1e-14);
  CHECK(dual.objective(vec({1.0}), vec({0.5})) ==
        doctest::Approx(std::log(1.0 - std::exp(-1.0)) + 0.5).epsilon(1e-12));
  CHECK(dual.objective(vec({1.0}), vec({0.5})) == doctest::Approx(0.0413249).epsilon(1e-6));
  CHECK(dual.objective(vec({1.0}), vec({0.3})) == doctest::Approx(-0.1586751).epsilon(1e-6));
}

TEST_CASE("dual_gradient and dual_hessian examples") {
  const DualProblem d1(MomentBasis::powers({1}), rule_for(kUnit));
  CHECK(std::abs(d1.gradient(vec({0.0}), vec({0.5}))[0]) < 1e-14);
  CHECK(d1.gradient(vec({0.0}), vec({0.3}))[0] == doctest::Approx(-0.2).epsilon(1e-13));
  CHECK(d1.hessian(vec({0.0}))(0, 0) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));

  const DualProblem d2(MomentBasis::powers({1, 2}), rule_for(kUnit));
  const Matrix c = d2.hessian(vec({0.0, 0.0}));
  CHECK(c(0, 0) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
  CHECK(c(0, 1) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
  CHECK(c(1, 0) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
  CHECK(c(1, 1) == doctest::Approx(4.0 / 45.0).epsilon(1e-13));
}

TEST_CASE("property: gradient and Hessian match central finite differences") {
  std::mt19937_64 rng(2024);
  for (const auto& fam : families()) {
    CAPTURE(std::string(fam.name));
    const DualProblem dual(fam.basis, rule_for(fam.support));
    const int m = fam.basis.size();
    std::uniform_real_distribution<double> lam(-fam.lambda_scale, fam.lambda_scale);
    std::uniform_real_distribution<double> dd(0.1, 0.9);
    for (int trial = 0; trial < 50; ++trial) {
      Vector l(m);
      Vector d(m);
      for (int k = 0; k < m; ++k) {
        l[k] = lam(rng);
        d[k] = dd(rng);
      }
      const double h = 1e-6;
      const Vector g = dual.gradient(l, d);
      const Matrix hess = dual.hessian(l);
      Matrix fd_hess(m, m);
      for (int k = 0; k < m; ++k) {
        Vector lp = l;
        Vector lm = l;
        lp[k] += h;
        lm[k] -= h;
        const double fd = (dual.objective(lp, d) - dual.objective(lm, d)) / (2.0 * h);
        CHECK(std::abs(fd - g[k]) < 1e-6);
        fd_hess.col(k) = (dual.gradient(lp, d) - dual.gradient(lm, d)) / (2.0 * h);
      }
      // dE[h]/dlambda = -C, so the gradient d - E[h] has Jacobian C.
      CHECK((hess - fd_hess).lpNorm<Eigen::Infinity>() < 1e-5);
      CHECK((hess - hess.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-14);
    }
  }
}

TEST_CASE("property: dual objective is midpoint convex along random segments") {
  std::mt19937_64 rng(77);
  for (const auto& fam : families()) {
    CAPTURE(std::string(fam.name));
    const DualProblem dual(fam.basis, rule_for(fam.support));
    const int m = fam.basis.size();
    std::uniform_real_distribution<double> lam(-3.0 * fam.lambda_scale, 3.0 * fam.lambda_scale);
    const Vector d = Vector::Constant(m, 0.4);
    for (int trial = 0; trial < 20; ++trial) {
      Vector a(m);
      Vector b(m);
      for (int k = 0; k < m; ++k) {
        a[k] = lam(rng);
        b[k] = lam(rng);
      }
      const double mid = dual.objective(0.5 * (a + b), d);
      const double avg = 0.5 * (dual.objective(a, d) + dual.objective(b, d));
      CHECK(mid <= avg + 1e-10);
    }
  }
}

TEST_CASE("fit: uniform target gives zero multipliers") {
  const auto model = fit(MomentVector{vec({0.5})}, MomentBasis::powers({1}), kUnit);
  CHECK(model.converged);
  CHECK(std::abs(model.lambda[0]) < 1e-10);
  CHECK(std::abs(model.log_z) < 1e-10);
  for (double x : {0.0, 0.3, 1.0}) CHECK(model.density(x) == doctest::Approx(1.0));
  CHECK(entropy_primal(model) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(duality_gap(model) < 1e-12);
}

TEST_CASE("fit: d = 0.3 matches the bisection oracle") {
  const double oracle = bisect_lambda(0.3);
  CHECK(oracle == doctest::Approx(2.66).epsilon(0.01));
  const auto model = fit(MomentVector{vec({0.3})}, MomentBasis::powers({1}), kUnit);
  CHECK(model.converged);
  CHECK(std::abs(model.lambda[0] - oracle) < 1e-6);
  CHECK(std::abs(model.reproduced_moments()[0] - 0.3) <= 10.0 * 1e-10);
  CHECK(duality_gap(model) <= 1e-8);
}

TEST_CASE("fit: Laplace moments of the unit exponential") {
  const Vector d = vec({2.0 / 3.0, 0.5, 1.0 / 3.0});
  const auto model = fit(MomentVector{d}, MomentBasis::exponentials({0.5, 1.0, 2.0}), kLaplace);
  CHECK(model.converged);
  CHECK((model.reproduced_moments() - d).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(duality_gap(model) <= 1e-7);
  // exp(-x) is in the family for this base measure; the residual is the
  // quadrature error on the sqrt(y) endpoint singularity.
  for (double x : {0.0, 1.0, 4.0}) {
    CHECK(model.lebesgue_density(x) == doctest::Approx(std::exp(-x)).epsilon(1e-5));
  }
}

TEST_CASE("fit: Laplace moments of a gamma(2,1) law are reproduced") {
  // E[e^{-a X}] = 1/(1+a)^2 for X ~ Gamma(2, 1).
  Vector d(3);
  const std::vector<double> alphas{0.5, 1.0, 2.0};
  for (int k = 0; k < 3; ++k) d[k] = 1.0 / std::pow(1.0 + alphas[static_cast<std::size_t>(k)], 2);
  const auto model = fit(MomentVector{d}, MomentBasis::exponentials(alphas), kLaplace);
  CHECK((model.reproduced_moments() - d).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(duality_gap(model) <= 1e-7);
}

TEST_CASE("density_eval examples") {
  MaxentModel m{MomentBasis::powers({1}), kUnit, rule_for(kUnit), vec({1.0}),
                std::log(1.0 - std::exp(-1.0)), MomentVector{vec({0.5})}, true, 0, 0.0};
  CHECK(m.density(0.0) == doctest::Approx(1.5819767).epsilon(1e-7));
  CHECK(m.density(1.0) == doctest::Approx(0.5819767).epsilon(1e-7));
  const Vector f = m.density_at_nodes();
  CHECK((f.array() > 0.0).all());
  CHECK(integrate_values(*m.rule, {f.data(), static_cast<std::size_t>(f.size())}) ==
        doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fit: error classes") {
  CHECK_THROWS_AS(fit(MomentVector{vec({1.5})}, MomentBasis::powers({1}), kUnit),
                  InfeasibleError);
  // Per-coordinate screen passes, but Var(X) = 0.2 - 0.25 < 0.
  CHECK_THROWS_AS(fit(MomentVector{vec({0.5, 0.2})}, MomentBasis::powers({1, 2}), kUnit),
                  InfeasibleError);

  SolverOptions few;
  few.max_iter = 1;
  try {
    fit(MomentVector{vec({0.05})}, MomentBasis::powers({1}), kUnit, few);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.grad_norm() > 0.0);
    CHECK(e.iterations() == 1);
  }

  // Two identical tabulated constraints give a singular Hessian.
  const auto dup = MomentBasis::tabulated({0.0, 1.0}, {{0.0, 1.0}, {0.0, 1.0}});
  CHECK_THROWS_AS(fit(MomentVector{vec({0.3, 0.3})}, dup, kUnit), ConditioningError);
  SolverOptions ridge;
  ridge.ridge = 1e-3;
  const auto m = fit(MomentVector{vec({0.3, 0.3})}, dup, kUnit, ridge);
  CHECK(std::abs(m.reproduced_moments()[0] - 0.3) < 1e-9);

  SolverOptions bad;
  bad.tol_grad = 0.0;
  CHECK_THROWS_AS(fit(MomentVector{vec({0.3})}, MomentBasis::powers({1}), kUnit, bad),
                  ConfigError);
}

TEST_CASE("property: converged fits reproduce their moments and close the duality gap") {
  std::mt19937_64 rng(99);
  const auto basis = MomentBasis::powers({1, 2});
  const auto rule = rule_for(kUnit);
  const DualProblem dual(basis, rule);
  std::uniform_real_distribution<double> lam(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Targets generated from a random member of the family are always feasible.
    const Vector truth = vec({lam(rng), lam(rng)});
    const Vector d = dual.mean(truth);
    const auto model = fit(MomentVector{d}, basis, rule);
    CHECK((model.reproduced_moments() - d).lpNorm<Eigen::Infinity>() <= 10.0 * 1e-10);
    CHECK(duality_gap(model) <= 1e-7);
    CHECK((model.lambda - truth).norm() < 1e-6);
  }
}

TEST_CASE("property: entropy of any density with the same moments is bounded by the dual") {
  std::mt19937_64 rng(31);
  const auto basis = MomentBasis::powers({1, 2});
  const Vector d = vec({0.35, 0.18});
  const auto model = fit(MomentVector{d}, basis, kUnit);
  const Vector fstar = model.density_at_nodes();
  const auto w = model.rule->weights();
  const Matrix h = basis.eval_many(model.rule->nodes());
  const auto n = fstar.size();

  // Constraint directions (1, h_1, h_2) in the f*-weighted inner product.
  Matrix a(n, 3);
  a.col(0) = Vector::Ones(n);
  a.col(1) = h.col(0);
  a.col(2) = h.col(1);
  Vector wf(n);
  for (Eigen::Index i = 0; i < n; ++i) wf[i] = w[static_cast<std::size_t>(i)] * fstar[i];

  const double bound = model.log_z + model.lambda.dot(d);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    Vector u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = gauss(rng);
    // Project u so that int u f* = int u h_k f* = 0.
    const Matrix gram = a.transpose() * wf.asDiagonal() * a;
    const Vector coef = gram.ldlt().solve(a.transpose() * wf.asDiagonal() * u);
    u -= a * coef;
    const double eps = 0.5 / u.lpNorm<Eigen::Infinity>();
    const Vector f = (fstar.array() * (1.0 + eps * u.array())).matrix();
    const GridDensity g(model.rule, f);
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(shannon_entropy(g) <= bound + 1e-12);
    CHECK(shannon_entropy(g) < entropy_primal(model));
  }
}
