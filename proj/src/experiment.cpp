#include "maxent/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "maxent/divergence.hpp"

namespace maxent {

double TestFunction::operator()(double x) const {
  if (kind == Kind::constant) return value;
  return (x >= lo && x <= hi) ? 1.0 : 0.0;
}

std::string TestFunction::label() const {
  std::ostringstream os;
  if (kind == Kind::constant) {
    os << "constant(" << value << ")";
  } else {
    os << "indicator[" << lo << "," << hi << "]";
  }
  return os.str();
}

ExperimentConfig::ExperimentConfig(TrueDensity truth_, MomentBasis basis_)
    : truth(std::move(truth_)), basis(std::move(basis_)), support(truth.support()) {}

void ExperimentConfig::validate() const {
  support.validate();
  if (n_grid.empty()) throw ConfigError("experiment: N_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("experiment: sample sizes must be positive");
    if (i > 0 && !(n_grid[i] > n_grid[i - 1])) {
      throw ConfigError("experiment: N_grid must be strictly increasing");
    }
  }
  if (replicates < 1) throw ConfigError("experiment: replicates must be at least 1");
  if (quad_points < 2) throw ConfigError("experiment: quad_points must be at least 2");
  if (!(z > 0.0)) throw ConfigError("experiment: z must be positive");
  for (double x : grid_points) {
    if (!support.contains(x)) throw ConfigError("experiment: grid point outside the support");
  }
  for (double a : bounds.chebyshev_a) {
    if (!(a > 0.0)) throw ConfigError("experiment: chebyshev a must be positive");
  }
  for (const auto& g : bounds.functions) {
    if (!(g.a > 0.0)) throw ConfigError("experiment: test function a must be positive");
  }
  solver.validate(basis.size());
}

std::uint64_t ExperimentConfig::cell_seed(int n_index, int replicate) const {
  return seed + static_cast<std::uint64_t>(replicate) * 1000000ULL +
         static_cast<std::uint64_t>(n_index);
}

const ReplicateRecord& ExperimentResult::record(int n_index, int replicate) const {
  const std::size_t r = per_n.empty() ? 0 : records.size() / per_n.size();
  return records.at(static_cast<std::size_t>(n_index) * r +
                    static_cast<std::size_t>(replicate));
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) {
    s.mean = s.median = s.q05 = s.q95 = std::nan("");
    return s;
  }
  std::sort(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  // Linear interpolation between order statistics.
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return (1.0 - t) * values[lo] + t * values[hi];
  };
  s.median = quantile(0.5);
  s.q05 = quantile(0.05);
  s.q95 = quantile(0.95);
  return s;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double ks_statistic_normal(std::vector<double> z) {
  if (z.empty()) return std::nan("");
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return d;
}

MaxentModel fit_reference(const ExperimentConfig& config) {
  auto rule = std::make_shared<const QuadratureRule>(
      build_rule(config.support, config.quad_points));
  const Vector d = config.truth.exact_moments(config.basis);
  return fit(MomentVector{d}, config.basis, std::move(rule), config.solver);
}

namespace {

constexpr double kSigmaFloor = 1e-20;

struct Context {
  const ExperimentConfig& cfg;
  MaxentModel ref;
  Matrix D;
  Matrix abs_D;
  Matrix sigma_h;
  Vector f_star_nodes;
  Vector f_star_grid;
  Vector g_star;
  Matrix g_nodes;  // g_j at node i, (nodes x functions)
  SolverOptions cell_opts;
};

Context make_context(const ExperimentConfig& cfg) {
  cfg.validate();
  Context ctx{cfg, fit_reference(cfg), {}, {}, {}, {}, {}, {}, {}, cfg.solver};
  ctx.D = jacobian_D(ctx.ref);
  ctx.abs_D = -ctx.D;
  ctx.sigma_h = cfg.truth.exact_covariance(cfg.basis);
  ctx.f_star_nodes = ctx.ref.density_at_nodes();
  ctx.f_star_grid.resize(static_cast<Eigen::Index>(cfg.grid_points.size()));
  for (std::size_t j = 0; j < cfg.grid_points.size(); ++j) {
    ctx.f_star_grid[static_cast<Eigen::Index>(j)] = ctx.ref.density(cfg.grid_points[j]);
  }
  const auto x = ctx.ref.rule->nodes();
  const auto w = ctx.ref.rule->weights();
  const auto nf = static_cast<Eigen::Index>(cfg.bounds.functions.size());
  ctx.g_nodes.resize(static_cast<Eigen::Index>(x.size()), nf);
  ctx.g_star = Vector::Zero(nf);
  for (Eigen::Index j = 0; j < nf; ++j) {
    const auto& g = cfg.bounds.functions[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      ctx.g_nodes(ii, j) = g(x[i]);
      ctx.g_star[j] += w[i] * ctx.g_nodes(ii, j) * ctx.f_star_nodes[ii];
    }
  }
  if (!cfg.solver.initial_lambda) ctx.cell_opts.initial_lambda = ctx.ref.lambda;
  return ctx;
}

ReplicateRecord run_cell(const Context& ctx, int n_index, int replicate) {
  const ExperimentConfig& cfg = ctx.cfg;
  ReplicateRecord rec;
  rec.n = cfg.n_grid[static_cast<std::size_t>(n_index)];
  rec.n_index = n_index;
  rec.replicate = replicate;
  rec.seed = cfg.cell_seed(n_index, replicate);

  const SampleSet sample = cfg.truth.draw(static_cast<std::size_t>(rec.n), rec.seed);
  rec.d_hat = estimate_moments(cfg.basis, sample).d;
  const Vector delta = rec.d_hat - ctx.ref.target.d;
  rec.cheb_stat = std::sqrt(std::max(0.0, delta.dot(ctx.abs_D * delta)));

  std::optional<MaxentModel> fitted;
  try {
    fitted = fit(MomentVector{rec.d_hat}, cfg.basis, ctx.ref.rule, ctx.cell_opts);
  } catch (const Error& e) {
    rec.failure = e.what();
    return rec;
  }
  const MaxentModel& model = *fitted;
  rec.ok = true;
  rec.lambda_hat = model.lambda;

  const Vector f_hat = model.density_at_nodes();
  const GridDensity gh(ctx.ref.rule, f_hat);
  const GridDensity gs(ctx.ref.rule, ctx.f_star_nodes);
  rec.l1_err = l1_distance(gh, gs);
  rec.kl = std::max(0.0, kl_divergence(gh, gs));
  const Vector actual = f_hat - ctx.f_star_nodes;
  rec.sup_err = actual.lpNorm<Eigen::Infinity>();

  const Vector predicted = perturb_density_nodes(ctx.ref, ctx.D, delta);
  const auto w = ctx.ref.rule->weights();
  double resid = 0.0;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < actual.size(); ++i) {
    resid += w[static_cast<std::size_t>(i)] * std::abs(actual[i] - predicted[i]);
    scale += w[static_cast<std::size_t>(i)] * std::abs(actual[i]);
  }
  rec.first_order_resid = scale > 0.0 ? resid / scale : 0.0;

  rec.f_grid.resize(static_cast<Eigen::Index>(cfg.grid_points.size()));
  for (std::size_t j = 0; j < cfg.grid_points.size(); ++j) {
    rec.f_grid[static_cast<Eigen::Index>(j)] = model.density(cfg.grid_points[j]);
  }

  rec.g_change.resize(ctx.g_nodes.cols());
  for (Eigen::Index j = 0; j < ctx.g_nodes.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < f_hat.size(); ++i) {
      s += w[static_cast<std::size_t>(i)] * ctx.g_nodes(i, j) * f_hat[i];
    }
    rec.g_change[j] = s - ctx.g_star[j];
  }
  return rec;
}

NAggregate aggregate_n(const Context& ctx, std::span<const ReplicateRecord> cells) {
  const ExperimentConfig& cfg = ctx.cfg;
  NAggregate agg;
  agg.n = cells.front().n;
  const double n = static_cast<double>(agg.n);
  const double root_n = std::sqrt(n);

  std::vector<double> l1, kl, sup, first_order, lam;
  for (const auto& r : cells) {
    if (!r.ok) {
      ++agg.failed;
      continue;
    }
    ++agg.succeeded;
    l1.push_back(r.l1_err);
    kl.push_back(r.kl);
    sup.push_back(r.sup_err);
    first_order.push_back(r.first_order_resid);
    lam.push_back(r.lambda_hat.lpNorm<Eigen::Infinity>());
  }
  agg.l1 = summarize(l1);
  agg.kl = summarize(kl);
  agg.sup = summarize(sup);
  agg.first_order = summarize(first_order);
  agg.lambda_abs_max = summarize(lam);

  for (std::size_t j = 0; j < cfg.grid_points.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    GridPointStats p;
    p.x = cfg.grid_points[j];
    p.f_star = ctx.f_star_grid[jj];
    p.sigma2 = clt_sigma2_x(ctx.ref, ctx.D, ctx.sigma_h, p.x);
    const double half = cfg.z * std::sqrt(p.sigma2) / root_n;
    std::vector<double> scaled;
    scaled.reserve(cells.size());
    double inside = 0.0;
    for (const auto& r : cells) {
      if (!r.ok) continue;
      const double diff = r.f_grid[jj] - p.f_star;
      scaled.push_back(root_n * diff);
      if (std::abs(diff) <= half) inside += 1.0;
    }
    if (!scaled.empty()) {
      const double cnt = static_cast<double>(scaled.size());
      const double mean = std::accumulate(scaled.begin(), scaled.end(), 0.0) / cnt;
      double ss = 0.0;
      for (double v : scaled) ss += (v - mean) * (v - mean);
      p.emp_var = scaled.size() > 1 ? ss / (cnt - 1.0) : 0.0;
      p.mean_bias = mean / root_n;
      p.coverage = inside / cnt;
    }
    if (p.sigma2 < kSigmaFloor || scaled.empty()) {
      p.ks_skipped = true;
    } else {
      const double sd = std::sqrt(p.sigma2);
      std::vector<double> z(scaled.size());
      std::transform(scaled.begin(), scaled.end(), z.begin(),
                     [sd](double v) { return v / sd; });
      p.ks_stat = ks_statistic_normal(std::move(z));
      p.ks_pass = p.ks_stat < 1.63 / std::sqrt(static_cast<double>(scaled.size()));
    }
    agg.points.push_back(p);
  }

  for (double a : cfg.bounds.chebyshev_a) {
    agg.chebyshev_bound.push_back(chebyshev_tail(ctx.sigma_h, ctx.D, agg.n, a));
    double exceed = 0.0;
    for (const auto& r : cells) {
      if (r.cheb_stat > a) exceed += 1.0;
    }
    agg.chebyshev_exceedance.push_back(exceed / static_cast<double>(cells.size()));
  }

  for (std::size_t j = 0; j < cfg.bounds.functions.size(); ++j) {
    const auto& g = cfg.bounds.functions[j];
    agg.band_bound.push_back(corollary_band(ctx.ref, ctx.D, ctx.sigma_h, g, agg.n, g.a));
    agg.sigma2_g.push_back(clt_sigma2_g(ctx.ref, ctx.D, ctx.sigma_h, g));
    double inside = 0.0;
    for (const auto& r : cells) {
      if (r.ok && std::abs(r.g_change[static_cast<Eigen::Index>(j)]) <= g.a) inside += 1.0;
    }
    agg.band_coverage.push_back(agg.succeeded > 0 ? inside / agg.succeeded : 0.0);
  }
  return agg;
}

ExperimentResult finish(const Context& ctx, std::vector<ReplicateRecord> records) {
  const ExperimentConfig& cfg = ctx.cfg;
  ExperimentResult result{ctx.ref, ctx.ref.target.d, ctx.D, ctx.sigma_h,
                          std::move(records), {}, 0.0, 0.0};
  const auto r = static_cast<std::size_t>(cfg.replicates);
  std::vector<double> ns, l1m, klm;
  for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
    std::span<const ReplicateRecord> cells(result.records.data() + k * r, r);
    result.per_n.push_back(aggregate_n(ctx, cells));
    const auto& agg = result.per_n.back();
    if (agg.succeeded > 0 && agg.l1.median > 0.0 && agg.kl.median > 0.0) {
      ns.push_back(static_cast<double>(agg.n));
      l1m.push_back(agg.l1.median);
      klm.push_back(agg.kl.median);
    }
  }
  result.l1_slope = loglog_slope(ns, l1m);
  result.kl_slope = loglog_slope(ns, klm);
  return result;
}

}  // namespace

ExperimentResult run_replicates_serial(const ExperimentConfig& config) {
  const Context ctx = make_context(config);
  const int cells_per_n = config.replicates;
  std::vector<ReplicateRecord> records(config.n_grid.size() *
                                       static_cast<std::size_t>(cells_per_n));
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    records[idx] = run_cell(ctx, static_cast<int>(idx / cells_per_n),
                            static_cast<int>(idx % cells_per_n));
  }
  return finish(ctx, std::move(records));
}

ExperimentResult run_replicates(const ExperimentConfig& config) {
  const Context ctx = make_context(config);
  const int cells_per_n = config.replicates;
  const auto total = static_cast<long>(config.n_grid.size()) * cells_per_n;
  std::vector<ReplicateRecord> records(static_cast<std::size_t>(total));
  // Each cell depends only on its own seed; the slot index fixes the order.
#pragma omp parallel for schedule(dynamic, 8)
  for (long idx = 0; idx < total; ++idx) {
    records[static_cast<std::size_t>(idx)] =
        run_cell(ctx, static_cast<int>(idx / cells_per_n),
                 static_cast<int>(idx % cells_per_n));
  }
  return finish(ctx, std::move(records));
}

NormalityCheck clt_normality_check(const ExperimentResult& result,
                                   const ExperimentConfig& config, double x,
                                   int n_index) {
  if (config.grid_points.empty()) throw InputError("clt_normality_check: no grid points");
  if (n_index < 0) n_index = static_cast<int>(result.per_n.size()) - 1;
  if (config.replicates < 200) {
    throw InputError("clt_normality_check: needs at least 200 replicates");
  }
  std::size_t j = 0;
  for (std::size_t k = 1; k < config.grid_points.size(); ++k) {
    if (std::abs(config.grid_points[k] - x) < std::abs(config.grid_points[j] - x)) j = k;
  }
  const auto jj = static_cast<Eigen::Index>(j);
  const long n = config.n_grid[static_cast<std::size_t>(n_index)];
  const double sigma2 = clt_sigma2_x(result.reference, result.D, result.sigma_h,
                                     config.grid_points[j]);
  NormalityCheck out;
  if (sigma2 < kSigmaFloor) {
    out.skipped = true;
    return out;
  }
  const double f_star = result.reference.density(config.grid_points[j]);
  const double scale = std::sqrt(static_cast<double>(n) / sigma2);
  std::vector<double> z;
  for (int r = 0; r < config.replicates; ++r) {
    const auto& rec = result.record(n_index, r);
    if (rec.ok) z.push_back(scale * (rec.f_grid[jj] - f_star));
  }
  out.count = static_cast<int>(z.size());
  out.statistic = ks_statistic_normal(std::move(z));
  out.critical = 1.63 / std::sqrt(static_cast<double>(out.count));
  out.pass = out.statistic < out.critical;
  return out;
}

BoundsReport validate_bounds(const ExperimentResult& result,
                             const ExperimentConfig& config) {
  BoundsReport report;
  for (const auto& agg : result.per_n) {
    const double total = static_cast<double>(agg.succeeded + agg.failed);
    for (std::size_t k = 0; k < config.bounds.chebyshev_a.size(); ++k) {
      BoundCheck c;
      c.n = agg.n;
      c.kind = "chebyshev";
      c.label = "|D|^{1/2}(d_hat - d)";
      c.a = config.bounds.chebyshev_a[k];
      c.bound = agg.chebyshev_bound[k];
      c.empirical = agg.chebyshev_exceedance[k];
      const double p = std::clamp(c.bound, 0.0, 1.0);
      c.tolerance = 3.0 * std::sqrt(p * (1.0 - p) / total);
      c.respected = c.empirical <= c.bound + c.tolerance;
      report.all_respected = report.all_respected && c.respected;
      report.checks.push_back(c);
    }
    for (std::size_t k = 0; k < config.bounds.functions.size(); ++k) {
      BoundCheck c;
      c.n = agg.n;
      c.kind = "corollary";
      c.label = config.bounds.functions[k].label();
      c.a = config.bounds.functions[k].a;
      c.bound = agg.band_bound[k];
      c.empirical = agg.band_coverage[k];
      const double p = c.bound;
      c.tolerance = agg.succeeded > 0
                        ? 3.0 * std::sqrt(p * (1.0 - p) / agg.succeeded)
                        : 0.0;
      c.respected = c.empirical >= c.bound - c.tolerance;
      report.all_respected = report.all_respected && c.respected;
      report.checks.push_back(c);
    }
  }
  return report;
}

}  // namespace maxent
