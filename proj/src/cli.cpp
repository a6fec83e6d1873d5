#include "maxent/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "maxent/divergence.hpp"
#include "maxent/io.hpp"
#include "maxent/log.hpp"

namespace maxent::cli {

namespace {

using io::json;

struct FitConfig {
  SupportSpec support;
  std::optional<MomentBasis> basis;
  MomentVector d;
  SolverOptions solver;
  int quad_points = kDefaultQuadPoints;
  int grid_points = kDefaultGridPoints;
  std::optional<double> grid_max;
};

int int_key(const json& j, const char* key, int fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer() || it->get<int>() < 2) {
    throw ConfigError(std::string("/") + key + ": expected an integer >= 2");
  }
  return it->get<int>();
}

std::optional<double> number_key(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_number()) throw ConfigError(std::string("/") + key + ": expected a number");
  return it->get<double>();
}

void apply_overrides(const Options& opts, int& quad_points, int& grid_points) {
  if (opts.quad_points) quad_points = *opts.quad_points;
  if (opts.grid_points) grid_points = *opts.grid_points;
  if (quad_points < 2) throw ConfigError("--quad-points: must be at least 2");
  if (grid_points < 2) throw ConfigError("--grid-points: must be at least 2");
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Evenly spaced abscissas over the support; half-lines are cut at grid_max.
std::vector<double> export_grid(const SupportSpec& s, int n, std::optional<double> grid_max) {
  const double lo = s.a;
  double hi = s.b;
  if (s.kind == SupportKind::half_line) {
    hi = s.a + (grid_max ? *grid_max : 10.0 * s.halfline_scale);
  } else if (grid_max) {
    hi = std::min(hi, *grid_max);
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1);
  }
  return x;
}

void write_model_outputs(const Options& opts, const MaxentModel& model, int grid_points,
                         std::optional<double> grid_max) {
  std::filesystem::create_directories(opts.out);
  io::write_json(opts.out / "model.json", io::to_json(model));
  const auto x = export_grid(model.support, grid_points, grid_max);
  std::vector<double> f(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) f[i] = model.lebesgue_density(x[i]);
  io::write_density_csv(opts.out / "density.csv", x, f);
}

FitConfig parse_fit_config(const json& j) {
  io::check_keys(
      j, {"support", "basis", "moments", "solver", "quad_points", "grid_points", "grid_max"}, "");
  FitConfig c;
  if (!j.contains("support")) throw ConfigError("/support: missing required key");
  if (!j.contains("basis")) throw ConfigError("/basis: missing required key");
  if (!j.contains("moments")) throw ConfigError("/moments: missing required key");
  c.support = io::parse_support(j["support"], "/support");
  c.basis = io::parse_basis(j["basis"], "/basis");
  c.d = MomentVector{to_vector(io::parse_number_array(j["moments"], "/moments"))};
  if (c.d.size() != c.basis->size()) {
    throw ConfigError("/moments: expected " + std::to_string(c.basis->size()) + " values");
  }
  if (j.contains("solver")) c.solver = io::parse_solver(j["solver"], "/solver");
  c.quad_points = int_key(j, "quad_points", kDefaultQuadPoints);
  c.grid_points = int_key(j, "grid_points", kDefaultGridPoints);
  c.grid_max = number_key(j, "grid_max");
  return c;
}

// Maps library exceptions onto the exit-code protocol.
template <typename F>
int guarded(const char* name, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << name << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleError& e) {
    std::cerr << name << ": infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NonConvergenceError& e) {
    std::cerr << name << ": not converged: " << e.what() << '\n';
    return kNotConverged;
  } catch (const ConditioningError& e) {
    std::cerr << name << ": ill-conditioned: " << e.what() << '\n';
    return kNotConverged;
  } catch (const NumericError& e) {
    std::cerr << name << ": numeric error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const InputError& e) {
    std::cerr << name << ": input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const EnvelopeError& e) {
    std::cerr << name << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    std::cerr << name << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kConfigError;
  }
}

void set_verbosity(const Options& opts) {
  log::set_level(opts.verbose ? log::Level::info : log::Level::warn);
}

}  // namespace

int cmd_fit(const Options& opts) {
  set_verbosity(opts);
  return guarded("fit", [&] {
    FitConfig c = parse_fit_config(io::read_json(opts.config));
    apply_overrides(opts, c.quad_points, c.grid_points);
    const MaxentModel model = fit(c.d, *c.basis, c.support, c.solver, c.quad_points);
    log::info("fit converged in " + std::to_string(model.iterations) + " iterations");
    write_model_outputs(opts, model, c.grid_points, c.grid_max);
    return static_cast<int>(kOk);
  });
}

int cmd_invert_laplace(const Options& opts) {
  set_verbosity(opts);
  return guarded("invert-laplace", [&] {
    const json j = io::read_json(opts.config);
    io::check_keys(j,
                   {"alphas", "values", "a", "scale", "solver", "quad_points", "grid_points",
                    "grid_max"},
                   "");
    if (!j.contains("alphas")) throw ConfigError("/alphas: missing required key");
    if (!j.contains("values")) throw ConfigError("/values: missing required key");
    const auto alphas = io::parse_number_array(j["alphas"], "/alphas");
    const auto values = io::parse_number_array(j["values"], "/values");
    if (alphas.size() != values.size()) {
      throw ConfigError("/values: expected one value per alpha");
    }
    double scale = 1.0;
    if (auto s = number_key(j, "scale")) scale = *s;
    const double a = number_key(j, "a").value_or(0.0);
    SolverOptions solver;
    if (j.contains("solver")) solver = io::parse_solver(j["solver"], "/solver");
    int quad_points = int_key(j, "quad_points", kDefaultQuadPoints);
    int grid_points = int_key(j, "grid_points", kDefaultGridPoints);
    apply_overrides(opts, quad_points, grid_points);

    // Pairs are taken in increasing alpha; a non-monotone transform is then
    // caught by the feasibility screen (exit 2) rather than as a config error.
    std::vector<std::size_t> order(alphas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return alphas[l] < alphas[r]; });
    std::vector<double> sorted_alphas;
    std::vector<double> sorted_values;
    for (std::size_t i : order) {
      sorted_alphas.push_back(alphas[i]);
      sorted_values.push_back(values[i]);
    }
    MomentBasis basis = [&] {
      try {
        return MomentBasis::exponentials(sorted_alphas);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("/alphas: ") + e.what());
      }
    }();
    const SupportSpec support = SupportSpec::half_line(a, scale, BaseMeasure::exponential);
    const MaxentModel model =
        fit(MomentVector{to_vector(sorted_values)}, basis, support, solver, quad_points);
    write_model_outputs(opts, model, grid_points, number_key(j, "grid_max"));
    return static_cast<int>(kOk);
  });
}

int cmd_analyze(const Options& opts) {
  set_verbosity(opts);
  return guarded("analyze", [&] {
    const json j = io::read_json(opts.config);
    io::check_keys(j,
                   {"support", "basis", "sample", "solver", "quad_points", "grid_points",
                    "grid_max", "z"},
                   "");
    for (const char* key : {"support", "basis", "sample"}) {
      if (!j.contains(key)) throw ConfigError(std::string("/") + key + ": missing required key");
    }
    const SupportSpec support = io::parse_support(j["support"], "/support");
    const MomentBasis basis = io::parse_basis(j["basis"], "/basis");
    if (!j["sample"].is_string()) throw ConfigError("/sample: expected a file path");
    std::filesystem::path sample_path = j["sample"].get<std::string>();
    if (sample_path.is_relative()) sample_path = opts.config.parent_path() / sample_path;
    SolverOptions solver;
    if (j.contains("solver")) solver = io::parse_solver(j["solver"], "/solver");
    int quad_points = int_key(j, "quad_points", kDefaultQuadPoints);
    int grid_points = int_key(j, "grid_points", kDefaultGridPoints);
    apply_overrides(opts, quad_points, grid_points);
    const double z = number_key(j, "z").value_or(1.96);
    if (!(z > 0.0)) throw ConfigError("/z: must be positive");

    const SampleSet sample(io::read_sample_csv(sample_path), support);
    const Matrix sigma_h = sample_covariance(basis, sample);
    const MomentVector d_hat = estimate_moments(basis, sample);

    auto model = std::make_shared<const MaxentModel>(
        fit(d_hat, basis, support, solver, quad_points));
    const SensitivityReport report = analyze_sensitivity(model, sigma_h);

    std::filesystem::create_directories(opts.out);
    io::write_json(opts.out / "moments.json",
                   json{{"N", sample.size()},
                        {"d_hat", io::to_json(d_hat.d)},
                        {"sigma_h", io::to_json(sigma_h)}});
    write_model_outputs(opts, *model, grid_points, number_key(j, "grid_max"));
    json sens = io::to_json(report);
    sens["N"] = sample.size();
    sens["z"] = z;
    io::write_json(opts.out / "sensitivity.json", sens);

    const auto xs = export_grid(support, grid_points, number_key(j, "grid_max"));
    auto rows = clt_band(report, xs, static_cast<long>(sample.size()), z);
    for (auto& r : rows) {
      // Report on the Lebesgue scale, like density.csv.
      const double md = support.measure_density(r.x);
      r.f_star *= md;
      r.sigma2 *= md * md;
      r.lo *= md;
      r.hi *= md;
    }
    io::write_band_csv(opts.out / "band.csv", rows);
    return static_cast<int>(kOk);
  });
}

int cmd_simulate(const Options& opts) {
  set_verbosity(opts);
  return guarded("simulate", [&] {
    const json j = io::read_json(opts.config);
    ExperimentConfig cfg = io::parse_experiment(j);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.quad_points) cfg.quad_points = *opts.quad_points;

    // The reference fit is the one failure that aborts a simulation.
    try {
      (void)fit_reference(cfg);
    } catch (const Error& e) {
      std::cerr << "simulate: reference fit failed: " << e.what() << '\n';
      return static_cast<int>(kNotConverged);
    }
    const ExperimentResult result = run_replicates(cfg);
    std::filesystem::create_directories(opts.out);
    io::write_replicates_csv(opts.out / "replicates.csv", result, cfg.basis.size());
    io::write_json(opts.out / "aggregate.json", io::aggregate_json(result, cfg));
    for (const auto& a : result.per_n) {
      if (a.failed > 0) {
        log::warn("N = " + std::to_string(a.n) + ": " + std::to_string(a.failed) +
                  " replicate fit(s) failed and were excluded");
      }
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace maxent::cli
