#include <CLI11.hpp>

#include "maxent/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Maximum entropy reconstruction from generalized moments"};
  app.require_subcommand(1);

  maxent::cli::Options opts;
  int grid_points = 0;
  int quad_points = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--grid-points", grid_points, "export grid resolution")->check(CLI::Range(2, 1 << 24));
    sub->add_option("--quad-points", quad_points, "quadrature nodes")->check(CLI::Range(2, 1 << 16));
    sub->add_option("--seed", seed, "override the simulation seed");
    sub->add_flag("--verbose", opts.verbose, "log progress to stderr");
  };

  auto* fit = app.add_subcommand("fit", "fit a maxent density to given moments");
  auto* analyze = app.add_subcommand("analyze", "estimate moments from a sample and report sensitivity");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo validation of the sampling theory");
  auto* invert = app.add_subcommand("invert-laplace", "recover a density from Laplace transform values");
  for (auto* sub : {fit, analyze, simulate, invert}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : maxent::cli::kConfigError;
  }

  for (auto* sub : {fit, analyze, simulate, invert}) {
    if (sub->count("--grid-points")) opts.grid_points = grid_points;
    if (sub->count("--quad-points")) opts.quad_points = quad_points;
    if (sub->count("--seed")) opts.seed = seed;
  }

  if (*fit) return maxent::cli::cmd_fit(opts);
  if (*analyze) return maxent::cli::cmd_analyze(opts);
  if (*simulate) return maxent::cli::cmd_simulate(opts);
  return maxent::cli::cmd_invert_laplace(opts);
}
