#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

namespace maxent::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kInfeasible = 2,
  kNotConverged = 3,
};

inline constexpr int kDefaultGridPoints = 512;

struct Options {
  std::filesystem::path config;
  std::filesystem::path out = "out";
  std::optional<int> grid_points;
  std::optional<int> quad_points;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

/// model.json + density.csv from a support, basis and moment vector.
int cmd_fit(const Options& opts);
/// moments.json, model.json, sensitivity.json and band.csv from a sample.
int cmd_analyze(const Options& opts);
/// replicates.csv + aggregate.json from an experiment config.
int cmd_simulate(const Options& opts);
/// Laplace-transform inversion on the half-line; model.json + density.csv.
int cmd_invert_laplace(const Options& opts);

}  // namespace maxent::cli
