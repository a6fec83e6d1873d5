#pragma once

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "maxent/experiment.hpp"
#include "maxent/sensitivity.hpp"
#include "maxent/solver.hpp"

namespace maxent::io {

using nlohmann::json;

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

// Config parsing. `path` is the JSON pointer of `j` inside the document; it
// prefixes every ConfigError message.
SupportSpec parse_support(const json& j, const std::string& path);
MomentBasis parse_basis(const json& j, const std::string& path);
SolverOptions parse_solver(const json& j, const std::string& path);
TrueDensity parse_true_density(const json& j, const std::string& path);
ExperimentConfig parse_experiment(const json& j);
std::vector<double> parse_number_array(const json& j, const std::string& path);

/// ConfigError naming the first key of object `j` that is not in `allowed`.
void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& path);

json to_json(const SupportSpec& s);
json to_json(const MomentBasis& b);
json to_json(const MaxentModel& m);
json to_json(const Matrix& m);
json to_json(const Vector& v);
json to_json(const SensitivityReport& r);
json to_json(const BoundsReport& r);
json aggregate_json(const ExperimentResult& result, const ExperimentConfig& config);

/// Reads a JSON document; parse errors become ConfigError.
json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// One-column CSV with header `x`.
std::vector<double> read_sample_csv(const std::filesystem::path& path);

/// `x,f` rows.
void write_density_csv(const std::filesystem::path& path, std::span<const double> x,
                       std::span<const double> f);
void write_band_csv(const std::filesystem::path& path, std::span<const BandRow> rows);
void write_replicates_csv(std::ostream& os, const ExperimentResult& result, int m);
void write_replicates_csv(const std::filesystem::path& path,
                          const ExperimentResult& result, int m);

}  // namespace maxent::io
