#include "maxent/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace maxent::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "/" + key, "missing required key");
  return *it;
}

const json* optional_key(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<long> parse_integer_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of integers");
  std::vector<long> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_integer(j[i], path + "/" + std::to_string(i)));
  }
  return out;
}

// Rethrows library-level ConfigErrors with the JSON path attached.
template <typename F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (!what.empty() && what.front() == '/') throw;
    fail(path, what);
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail(path + "/" + item.key(), "unknown key");
    }
  }
}

std::vector<double> parse_number_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_number(j[i], path + "/" + std::to_string(i)));
  }
  return out;
}

SupportSpec parse_support(const json& j, const std::string& path) {
  const std::string kind = as_string(require(j, "kind", path), path + "/kind");
  const double a = as_number(require(j, "a", path), path + "/a");
  if (kind == "finite_interval") {
    check_keys(j, {"kind", "a", "b"}, path);
    const double b = as_number(require(j, "b", path), path + "/b");
    return at_path(path, [&] { return SupportSpec::finite(a, b); });
  }
  if (kind == "half_line") {
    check_keys(j, {"kind", "a", "scale", "measure"}, path);
    double scale = 1.0;
    if (const json* s = optional_key(j, "scale", path)) scale = as_number(*s, path + "/scale");
    BaseMeasure measure = BaseMeasure::lebesgue;
    if (const json* m = optional_key(j, "measure", path)) {
      const std::string name = as_string(*m, path + "/measure");
      if (name == "exponential") {
        measure = BaseMeasure::exponential;
      } else if (name != "lebesgue") {
        fail(path + "/measure", "expected \"lebesgue\" or \"exponential\"");
      }
    }
    return at_path(path, [&] { return SupportSpec::half_line(a, scale, measure); });
  }
  fail(path + "/kind", "expected \"finite_interval\" or \"half_line\"");
}

MomentBasis parse_basis(const json& j, const std::string& path) {
  const std::string family = as_string(require(j, "family", path), path + "/family");
  if (family == "powers") {
    check_keys(j, {"family", "exponents"}, path);
    const auto e = parse_integer_array(require(j, "exponents", path), path + "/exponents");
    std::vector<int> exps(e.begin(), e.end());
    return at_path(path + "/exponents", [&] { return MomentBasis::powers(exps); });
  }
  if (family == "exponentials") {
    check_keys(j, {"family", "alphas"}, path);
    auto alphas = parse_number_array(require(j, "alphas", path), path + "/alphas");
    return at_path(path + "/alphas", [&] { return MomentBasis::exponentials(alphas); });
  }
  if (family == "tabulated") {
    check_keys(j, {"family", "x", "h"}, path);
    auto x = parse_number_array(require(j, "x", path), path + "/x");
    const json& h = require(j, "h", path);
    if (!h.is_array()) fail(path + "/h", "expected an array of arrays");
    std::vector<std::vector<double>> values;
    for (std::size_t k = 0; k < h.size(); ++k) {
      values.push_back(parse_number_array(h[k], path + "/h/" + std::to_string(k)));
    }
    return at_path(path, [&] { return MomentBasis::tabulated(x, values); });
  }
  fail(path + "/family", "expected \"powers\", \"exponentials\" or \"tabulated\"");
}

SolverOptions parse_solver(const json& j, const std::string& path) {
  SolverOptions o;
  if (j.is_null()) return o;
  check_keys(j, {"tol_grad", "max_iter", "ridge", "lambda_bound", "initial_lambda"}, path);
  if (const json* v = optional_key(j, "tol_grad", path)) o.tol_grad = as_number(*v, path + "/tol_grad");
  if (const json* v = optional_key(j, "max_iter", path)) {
    o.max_iter = static_cast<int>(as_integer(*v, path + "/max_iter"));
  }
  if (const json* v = optional_key(j, "ridge", path)) o.ridge = as_number(*v, path + "/ridge");
  if (const json* v = optional_key(j, "lambda_bound", path)) {
    o.lambda_bound = as_number(*v, path + "/lambda_bound");
  }
  if (const json* v = optional_key(j, "initial_lambda", path)) {
    const auto l = parse_number_array(*v, path + "/initial_lambda");
    o.initial_lambda = Eigen::Map<const Vector>(l.data(), static_cast<Eigen::Index>(l.size()));
  }
  if (!(o.tol_grad > 0.0)) fail(path + "/tol_grad", "must be positive");
  if (o.max_iter < 1) fail(path + "/max_iter", "must be at least 1");
  if (!(o.ridge >= 0.0)) fail(path + "/ridge", "must be nonnegative");
  return o;
}

TrueDensity parse_true_density(const json& j, const std::string& path) {
  const std::string kind = as_string(require(j, "kind", path), path + "/kind");
  const SupportSpec support = parse_support(require(j, "support", path), path + "/support");
  if (kind == "uniform" || kind == "unit_exponential") {
    check_keys(j, {"kind", "support"}, path);
  } else if (kind == "truncated_exponential") {
    check_keys(j, {"kind", "support", "rate"}, path);
  } else if (kind == "grid_tabulated") {
    check_keys(j, {"kind", "support", "x", "values"}, path);
  }
  if (kind == "uniform") {
    return at_path(path, [&] { return TrueDensity::uniform(support); });
  }
  if (kind == "truncated_exponential") {
    const double rate = as_number(require(j, "rate", path), path + "/rate");
    return at_path(path, [&] { return TrueDensity::truncated_exponential(support, rate); });
  }
  if (kind == "unit_exponential") {
    return at_path(path, [&] { return TrueDensity::unit_exponential(support); });
  }
  if (kind == "grid_tabulated") {
    auto x = parse_number_array(require(j, "x", path), path + "/x");
    auto v = parse_number_array(require(j, "values", path), path + "/values");
    return at_path(path, [&] { return TrueDensity::grid_tabulated(support, x, v); });
  }
  fail(path + "/kind",
       "expected one of uniform, truncated_exponential, unit_exponential, grid_tabulated");
}

ExperimentConfig parse_experiment(const json& j) {
  check_keys(j,
             {"true_density", "basis", "support", "N_grid", "replicates", "seed", "grid_points",
              "solver", "quad_points", "z", "bounds"},
             "");
  ExperimentConfig cfg(parse_true_density(require(j, "true_density", ""), "/true_density"),
                       parse_basis(require(j, "basis", ""), "/basis"));
  if (const json* v = optional_key(j, "support", "")) cfg.support = parse_support(*v, "/support");
  cfg.n_grid = parse_integer_array(require(j, "N_grid", ""), "/N_grid");
  cfg.replicates = static_cast<int>(as_integer(require(j, "replicates", ""), "/replicates"));
  if (const json* v = optional_key(j, "seed", "")) {
    cfg.seed = static_cast<std::uint64_t>(as_integer(*v, "/seed"));
  }
  if (const json* v = optional_key(j, "grid_points", "")) {
    cfg.grid_points = parse_number_array(*v, "/grid_points");
  }
  if (const json* v = optional_key(j, "solver", "")) cfg.solver = parse_solver(*v, "/solver");
  if (const json* v = optional_key(j, "quad_points", "")) {
    cfg.quad_points = static_cast<int>(as_integer(*v, "/quad_points"));
  }
  if (const json* v = optional_key(j, "z", "")) cfg.z = as_number(*v, "/z");
  if (const json* b = optional_key(j, "bounds", "")) {
    check_keys(*b, {"chebyshev_a", "functions"}, "/bounds");
    if (const json* v = optional_key(*b, "chebyshev_a", "/bounds")) {
      cfg.bounds.chebyshev_a = parse_number_array(*v, "/bounds/chebyshev_a");
    }
    if (const json* v = optional_key(*b, "functions", "/bounds")) {
      if (!v->is_array()) fail("/bounds/functions", "expected an array");
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string p = "/bounds/functions/" + std::to_string(i);
        const json& g = (*v)[i];
        TestFunction f;
        const std::string kind = as_string(require(g, "kind", p), p + "/kind");
        if (kind == "indicator") {
          check_keys(g, {"kind", "lo", "hi", "a"}, p);
          f.kind = TestFunction::Kind::indicator;
          f.lo = as_number(require(g, "lo", p), p + "/lo");
          f.hi = as_number(require(g, "hi", p), p + "/hi");
        } else if (kind == "constant") {
          check_keys(g, {"kind", "value", "a"}, p);
          f.kind = TestFunction::Kind::constant;
          if (const json* c = optional_key(g, "value", p)) f.value = as_number(*c, p + "/value");
        } else {
          fail(p + "/kind", "expected \"indicator\" or \"constant\"");
        }
        f.a = as_number(require(g, "a", p), p + "/a");
        cfg.bounds.functions.push_back(f);
      }
    }
  }
  at_path("", [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const SupportSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"a", s.a}};
  if (s.kind == SupportKind::finite_interval) {
    j["b"] = s.b;
  } else {
    j["scale"] = s.halfline_scale;
    j["measure"] = to_string(s.measure);
  }
  return j;
}

json to_json(const MomentBasis& b) {
  json j{{"family", to_string(b.family())}};
  switch (b.family()) {
    case BasisFamily::powers: j["exponents"] = b.exponents(); break;
    case BasisFamily::exponentials: j["alphas"] = b.alphas(); break;
    case BasisFamily::tabulated:
      j["x"] = b.table_x();
      j["h"] = b.table_values();
      break;
  }
  return j;
}

json to_json(const MaxentModel& m) {
  return json{{"basis", to_json(m.basis)},
              {"support", to_json(m.support)},
              {"lambda", to_json(m.lambda)},
              {"log_z", m.log_z},
              {"target", to_json(m.target.d)},
              {"converged", m.converged},
              {"grad_norm", m.grad_norm},
              {"iterations", m.iterations},
              {"quad_points", m.rule ? m.rule->size() : 0}};
}

json to_json(const SensitivityReport& r) {
  json nodes = json::array();
  for (double x : r.model->rule->nodes()) nodes.push_back(x);
  return json{{"C", to_json(r.C)},
              {"D", to_json(r.D)},
              {"sigma_h", to_json(r.sigma_h)},
              {"nodes", std::move(nodes)},
              {"sigma2_grid", to_json(r.sigma2_grid)}};
}

json to_json(const BoundsReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"N", c.n},
                      {"kind", c.kind},
                      {"label", c.label},
                      {"a", c.a},
                      {"bound", c.bound},
                      {"empirical", c.empirical},
                      {"tolerance", c.tolerance},
                      {"respected", c.respected}});
  }
  return json{{"all_respected", r.all_respected}, {"checks", std::move(checks)}};
}

namespace {

json summary_json(const Summary& s) {
  return json{{"mean", s.mean}, {"median", s.median}, {"q05", s.q05}, {"q95", s.q95}};
}

}  // namespace

json aggregate_json(const ExperimentResult& result, const ExperimentConfig& config) {
  json per_n = json::array();
  for (std::size_t k = 0; k < result.per_n.size(); ++k) {
    const auto& a = result.per_n[k];
    json points = json::array();
    for (const auto& p : a.points) {
      points.push_back({{"x", p.x},
                        {"f_star", p.f_star},
                        {"sigma2", p.sigma2},
                        {"emp_var", p.emp_var},
                        {"mean_bias", p.mean_bias},
                        {"coverage", p.coverage},
                        {"ks_stat", p.ks_stat},
                        {"ks_pass", p.ks_pass},
                        {"ks_skipped", p.ks_skipped}});
    }
    json functions = json::array();
    for (std::size_t g = 0; g < config.bounds.functions.size(); ++g) {
      functions.push_back({{"label", config.bounds.functions[g].label()},
                           {"a", config.bounds.functions[g].a},
                           {"band_bound", a.band_bound[g]},
                           {"coverage", a.band_coverage[g]},
                           {"sigma2_g", a.sigma2_g[g]}});
    }
    json cheb = json::array();
    for (std::size_t c = 0; c < config.bounds.chebyshev_a.size(); ++c) {
      cheb.push_back({{"a", config.bounds.chebyshev_a[c]},
                      {"bound", a.chebyshev_bound[c]},
                      {"exceedance", a.chebyshev_exceedance[c]}});
    }
    const double total = static_cast<double>(a.succeeded + a.failed);
    per_n.push_back({{"N", a.n},
                     {"succeeded", a.succeeded},
                     {"failed", a.failed},
                     {"failure_rate", total > 0 ? a.failed / total : 0.0},
                     {"l1_err", summary_json(a.l1)},
                     {"kl", summary_json(a.kl)},
                     {"sup_err", summary_json(a.sup)},
                     {"chan1_resid", summary_json(a.first_order)},
                     {"lambda_abs_max", summary_json(a.lambda_abs_max)},
                     {"grid", std::move(points)},
                     {"chebyshev", std::move(cheb)},
                     {"functions", std::move(functions)}});
  }
  return json{{"reference", to_json(result.reference)},
              {"exact_d", to_json(result.exact_d)},
              {"D", to_json(result.D)},
              {"sigma_h", to_json(result.sigma_h)},
              {"replicates", config.replicates},
              {"seed", config.seed},
              {"l1_slope", result.l1_slope},
              {"kl_slope", result.kl_slope},
              {"per_n", std::move(per_n)},
              {"bounds", to_json(validate_bounds(result, config))}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/: invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<double> read_sample_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("sample file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x") throw InputError("sample file must start with the header `x`");
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v = 0.0;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    while (first < last && *first == ' ') ++first;
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
      throw InputError("sample file row " + std::to_string(row) + ": not a number: " + line);
    }
    values.push_back(v);
  }
  return values;
}

void write_density_csv(const std::filesystem::path& path, std::span<const double> x,
                       std::span<const double> f) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "x,f\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << format_double(x[i]) << ',' << format_double(f[i]) << '\n';
  }
}

void write_band_csv(const std::filesystem::path& path, std::span<const BandRow> rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "x,f_star,sigma2,band_lo,band_hi\n";
  for (const auto& r : rows) {
    out << format_double(r.x) << ',' << format_double(r.f_star) << ','
        << format_double(r.sigma2) << ',' << format_double(r.lo) << ','
        << format_double(r.hi) << '\n';
  }
}

void write_replicates_csv(std::ostream& os, const ExperimentResult& result, int m) {
  os << "N,replicate";
  for (int k = 1; k <= m; ++k) os << ",d_hat_" << k;
  for (int k = 1; k <= m; ++k) os << ",lambda_hat_" << k;
  os << ",l1_err,kl,sup_err,chan1_resid\n";
  const std::string nan = format_double(std::nan(""));
  for (const auto& r : result.records) {
    os << r.n << ',' << r.replicate;
    for (int k = 0; k < m; ++k) os << ',' << format_double(r.d_hat[k]);
    for (int k = 0; k < m; ++k) os << ',' << (r.ok ? format_double(r.lambda_hat[k]) : nan);
    if (r.ok) {
      os << ',' << format_double(r.l1_err) << ',' << format_double(r.kl) << ','
         << format_double(r.sup_err) << ',' << format_double(r.first_order_resid) << '\n';
    } else {
      os << ',' << nan << ',' << nan << ',' << nan << ',' << nan << '\n';
    }
  }
}

void write_replicates_csv(const std::filesystem::path& path,
                          const ExperimentResult& result, int m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_replicates_csv(out, result, m);
}

}  // namespace maxent::io
