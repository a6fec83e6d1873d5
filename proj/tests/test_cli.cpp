#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "maxent/cli.hpp"
#include "maxent/io.hpp"
#include "maxent/sampling.hpp"

using namespace maxent;
using io::json;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("maxent_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path write(const std::string& file, const json& j) const {
    const fs::path p = dir / file;
    std::ofstream(p) << j.dump(2);
    return p;
  }
  cli::Options opts(const fs::path& config, const std::string& out = "out") const {
    cli::Options o;
    o.config = config;
    o.out = dir / out;
    return o;
  }
};

// Runs `fn` with std::cerr captured.
template <typename F>
int capture_stderr(std::string& err, F&& fn) {
  std::ostringstream buf;
  auto* old = std::cerr.rdbuf(buf.rdbuf());
  const int rc = fn();
  std::cerr.rdbuf(old);
  err = buf.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read(const fs::path& p) { return json::parse(slurp(p)); }

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
  Csv c;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) c.header.push_back(cell);
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
    c.rows.push_back(row);
  }
  return c;
}

const json kUnitSupport{{"kind", "finite_interval"}, {"a", 0.0}, {"b", 1.0}};

json powers(std::vector<int> e) { return json{{"family", "powers"}, {"exponents", e}}; }

json fit_config(std::vector<int> e, std::vector<double> d) {
  return json{{"support", kUnitSupport}, {"basis", powers(std::move(e))}, {"moments", d}};
}

// Composite Simpson on an even number of intervals, Simpson 3/8 on the last
// three when the count is odd. Uniform spacing.
double simpson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size() - 1;
  const double h = (x.back() - x.front()) / static_cast<double>(n);
  std::size_t even = n % 2 == 0 ? n : n - 3;
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= even; i += 2) s += h / 3.0 * (y[i] + 4 * y[i + 1] + y[i + 2]);
  if (even != n) {
    const std::size_t i = even;
    s += 3.0 * h / 8.0 * (y[i] + 3 * y[i + 1] + 3 * y[i + 2] + y[i + 3]);
  }
  return s;
}

std::vector<double> column(const Csv& c, std::size_t k) {
  std::vector<double> v;
  for (const auto& r : c.rows) v.push_back(r[k]);
  return v;
}

}  // namespace

TEST_CASE("fit: examples and exit codes") {
  Scratch s("fit");
  SUBCASE("uniform") {
    CHECK(cli::cmd_fit(s.opts(s.write("c.json", fit_config({1}, {0.5})))) == cli::kOk);
    const json m = read(s.dir / "out/model.json");
    CHECK(std::abs(m["lambda"][0].get<double>()) < 1e-8);
    CHECK(m["converged"].get<bool>());
    const Csv d = read_csv(s.dir / "out/density.csv");
    CHECK(d.header == std::vector<std::string>{"x", "f"});
    CHECK(d.rows.size() == 512);
    CHECK(d.rows.front()[0] == 0.0);
    CHECK(d.rows.back()[0] == 1.0);
  }
  SUBCASE("d = 0.3") {
    CHECK(cli::cmd_fit(s.opts(s.write("c.json", fit_config({1}, {0.3})))) == cli::kOk);
    CHECK(read(s.dir / "out/model.json")["lambda"][0].get<double>() ==
          doctest::Approx(2.66).epsilon(0.01));
  }
  SUBCASE("grid override") {
    auto o = s.opts(s.write("c.json", fit_config({1}, {0.3})));
    o.grid_points = 11;
    CHECK(cli::cmd_fit(o) == cli::kOk);
    CHECK(read_csv(s.dir / "out/density.csv").rows.size() == 11);
  }
  SUBCASE("infeasible mean") {
    std::string err;
    CHECK(capture_stderr(err, [&] {
            return cli::cmd_fit(s.opts(s.write("c.json", fit_config({1}, {1.5}))));
          }) == cli::kInfeasible);
    CHECK(err.find("infeasible") != std::string::npos);
  }
  SUBCASE("non-convergence") {
    json c = fit_config({1, 2}, {0.3, 0.15});
    c["solver"] = {{"max_iter", 1}};
    std::string err;
    CHECK(capture_stderr(err, [&] { return cli::cmd_fit(s.opts(s.write("c.json", c))); }) ==
          cli::kNotConverged);
  }
  SUBCASE("malformed config names the schema path") {
    json c = fit_config({1}, {0.5});
    c["support"]["b"] = "one";
    std::string err;
    CHECK(capture_stderr(err, [&] { return cli::cmd_fit(s.opts(s.write("c.json", c))); }) ==
          cli::kConfigError);
    CHECK(err.find("/support/b") != std::string::npos);

    json missing = fit_config({1}, {0.5});
    missing.erase("moments");
    CHECK(capture_stderr(err, [&] { return cli::cmd_fit(s.opts(s.write("c.json", missing))); }) ==
          cli::kConfigError);
    CHECK(err.find("/moments") != std::string::npos);

    json family = fit_config({1}, {0.5});
    family["basis"]["family"] = "chebyshev";
    CHECK(capture_stderr(err, [&] { return cli::cmd_fit(s.opts(s.write("c.json", family))); }) ==
          cli::kConfigError);
    CHECK(err.find("/basis/family") != std::string::npos);

    json typo = fit_config({1}, {0.5});
    typo["solver"] = {{"tolgrad", 1e-9}};
    CHECK(capture_stderr(err, [&] { return cli::cmd_fit(s.opts(s.write("c.json", typo))); }) ==
          cli::kConfigError);
    CHECK(err.find("/solver/tolgrad: unknown key") != std::string::npos);

    std::ofstream(s.dir / "bad.json") << "{ not json";
    CHECK(capture_stderr(err, [&] { return cli::cmd_fit(s.opts(s.dir / "bad.json")); }) ==
          cli::kConfigError);
  }
}

TEST_CASE("fit: round trip through density.csv") {
  Scratch s("roundtrip");
  CHECK(cli::cmd_fit(s.opts(s.write("c.json", fit_config({1, 2}, {0.35, 0.18})), "a")) ==
        cli::kOk);
  const Csv d = read_csv(s.dir / "a/density.csv");
  const auto x = column(d, 0);
  const auto f = column(d, 1);
  std::vector<double> xf(x.size()), x2f(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xf[i] = x[i] * f[i];
    x2f[i] = x[i] * x[i] * f[i];
  }
  CHECK(simpson(x, f) == doctest::Approx(1.0).epsilon(1e-9));
  const std::vector<double> d2{simpson(x, xf), simpson(x, x2f)};
  CHECK(cli::cmd_fit(s.opts(s.write("c2.json", fit_config({1, 2}, d2)), "b")) == cli::kOk);
  const json a = read(s.dir / "a/model.json");
  const json b = read(s.dir / "b/model.json");
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(a["lambda"][k].get<double>() - b["lambda"][k].get<double>()) < 1e-6);
  }
}

TEST_CASE("analyze") {
  Scratch s("analyze");
  const auto sample = TrueDensity::uniform(SupportSpec::finite(0.0, 1.0)).draw(10000, 2024);
  {
    std::ofstream out(s.dir / "sample.csv");
    out << "x\n";
    for (double v : sample.values()) out << io::format_double(v) << '\n';
  }
  const json cfg{{"support", kUnitSupport}, {"basis", powers({1})}, {"sample", "sample.csv"}};
  const auto config = s.write("c.json", cfg);

  REQUIRE(cli::cmd_analyze(s.opts(config, "a")) == cli::kOk);
  const json m = read(s.dir / "a/model.json");
  CHECK(std::abs(m["lambda"][0].get<double>()) < 0.15);
  const json mom = read(s.dir / "a/moments.json");
  CHECK(mom["N"].get<int>() == 10000);
  const json sens = read(s.dir / "a/sensitivity.json");
  CHECK(sens["D"][0][0].get<double>() == doctest::Approx(-12.0).epsilon(0.05));

  const Csv band = read_csv(s.dir / "a/band.csv");
  CHECK(band.header ==
        std::vector<std::string>{"x", "f_star", "sigma2", "band_lo", "band_hi"});
  const auto& last = band.rows.back();
  CHECK(last[0] == 1.0);
  CHECK(last[4] - last[1] == doctest::Approx(0.0339).epsilon(0.05));
  CHECK(last[1] - last[3] == doctest::Approx(last[4] - last[1]).epsilon(1e-12));

  // Same inputs, same bytes.
  REQUIRE(cli::cmd_analyze(s.opts(config, "b")) == cli::kOk);
  for (const char* f : {"moments.json", "model.json", "sensitivity.json", "density.csv", "band.csv"}) {
    CHECK(slurp(s.dir / "a" / f) == slurp(s.dir / "b" / f));
  }

  SUBCASE("single observation") {
    std::ofstream(s.dir / "one.csv") << "x\n0.4\n";
    json c = cfg;
    c["sample"] = "one.csv";
    std::string err;
    CHECK(capture_stderr(err, [&] { return cli::cmd_analyze(s.opts(s.write("one.json", c))); }) ==
          cli::kConfigError);
  }
  SUBCASE("values outside the support") {
    std::ofstream(s.dir / "out.csv") << "x\n0.4\n1.7\n0.2\n-3\n";
    json c = cfg;
    c["sample"] = "out.csv";
    std::string err;
    CHECK(capture_stderr(err, [&] { return cli::cmd_analyze(s.opts(s.write("o.json", c))); }) ==
          cli::kConfigError);
    CHECK(err.find("1.7") != std::string::npos);
    CHECK(err.find("-3") != std::string::npos);
  }
}

TEST_CASE("simulate") {
  Scratch s("simulate");
  const json minimal{
      {"true_density", {{"kind", "uniform"}, {"support", kUnitSupport}}},
      {"basis", powers({1})},
      {"N_grid", {100}},
      {"replicates", 2}};
  REQUIRE(cli::cmd_simulate(s.opts(s.write("c.json", minimal), "a")) == cli::kOk);
  const Csv rep = read_csv(s.dir / "a/replicates.csv");
  CHECK(rep.header == std::vector<std::string>{"N", "replicate", "d_hat_1", "lambda_hat_1",
                                               "l1_err", "kl", "sup_err", "chan1_resid"});
  CHECK(rep.rows.size() == 2);
  const json agg = read(s.dir / "a/aggregate.json");
  CHECK(agg.contains("l1_slope"));

  auto o = s.opts(s.dir / "c.json", "b");
  CHECK(cli::cmd_simulate(o) == cli::kOk);
  CHECK(slurp(s.dir / "a/replicates.csv") == slurp(s.dir / "b/replicates.csv"));
  CHECK(slurp(s.dir / "a/aggregate.json") == slurp(s.dir / "b/aggregate.json"));
  o.out = s.dir / "c";
  o.seed = 99;
  CHECK(cli::cmd_simulate(o) == cli::kOk);
  CHECK(slurp(s.dir / "a/replicates.csv") != slurp(s.dir / "c/replicates.csv"));

  json missing = minimal;
  missing.erase("true_density");
  std::string err;
  CHECK(capture_stderr(err, [&] { return cli::cmd_simulate(s.opts(s.write("m.json", missing))); }) ==
        cli::kConfigError);
  CHECK(err.find("/true_density") != std::string::npos);

  json spike = minimal;
  spike["true_density"] = {{"kind", "grid_tabulated"}, {"support", kUnitSupport},
                           {"x", {0.0, 1e-4, 2e-4, 1.0}}, {"values", {0.0, 1.0, 0.0, 0.0}}};
  CHECK(capture_stderr(err, [&] { return cli::cmd_simulate(s.opts(s.write("e.json", spike))); }) ==
        cli::kConfigError);

  // A one-iteration budget makes the reference fit itself fail.
  json hard = minimal;
  hard["true_density"] = {{"kind", "truncated_exponential"}, {"support", kUnitSupport}, {"rate", 3.0}};
  hard["solver"] = {{"max_iter", 1}, {"initial_lambda", {0.0}}};
  CHECK(capture_stderr(err, [&] { return cli::cmd_simulate(s.opts(s.write("h.json", hard))); }) ==
        cli::kNotConverged);
}

TEST_CASE("invert-laplace") {
  Scratch s("laplace");
  const json cfg{{"alphas", {0.5, 1.0, 2.0}}, {"values", {2.0 / 3.0, 0.5, 1.0 / 3.0}}};
  REQUIRE(cli::cmd_invert_laplace(s.opts(s.write("c.json", cfg))) == cli::kOk);
  const Csv d = read_csv(s.dir / "out/density.csv");
  CHECK(d.rows.back()[0] == doctest::Approx(10.0));
  const auto x = column(d, 0);
  std::vector<double> err(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) err[i] = std::abs(d.rows[i][1] - std::exp(-x[i]));
  CHECK(simpson(x, err) <= 0.05);

  const json one{{"alphas", {1.0}}, {"values", {0.5}}};
  REQUIRE(cli::cmd_invert_laplace(s.opts(s.write("one.json", one), "one")) == cli::kOk);
  const json m = read(s.dir / "one/model.json");
  // grad_norm is |d - E[h]|, the reproduction error of the transform value.
  CHECK(m["target"][0].get<double>() == 0.5);
  CHECK(m["grad_norm"].get<double>() < 1e-8);

  const json rising{{"alphas", {0.5, 1.0}}, {"values", {0.3, 0.5}}};
  std::string e;
  CHECK(capture_stderr(e, [&] {
          return cli::cmd_invert_laplace(s.opts(s.write("r.json", rising), "r"));
        }) == cli::kInfeasible);

  const json ragged{{"alphas", {0.5, 1.0}}, {"values", {0.3}}};
  CHECK(capture_stderr(e, [&] {
          return cli::cmd_invert_laplace(s.opts(s.write("g.json", ragged), "g"));
        }) == cli::kConfigError);
}

TEST_CASE("binary: exit codes through the executable") {
  Scratch s("binary");
  const std::string exe = MAXENT_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + exe + "\" " + args + " > \"" + (s.dir / "log").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const auto ok = s.write("ok.json", fit_config({1}, {0.3}));
  const auto bad = s.write("bad.json", fit_config({1}, {1.5}));
  const std::string out = " --out \"" + (s.dir / "out").string() + "\"";
  CHECK(run("fit --config \"" + ok.string() + "\"" + out) == 0);
  CHECK(fs::exists(s.dir / "out/model.json"));
  CHECK(run("fit --config \"" + bad.string() + "\"" + out) == 2);
  CHECK(run("fit --config \"" + (s.dir / "nope.json").string() + "\"") == 1);
  CHECK(run("fit") == 1);
  CHECK(run("frobnicate --config \"" + ok.string() + "\"") == 1);
  CHECK(run("fit --config \"" + ok.string() + "\" --grid-points 1" + out) == 1);
  CHECK(run("fit --verbose --config \"" + ok.string() + "\" --grid-points 5" + out) == 0);
  CHECK(read_csv(s.dir / "out/density.csv").rows.size() == 5);
}
