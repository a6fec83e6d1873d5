// Times the OpenMP replicate harness against the serial reference and checks
// that both produce the same records.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>

#include <omp.h>

#include "maxent/experiment.hpp"

using namespace maxent;

namespace {

// Best of `reps` wall-clock timings.
template <typename F>
double seconds(F&& f, int reps = 3) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same_records(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.ok != y.ok || x.d_hat != y.d_hat || x.l1_err != y.l1_err || x.kl != y.kl) return false;
    if (x.ok && x.lambda_hat != y.lambda_hat) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const int replicates = argc > 1 ? std::atoi(argv[1]) : 500;

  ExperimentConfig cfg(TrueDensity::uniform(SupportSpec::finite(0.0, 1.0)),
                       MomentBasis::powers({1, 2}));
  cfg.n_grid = {100, 1000, 10000};
  cfg.replicates = replicates;
  cfg.grid_points = {0.0, 0.25, 0.5, 0.75, 1.0};

  std::optional<ExperimentResult> serial;
  std::optional<ExperimentResult> parallel;
  (void)run_replicates(cfg);  // warm-up
  const double t_serial = seconds([&] { serial = run_replicates_serial(cfg); });
  const double t_parallel = seconds([&] { parallel = run_replicates(cfg); });

  std::printf("cells            %zu\n", serial->records.size());
  std::printf("threads          %d\n", omp_get_max_threads());
  std::printf("serial   [s]     %.3f\n", t_serial);
  std::printf("parallel [s]     %.3f\n", t_parallel);
  std::printf("speedup          %.2fx\n", t_serial / t_parallel);
  const bool same = same_records(*serial, *parallel);
  std::printf("identical        %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
