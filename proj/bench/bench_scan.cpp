// Times entropy_scan_serial against the OpenMP entropy_scan on the cat-map
// suspension with V = cos(2 pi s).

#include <chrono>
#include <cstdio>

#include <CLI11.hpp>

#include "toric_flow/analysis.hpp"

using namespace toric_flow;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy scan benchmark"};
  int threads = 0;
  int samples = 4;
  double horizon = 200.0;
  int repeats = 3;
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  app.add_option("--samples", samples, "samples per level");
  app.add_option("-T,--horizon", horizon, "MLE horizon");
  app.add_option("--repeats", repeats, "timed repetitions, best is reported");
  CLI11_PARSE(app, argc, argv);

  TorusMatrix cat(2, 2);
  cat << 2, 1, 1, 1;
  const Model model(CouplingMatrix::log_of(cat), FourierPotential(0.0, {1.0}, {}),
                    Topology::Suspension);
  ScanSpec spec;
  spec.h_grid = {-0.5, 0.0, 0.5, 2.0};
  spec.samples_per_level = samples;
  spec.horizon = horizon;
  spec.cfg.dt = 1e-2;
  spec.seed = 7;

  std::vector<ScanRow> serial, parallel;
  double best_serial = 1e300, best_parallel = 1e300;
  for (int r = 0; r < repeats; ++r) {
    best_serial = std::min(best_serial, seconds([&] { serial = entropy_scan_serial(model, spec); }));
    best_parallel = std::min(best_parallel, seconds([&] { parallel = entropy_scan(model, spec, threads); }));
  }
  const bool same = scan_csv(serial) == scan_csv(parallel);
  std::printf("runs          %zu\n", serial.size());
  std::printf("serial        %.3f s\n", best_serial);
  std::printf("parallel      %.3f s (threads %d)\n", best_parallel, threads);
  std::printf("speedup       %.2f\n", best_serial / best_parallel);
  std::printf("identical     %s\n", same ? "yes" : "no");
  return same ? 0 : 1;
}
