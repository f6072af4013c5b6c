// toric-flow: scenario-driven front end for the toric_flow library.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "toric_flow/errors.hpp"
#include "toric_flow/scenario.hpp"
#include "toric_flow/verify.hpp"

namespace fs = std::filesystem;
using namespace toric_flow;

namespace {

enum ExitCode { kOk = 0, kVerifyFailed = 1, kConfig = 2, kNumerical = 3 };

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string point_cells(const PhasePoint& z) {
  std::string row;
  for (int i = 0; i < z.dim(); ++i) row += num(z.x[i]) + ',';
  row += num(z.s) + ',';
  for (int i = 0; i < z.dim(); ++i) row += num(z.p[i]) + ',';
  row += num(z.p_s);
  return row;
}

std::string point_header(int n) {
  std::string h;
  for (int i = 1; i <= n; ++i) h += "x_" + std::to_string(i) + ',';
  h += "s,";
  for (int i = 1; i <= n; ++i) h += "p_" + std::to_string(i) + ',';
  h += "p_s";
  return h;
}

int cmd_simulate(const Scenario& sc, const fs::path& out) {
  const Model model = sc.model();
  IntegrateOptions opts;
  opts.sample_stride = sc.sample_stride;
  const Trajectory traj = integrate(model, sc.initial_point(), sc.integrator, opts);
  std::string csv = "t," + point_header(model.dim()) + ",H_drift\n";
  for (std::size_t k = 0; k < traj.samples.size(); ++k)
    csv += num(traj.times[k]) + ',' + point_cells(traj.samples[k]) + ',' +
           num(traj.energy_drift[k]) + '\n';
  write_file(out / "trajectory.csv", csv);
  std::cerr << "simulate: " << traj.samples.size() << " samples, max |dH| = "
            << traj.max_energy_drift << '\n';
  return kOk;
}

double angle_gap(double a, double b) {
  const double d = std::abs(reduce_angle(a) - reduce_angle(b));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

// Largest coordinate change between a crossing and the next one in the same
// direction; angles compared on the circle.
double return_deviation(const SectionCrossing& a, const SectionCrossing& b) {
  double d = std::max({std::abs(a.z.s - b.z.s), std::abs(a.z.p_s - b.z.p_s),
                       (a.z.p - b.z.p).cwiseAbs().maxCoeff()});
  for (int i = 0; i < a.z.dim(); ++i) d = std::max(d, angle_gap(a.z.x[i], b.z.x[i]));
  return d;
}

int cmd_poincare(const Scenario& sc, const fs::path& out) {
  const Model model = sc.model();
  const auto xs = find_section_crossings(model, sc.initial_point(), sc.integrator,
                                         sc.analysis.section, sc.analysis.max_crossings);
  std::string csv = "index,t,direction,grazing," + point_header(model.dim()) + '\n';
  for (std::size_t k = 0; k < xs.size(); ++k)
    csv += std::to_string(k) + ',' + num(xs[k].t) + ',' + to_string(xs[k].direction) + ',' +
           (xs[k].grazing ? "1" : "0") + ',' + point_cells(xs[k].z) + '\n';
  write_file(out / "crossings.csv", csv);

  std::optional<double> worst;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (std::size_t j = k + 1; j < xs.size(); ++j) {
      if (xs[j].direction != xs[k].direction) continue;
      worst = std::max(worst.value_or(0.0), return_deviation(xs[k], xs[j]));
      break;
    }
  }
  const std::string summary = worst ? "identity: max deviation " + num(*worst)
                                    : std::string("identity: no return within t_end");
  write_file(out / "poincare_summary.txt", summary + '\n');
  std::cout << summary << '\n';
  return kOk;
}

int cmd_reduce(const Scenario& sc, const fs::path& out) {
  const Model model = sc.model();
  const PhasePoint z = sc.initial_point();
  const int n = model.dim();
  const double h = model.energy(z);
  const LeafDescriptor leaf = leaf_classify(model, z.p, h, z.s);
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };

  std::string csv = "kind,regular,h,s1,s2,period,reduced_frequency";
  for (int i = 1; i <= n; ++i) csv += ",omega_" + std::to_string(i);
  for (int i = 1; i <= n; ++i) csv += ",flat_velocity_" + std::to_string(i);
  csv += ",critical_s,quadrature_nodes,quadrature_rel_change,note\n";
  csv += std::string(to_string(leaf.kind)) + ',' + (leaf.regular ? "1" : "0") + ',' + num(h) +
         ',' + opt(leaf.s1) + ',' + opt(leaf.s2) + ',' + opt(leaf.period) + ',' +
         opt(leaf.reduced_frequency);
  for (int i = 0; i < n; ++i) csv += ',' + (leaf.frequencies ? num((*leaf.frequencies)[i]) : "");
  for (int i = 0; i < n; ++i)
    csv += ',' + (leaf.flat_velocity ? num((*leaf.flat_velocity)[i]) : "");
  std::string note = leaf.note;
  for (char& ch : note)
    if (ch == ',' || ch == '\n') ch = ';';
  csv += ',' + opt(leaf.critical_s) + ',' + std::to_string(leaf.quadrature_nodes) + ',' +
         num(leaf.quadrature_rel_change) + ',' + note + '\n';
  write_file(out / "leaf.csv", csv);
  std::cerr << "reduce: " << to_string(leaf.kind) << " leaf at h = " << h << '\n';
  return kOk;
}

int cmd_scan(const Scenario& sc, const fs::path& out, std::uint64_t seed, int threads) {
  const Model model = sc.model();
  if (sc.analysis.h_grid.empty()) throw ConfigError("scan-entropy needs analysis.h_grid");
  const auto rows = entropy_scan(model, sc.scan_spec(seed), threads);
  write_file(out / "scan.csv", scan_csv(rows));
  std::cerr << "scan-entropy: " << rows.size() << " runs\n";
  return kOk;
}

int cmd_extrema(const Scenario& sc, const fs::path& out) {
  const PotentialExtrema ext = find_extrema(sc.potential());
  std::string csv = "kind,value,s\n";
  for (double s : ext.argmin) csv += "min," + num(ext.v_min) + ',' + num(s) + '\n';
  for (double s : ext.argmax) csv += "max," + num(ext.v_max) + ',' + num(s) + '\n';
  write_file(out / "extrema.csv", csv);
  std::cout << "V_min = " << num(ext.v_min) << ", V_max = " << num(ext.v_max)
            << (ext.constant ? " (constant)" : "") << '\n';
  return kOk;
}

int cmd_verify(const Scenario& sc, const fs::path& out) {
  const VerifyReport report = verify_suite(sc);
  std::cout << report.table();
  std::string csv = "check,measured,bound,passed,detail\n";
  for (const auto& c : report.checks) {
    std::string detail = c.detail;
    for (char& ch : detail)
      if (ch == ',' || ch == '\n') ch = ';';
    csv += c.name + ',' + num(c.measured) + ',' + num(c.bound) + ',' + (c.passed ? "1" : "0") +
           ',' + detail + '\n';
  }
  write_file(out / "verify.csv", csv);
  return report.all_passed() ? kOk : kVerifyFailed;
}

int threads_from_env() {
  const char* env = std::getenv("TORIC_FLOW_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) throw ConfigError("TORIC_FLOW_THREADS must be a non-negative integer");
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic flows with a fiber potential on torus bundles"};
  app.require_subcommand(1, 1);

  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  const char* names[] = {"simulate", "poincare", "reduce", "scan-entropy", "extrema", "verify"};
  const char* help[] = {"integrate and write trajectory.csv",
                        "section crossings and the return-map identity check",
                        "leaf report for the initial point's energy level",
                        "finite-time Lyapunov scan over analysis.h_grid",
                        "global extrema of the potential",
                        "run the invariant suite and print a pass/fail table"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config, "scenario JSON")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "RNG seed (default: sampler.seed or 0)");
    sub->add_option("--threads", threads, "worker threads (default: $TORIC_FLOW_THREADS)")
        ->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    const Scenario sc = load_scenario(config);
    const fs::path out(out_dir);
    fs::create_directories(out);
    const std::uint64_t run_seed = seed.value_or(sc.sampler ? sc.sampler->seed : 0);
    const int nthreads = threads ? *threads : threads_from_env();

    if (cmd == "simulate") return cmd_simulate(sc, out);
    if (cmd == "poincare") return cmd_poincare(sc, out);
    if (cmd == "reduce") return cmd_reduce(sc, out);
    if (cmd == "scan-entropy") return cmd_scan(sc, out, run_seed, nthreads);
    if (cmd == "extrema") return cmd_extrema(sc, out);
    return cmd_verify(sc, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const StepFailure& e) {
    std::cerr << "numerical failure: " << e.what() << " (t = " << e.time()
              << ", residual = " << e.residual() << ")\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}
