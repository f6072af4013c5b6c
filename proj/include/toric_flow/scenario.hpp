#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toric_flow/analysis.hpp"

namespace toric_flow {

/// Malformed or inconsistent scenario file (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draw the initial point on E_h instead of giving it explicitly.
struct SamplerSpec {
  double h = 0.0;
  std::optional<std::vector<double>> c;  ///< fixed torus momenta; random if absent
  std::uint64_t seed = 0;
};

struct AnalysisParams {
  double horizon = 1000.0;
  double renorm_interval = 1.0;
  SectionSpec section;
  std::vector<double> h_grid;
  int samples_per_level = 1;
  int max_crossings = 10;
};

/// Everything one run of the tool needs. The coupling matrix is given either
/// directly (`A`) or as the integer automorphism it should exponentiate to
/// (`expA`, symmetric positive definite); whichever form was read is the one
/// written back.
struct Scenario {
  std::string name;
  int n = 1;
  std::vector<double> a_entries;                   ///< row-major A
  std::optional<std::vector<double>> exp_a_entries;
  double a0 = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
  Topology topology = Topology::Cover;
  std::optional<PhasePoint> initial;
  std::optional<SamplerSpec> sampler;
  IntegratorConfig integrator;
  long sample_stride = 1;
  AnalysisParams analysis;

  CouplingMatrix coupling() const;
  FourierPotential potential() const;
  /// Throws ConfigError for suspension mode without an integer automorphism.
  Model model() const;
  /// The explicit initial point, or one drawn from the sampler.
  PhasePoint initial_point() const;
  ScanSpec scan_spec(std::uint64_t seed) const;

  bool operator==(const Scenario& other) const;
};

/// Parses a version-1 scenario; unknown keys are errors.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::json to_json(const Scenario& s);

const char* to_string(Method m);
const char* to_string(Topology t);

}  // namespace toric_flow
