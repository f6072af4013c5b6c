#include "toric_flow/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

using nlohmann::json;

void only_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw ConfigError(std::string(where) + ": unknown key \"" + item.key() + "\"");
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) {
    throw ConfigError(std::string(where) + ": missing required key \"" + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const char* where, T fallback) {
  return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

TorusVector to_vector(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                      std::to_string(v.size()));
  }
  TorusVector out(n);
  for (int i = 0; i < n; ++i) out[i] = v[i];
  return out;
}

std::vector<double> from_vector(const TorusVector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Method parse_method(const std::string& s) {
  if (s == "midpoint") return Method::ImplicitMidpoint;
  if (s == "midpoint4") return Method::ImplicitMidpoint4;
  if (s == "rk4") return Method::RK4;
  throw ConfigError("integrator.method: expected midpoint, midpoint4 or rk4, got " + s);
}

Direction parse_direction(const std::string& s) {
  if (s == "up") return Direction::Up;
  if (s == "down") return Direction::Down;
  if (s == "both") return Direction::Both;
  throw ConfigError("analysis.section.direction: expected up, down or both, got " + s);
}

bool same_point(const PhasePoint& a, const PhasePoint& b) {
  return a.x == b.x && a.s == b.s && a.p == b.p && a.p_s == b.p_s;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::ImplicitMidpoint: return "midpoint";
    case Method::ImplicitMidpoint4: return "midpoint4";
    case Method::RK4: return "rk4";
  }
  return "unknown";
}

const char* to_string(Topology t) {
  return t == Topology::Cover ? "cover" : "suspension";
}

CouplingMatrix Scenario::coupling() const {
  try {
    if (exp_a_entries) {
      const CouplingMatrix m = CouplingMatrix::from_row_major(n, *exp_a_entries);
      return CouplingMatrix::log_of(m.matrix());
    }
    return CouplingMatrix::from_row_major(n, a_entries);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("A: ") + e.what());
  }
}

FourierPotential Scenario::potential() const {
  try {
    return FourierPotential(a0, cos_coeffs, sin_coeffs);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("potential: ") + e.what());
  }
}

Model Scenario::model() const {
  try {
    return Model(coupling(), potential(), topology);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
}

PhasePoint Scenario::initial_point() const {
  if (initial) return *initial;
  if (!sampler) throw ConfigError("scenario has neither \"initial\" nor \"sampler\"");
  const Model m = model();
  if (!sampler->c) {
    const auto z = draw_on_level(m, sampler->h, sampler->seed, 0, 0);
    if (!z) throw ConfigError("sampler: energy level h is empty (h < V_min)");
    return *z;
  }
  // Fixed momenta: start at the bottom of the V_eff well, p_s from the shell.
  const TorusVector c = to_vector(*sampler->c, n, "sampler.c");
  const TurningPoints tp = turning_points(m, c, sampler->h);
  if (tp.kind == TurningKind::Empty) throw ConfigError("sampler: E_h is empty for these momenta");
  PhasePoint z = PhasePoint::zero(n);
  z.s = tp.seed;
  z.p = c;
  z.p_s = std::sqrt(std::max(0.0, 2.0 * (sampler->h - effective_potential(m, c, z.s, 0))));
  return z;
}

ScanSpec Scenario::scan_spec(std::uint64_t seed) const {
  ScanSpec spec;
  spec.h_grid = analysis.h_grid;
  spec.samples_per_level = analysis.samples_per_level;
  spec.horizon = analysis.horizon;
  spec.renorm_interval = analysis.renorm_interval;
  spec.cfg = integrator;
  spec.seed = seed;
  return spec;
}

bool Scenario::operator==(const Scenario& o) const {
  const bool init_eq = initial.has_value() == o.initial.has_value() &&
                       (!initial || same_point(*initial, *o.initial));
  const bool sampler_eq = sampler.has_value() == o.sampler.has_value() &&
                          (!sampler || (sampler->h == o.sampler->h && sampler->c == o.sampler->c &&
                                        sampler->seed == o.sampler->seed));
  const auto& ai = integrator;
  const auto& bi = o.integrator;
  const auto& aa = analysis;
  const auto& ba = o.analysis;
  return name == o.name && n == o.n && a_entries == o.a_entries &&
         exp_a_entries == o.exp_a_entries && potential() == o.potential() &&
         topology == o.topology && init_eq && sampler_eq && ai.method == bi.method &&
         ai.dt == bi.dt && ai.t_end == bi.t_end && ai.fixed_point_tol == bi.fixed_point_tol &&
         ai.max_fixed_point_iters == bi.max_fixed_point_iters &&
         sample_stride == o.sample_stride && aa.horizon == ba.horizon &&
         aa.renorm_interval == ba.renorm_interval && aa.section.s0 == ba.section.s0 &&
         aa.section.direction == ba.section.direction && aa.h_grid == ba.h_grid &&
         aa.samples_per_level == ba.samples_per_level && aa.max_crossings == ba.max_crossings;
}

Scenario parse_scenario(const json& j) {
  only_keys(j, "scenario",
            {"version", "name", "n", "A", "expA", "potential", "mode", "initial", "sampler",
             "integrator", "analysis"});
  const int version = get<int>(j, "version", "scenario");
  if (version != 1) throw ConfigError("scenario: unsupported version " + std::to_string(version));

  Scenario s;
  s.name = get_or<std::string>(j, "name", "scenario", "");
  s.n = get<int>(j, "n", "scenario");
  if (s.n < 1 || s.n > kMaxTorusDim) throw ConfigError("scenario: n out of range");

  const bool has_a = j.contains("A");
  const bool has_exp = j.contains("expA");
  if (has_a == has_exp) throw ConfigError("scenario: give exactly one of \"A\" or \"expA\"");
  if (has_a) {
    s.a_entries = get<std::vector<double>>(j, "A", "scenario");
  } else {
    s.exp_a_entries = get<std::vector<double>>(j, "expA", "scenario");
  }
  const std::size_t nn = static_cast<std::size_t>(s.n) * s.n;
  if ((has_a ? s.a_entries.size() : s.exp_a_entries->size()) != nn) {
    throw ConfigError("scenario: A must have n*n = " + std::to_string(nn) + " entries");
  }

  if (j.contains("potential")) {
    const json& p = j.at("potential");
    only_keys(p, "potential", {"a0", "cos", "sin"});
    s.a0 = get_or<double>(p, "a0", "potential", 0.0);
    s.cos_coeffs = get_or<std::vector<double>>(p, "cos", "potential", {});
    s.sin_coeffs = get_or<std::vector<double>>(p, "sin", "potential", {});
  }

  const std::string mode = get_or<std::string>(j, "mode", "scenario", "cover");
  if (mode == "cover") {
    s.topology = Topology::Cover;
  } else if (mode == "suspension") {
    s.topology = Topology::Suspension;
  } else {
    throw ConfigError("scenario.mode: expected cover or suspension, got " + mode);
  }

  if (j.contains("initial")) {
    const json& in = j.at("initial");
    only_keys(in, "initial", {"x", "s", "p", "p_s"});
    PhasePoint z;
    z.x = to_vector(get<std::vector<double>>(in, "x", "initial"), s.n, "initial.x");
    z.s = get<double>(in, "s", "initial");
    z.p = to_vector(get<std::vector<double>>(in, "p", "initial"), s.n, "initial.p");
    z.p_s = get<double>(in, "p_s", "initial");
    if (!z.finite()) throw ConfigError("initial: non-finite value");
    s.initial = z;
  }
  if (j.contains("sampler")) {
    const json& sm = j.at("sampler");
    only_keys(sm, "sampler", {"h", "c", "seed"});
    SamplerSpec spec;
    spec.h = get<double>(sm, "h", "sampler");
    if (sm.contains("c")) {
      spec.c = get<std::vector<double>>(sm, "c", "sampler");
      to_vector(*spec.c, s.n, "sampler.c");
    }
    spec.seed = get_or<std::uint64_t>(sm, "seed", "sampler", 0);
    s.sampler = spec;
  }

  if (j.contains("integrator")) {
    const json& in = j.at("integrator");
    only_keys(in, "integrator",
              {"method", "dt", "t_end", "fixed_point_tol", "max_fixed_point_iters",
               "sample_stride"});
    s.integrator.method = parse_method(get_or<std::string>(in, "method", "integrator", "midpoint"));
    s.integrator.dt = get_or<double>(in, "dt", "integrator", s.integrator.dt);
    s.integrator.t_end = get_or<double>(in, "t_end", "integrator", s.integrator.t_end);
    s.integrator.fixed_point_tol =
        get_or<double>(in, "fixed_point_tol", "integrator", s.integrator.fixed_point_tol);
    s.integrator.max_fixed_point_iters =
        get_or<int>(in, "max_fixed_point_iters", "integrator", s.integrator.max_fixed_point_iters);
    s.sample_stride = get_or<long>(in, "sample_stride", "integrator", 1);
  }
  try {
    s.integrator.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (s.sample_stride < 1) throw ConfigError("integrator.sample_stride must be >= 1");

  if (j.contains("analysis")) {
    const json& an = j.at("analysis");
    only_keys(an, "analysis",
              {"T", "renorm_interval", "section", "h_grid", "samples_per_level", "max_crossings"});
    s.analysis.horizon = get_or<double>(an, "T", "analysis", s.analysis.horizon);
    s.analysis.renorm_interval =
        get_or<double>(an, "renorm_interval", "analysis", s.analysis.renorm_interval);
    if (an.contains("section")) {
      const json& sec = an.at("section");
      only_keys(sec, "analysis.section", {"s0", "direction"});
      s.analysis.section.s0 = get_or<double>(sec, "s0", "analysis.section", 0.5);
      s.analysis.section.direction =
          parse_direction(get_or<std::string>(sec, "direction", "analysis.section", "up"));
    }
    s.analysis.h_grid = get_or<std::vector<double>>(an, "h_grid", "analysis", {});
    s.analysis.samples_per_level = get_or<int>(an, "samples_per_level", "analysis", 1);
    s.analysis.max_crossings = get_or<int>(an, "max_crossings", "analysis", 10);
    if (s.analysis.samples_per_level < 1) throw ConfigError("analysis.samples_per_level must be >= 1");
  }

  // Surface coefficient and suspension problems at load time.
  s.model();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_scenario(j);
}

json to_json(const Scenario& s) {
  json j;
  j["version"] = 1;
  j["name"] = s.name;
  j["n"] = s.n;
  if (s.exp_a_entries) {
    j["expA"] = *s.exp_a_entries;
  } else {
    j["A"] = s.a_entries;
  }
  const FourierPotential v = s.potential();
  j["potential"] = {{"a0", v.a0()}, {"cos", v.cos_coeffs()}, {"sin", v.sin_coeffs()}};
  j["mode"] = to_string(s.topology);
  if (s.initial) {
    j["initial"] = {{"x", from_vector(s.initial->x)},
                    {"s", s.initial->s},
                    {"p", from_vector(s.initial->p)},
                    {"p_s", s.initial->p_s}};
  }
  if (s.sampler) {
    json sm = {{"h", s.sampler->h}, {"seed", s.sampler->seed}};
    if (s.sampler->c) sm["c"] = *s.sampler->c;
    j["sampler"] = sm;
  }
  j["integrator"] = {{"method", to_string(s.integrator.method)},
                     {"dt", s.integrator.dt},
                     {"t_end", s.integrator.t_end},
                     {"fixed_point_tol", s.integrator.fixed_point_tol},
                     {"max_fixed_point_iters", s.integrator.max_fixed_point_iters},
                     {"sample_stride", s.sample_stride}};
  j["analysis"] = {{"T", s.analysis.horizon},
                   {"renorm_interval", s.analysis.renorm_interval},
                   {"section",
                    {{"s0", s.analysis.section.s0},
                     {"direction", to_string(s.analysis.section.direction)}}},
                   {"h_grid", s.analysis.h_grid},
                   {"samples_per_level", s.analysis.samples_per_level},
                   {"max_crossings", s.analysis.max_crossings}};
  return j;
}

}  // namespace toric_flow
