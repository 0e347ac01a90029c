#pragma once

// Run configuration: a small TOML-like format (sections, `key = value`,
// strings, numbers, booleans, arrays, inline tables) plus `--key=value`
// overrides. Every accepted key is listed in known_config_keys(); anything else
// is rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evarfluid/constitutive.hpp"
#include "evarfluid/grid.hpp"
#include "evarfluid/operators.hpp"
#include "evarfluid/simulate.hpp"

namespace evf {

struct ConfigValue {
  enum class Kind { string, number, boolean, array, table };
  Kind kind = Kind::string;
  std::string text;  // string payload, or the source spelling for numbers/booleans
  double number = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> items;                          // array
  std::vector<std::pair<std::string, ConfigValue>> table;  // inline table
  int line = 0, column = 0;

  /// Canonical spelling used in the manifest echo.
  std::string render() const;
};

/// Flattened `section.key[.sub]` -> value. Inline tables are flattened; arrays are kept.
using ConfigMap = std::map<std::string, ConfigValue>;

/// Throws Error(parse-error) with "<origin>:<line>:<column>: <message>".
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<config>");
/// Parses one override value; unquoted words that are not numbers or booleans
/// are taken as strings.
ConfigValue parse_override_value(const std::string& text);

const std::vector<std::string>& known_config_keys();

/// Tolerances of the verification suites (all overridable under [tolerances]).
struct Tolerances {
  double metric_algebraic = 1e-12;
  double metric_rate = 1e-9;
  double pullback = 1e-8;
  double pullback_refinement = 100.0;  // required shrink factor of the disagreement
  double pullback_floor = 64.0;        // roundoff floor in units of machine epsilon
  double euler_lagrange = 1e-8;
  double order_low = 1.9;
  double order_high = 2.1;
  double constrained = 1e-10;
  double action_slope = 0.15;          // band around slope 2
  double newtonian = 1e-10;
  double stress_order_low = 1.8;
  double stress_order_high = 2.2;
  double mass_drift = 1e-12;
  double momentum_drift = 1e-11;
  double energy_drift = 1e-7;
  double energy_budget = 1e-6;
  double thermo_order = 3.5;
  double divergence = 1e-11;
  double integration_by_parts = 1e-12;
  double angular_momentum_budget = 1e-8;  // relative to the initial angular momentum
};

struct InitialCondition {
  double amplitude = 1.0;
  double density = 1.0;   // multiplies rho of the scenario
  double theta = 1.0;     // base temperature for heat scenarios
  double delta = 0.1;     // temperature perturbation
  double width = 0.08;    // vortex width as a fraction of Lx
  Vec3 force{};           // uniform body force per mass
};

struct RunConfig {
  std::string command;  // verify-metric | verify-variational | verify-thermo | simulate
  std::string scenario = "taylor-green";
  SystemKind system = SystemKind::incompressible;
  Grid grid = Grid::make(64, 64, 1, 1.0, 1.0);
  ConstitutiveSet constitutive;
  Closure closure;
  double dt = 1e-3;
  double t_end = 0.1;
  Integrator integrator = Integrator::rk4;
  Backend backend = Backend::spectral;
  std::filesystem::path output = "evarfluid-out";
  std::uint64_t seed = 1;
  int threads = 0;                  // 0: EVARFLUID_THREADS or OpenMP default
  std::size_t snapshot_every = 0;   // 0: final state only
  InitialCondition initial;
  Tolerances tol;

  // verification knobs
  std::size_t probes = 10;
  std::size_t metric_points = 20;
  std::size_t quadrature_nodes = 8;
  double map_parameter = 0.8;
  std::size_t conservation_steps = 200;

  /// Every key that ended up set (file or flag), in canonical form, sorted.
  std::vector<std::pair<std::string, std::string>> echo;

  std::size_t steps() const;
};

/// Reads `path`, applies `overrides` ("--key=value" or "key=value") and
/// validates. An empty path means defaults plus overrides.
RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);
/// Same, from text already in memory.
RunConfig parse_config_string(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& origin = "<config>");

/// "newtonian(mu=0.5)" style description of a constitutive member.
std::string describe(const ConstitutiveFunction& f);
std::string describe(const ConstitutiveSet& cs);
std::string describe(const Closure& c);

}  // namespace evf
