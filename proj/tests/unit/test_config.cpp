#include <string>

#include "doctest.h"
#include "evarfluid/config.hpp"
#include "evarfluid/error.hpp"

using namespace evf;

namespace {

// Runs `f` and returns the evf::Error it throws.
template <class F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an evf::Error");
  return Error("", "");
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("a minimal file is completed with defaults") {
  const RunConfig c = parse_config_string("command = \"simulate\"\nscenario = \"taylor-green\"\n", {});
  CHECK(c.command == "simulate");
  CHECK(c.grid.dims == std::array<std::size_t, 3>{64, 64, 1});
  CHECK(c.integrator == Integrator::rk4);
  CHECK(c.backend == Backend::spectral);
  CHECK(c.system == SystemKind::incompressible);
  CHECK(c.constitutive.e1.name() == "newtonian");
  CHECK(c.steps() == 100);
}

TEST_CASE("negative viscosity is rejected as invalid constitutive parameters") {
  const Error e = error_of([] {
    parse_config_string("command = \"simulate\"\n[constitutive]\nmu = -1\n", {});
  });
  CHECK(e.code() == std::string(errc::validation_error));
  CHECK(contains(e.what(), "invalid constitutive parameters"));
  CHECK(contains(e.what(), "constitutive.mu"));
}

TEST_CASE("flags override the file") {
  const std::string text = "command = \"simulate\"\ndt = 5e-3\n[grid]\nn = 32\n";
  CHECK(parse_config_string(text, {}).dt == 5e-3);
  const RunConfig c = parse_config_string(text, {"--dt=1e-3", "--grid.n=16", "--scenario=heat"});
  CHECK(c.dt == 1e-3);
  CHECK(c.grid.dims[0] == 16);
  CHECK(c.scenario == "heat");
}

TEST_CASE("parse errors carry line and column") {
  const Error e = error_of([] { parse_config_string("command = \"simulate\"\ndt = = 3\n", {}, "run.toml"); });
  CHECK(e.code() == std::string(errc::parse_error));
  CHECK(contains(e.what(), "run.toml:2:"));

  const Error unterminated = error_of([] { parse_config_string("command = \"simulate\n", {}); });
  CHECK(unterminated.code() == std::string(errc::parse_error));
  CHECK(contains(unterminated.what(), ":1:"));

  const Error dup = error_of([] { parse_config_string("command = \"simulate\"\ncommand = \"simulate\"\n", {}); });
  CHECK(contains(dup.what(), "duplicate key"));
}

TEST_CASE("unknown keys and values are rejected by name") {
  const Error key = error_of([] { parse_config_string("command = \"simulate\"\nvelocity = 3\n", {}); });
  CHECK(key.code() == std::string(errc::validation_error));
  CHECK(contains(key.what(), "'velocity'"));
  CHECK(contains(key.what(), "line 2"));

  const Error flag = error_of([] { parse_config_string("command = \"simulate\"\n", {"--grid.m=3"}); });
  CHECK(contains(flag.what(), "'grid.m'"));

  const Error scen = error_of([] { parse_config_string("command = \"simulate\"\nscenario = \"storm\"\n", {}); });
  CHECK(contains(scen.what(), "scenario"));

  const Error missing = error_of([] { parse_config_string("dt = 1e-3\n", {}); });
  CHECK(contains(missing.what(), "command"));
}

TEST_CASE("constitutive members from shorthand and inline tables") {
  const RunConfig c = parse_config_string(
      "command = \"verify-variational\"\n"
      "[constitutive]\n"
      "family = \"power_law\"\nmu = 0.5\np = 1.5\nkappa = 0.1\n"
      "e2 = {family = \"newtonian\", mu = 0.25}\n",
      {});
  CHECK(c.constitutive.e1.name() == "power_law");
  CHECK(c.constitutive.e1.param("p") == 1.5);
  CHECK(c.constitutive.e3.param("mu") == 0.5);
  CHECK(c.constitutive.e2.name() == "newtonian");
  CHECK(c.constitutive.e2.param("mu") == 0.25);
  CHECK(c.constitutive.e4.param("mu") == 0.1);
  CHECK(c.constitutive.e5.is_zero());
  CHECK(describe(c.constitutive.e1) == "power_law(mu=0.5, p=1.5)");
}

TEST_CASE("tolerances and closure are configurable") {
  const RunConfig c = parse_config_string(
      "command = \"verify-thermo\"\n[tolerances]\nenergy_budget = 1e-5\n"
      "[closure]\ngamma = 2.0\ncv = 2.5\n",
      {"--tolerances.divergence=1e-10"});
  CHECK(c.tol.energy_budget == 1e-5);
  CHECK(c.tol.divergence == 1e-10);
  CHECK(c.tol.mass_drift == 1e-12);
  CHECK(c.closure.gamma == 2.0);
  CHECK(c.closure.cv == 2.5);
  CHECK_THROWS_AS(parse_config_string("command = \"verify-thermo\"\n[closure]\ngamma = 0.5\n", {}), Error);
}

TEST_CASE("the echo lists every key that was set") {
  const RunConfig c = parse_config_string("command = \"simulate\"\n[grid]\nn = 32\n", {"--dt=2e-3"});
  bool saw_dt = false, saw_grid = false;
  for (const auto& [k, v] : c.echo) {
    if (k == "dt") saw_dt = true;
    if (k == "grid.n") saw_grid = v == "32";
  }
  CHECK(saw_dt);
  CHECK(saw_grid);
}
