#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "evarfluid/config.hpp"
#include "evarfluid/suites.hpp"

using namespace evf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("evarfluid-test-" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_simulation(const std::string& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> o{"--grid.n=16", "--dt=2e-3", "--t_end=0.02", "--output=" + out};
  o.insert(o.end(), extra.begin(), extra.end());
  return parse_config_string("command = \"simulate\"\n", o);
}

}  // namespace

TEST_CASE("scenarios apply density scaling, temperature and body force") {
  RunConfig c = small_simulation("unused", {"--initial.density=2.0", "--initial.theta=1.5",
                                            "--initial.force=[0.1, 0.0, 0.0]"});
  const FluidState s = make_scenario(c);
  CHECK(s.rho.min() == 2.0);
  CHECK(s.theta.max() == 1.5);
  CHECK(s.force.at(3)[0] == 0.1);

  c.scenario = "density-bump";
  c.initial.amplitude = 0.2;
  CHECK(make_scenario(c).rho.max() == doctest::Approx(2.4).epsilon(1e-12));
}

TEST_CASE("simulate writes report, manifest, snapshots and an empty failure list") {
  const fs::path out = scratch("sim");
  std::ostringstream log;
  const RunConfig c = small_simulation(out.string(), {"--snapshot_every=5"});
  CHECK(run_command(c, log) == 0);
  CHECK(fs::exists(out / "report.csv"));
  CHECK(slurp(out / "failures.jsonl").empty());
  CHECK(fs::exists(out / "snapshots" / "step_000005_rho.bin"));
  CHECK(fs::exists(out / "snapshots" / "step_000010_vx.hdr"));
  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("grid = ") != std::string::npos);
  CHECK(manifest.find("closure = ") != std::string::npos);
  CHECK(manifest.find("grid.n = 16") != std::string::npos);

  std::istringstream report(slurp(out / "report.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(report, line)) ++lines;
  CHECK(lines == 1 + 11);  // header + steps 0..10
}

TEST_CASE("nonpositive initial density fails with a machine-readable record") {
  const fs::path out = scratch("neg");
  std::ostringstream log;
  const RunConfig c = small_simulation(out.string(), {"--system=compressible", "--initial.density=-1"});
  CHECK(run_command(c, log) != 0);
  const std::string failures = slurp(out / "failures.jsonl");
  CHECK(failures.find("\"code\":\"nonpositive-density\"") != std::string::npos);
}

TEST_CASE("identical configuration gives byte-identical reports") {
  const fs::path a = scratch("det-a"), b = scratch("det-b");
  const std::vector<std::string> smooth{"--system=compressible", "--scenario=smooth",
                                        "--initial.amplitude=0.1"};
  std::ostringstream log;
  CHECK(run_command(small_simulation(a.string(), smooth), log) == 0);
  CHECK(run_command(small_simulation(b.string(), smooth), log) == 0);
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
}

TEST_CASE("a tightened tolerance turns into a failure record and nonzero exit") {
  const fs::path out = scratch("tight");
  std::ostringstream log;
  const RunConfig c = parse_config_string(
      "command = \"verify-metric\"\n",
      {"--verify.metric_points=2", "--tolerances.metric_rate=1e-20", "--output=" + out.string()});
  CHECK(run_command(c, log) == 1);
  const std::string failures = slurp(out / "failures.jsonl");
  CHECK(failures.find("jacobian-rate") != std::string::npos);
  CHECK(failures.find("tolerance-exceeded") != std::string::npos);
}

TEST_CASE("verify-metric section rows use the metric columns") {
  RunConfig c = parse_config_string("command = \"verify-metric\"\n", {"--verify.metric_points=3"});
  SuiteReport r;
  sections::metric_identities(c, r);
  CHECK(r.rows.size() == 4 * 3 * 6);
  for (const auto& row : r.rows) CHECK(row.size() == metric_columns().size());
  CHECK(r.failures.empty());
}
