// Acceptance run: each criterion executes its verification sections with the
// default configuration (64^2 spectral grid, 10 probes, 8-node quadrature,
// 20 metric points, 200 conservation steps) and must finish within its time
// budget. Prints one PASS/FAIL line per criterion; exit 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "evarfluid/config.hpp"
#include "evarfluid/error.hpp"
#include "evarfluid/parallel.hpp"
#include "evarfluid/suites.hpp"

using namespace evf;

namespace {

using Section = void (*)(const RunConfig&, SuiteReport&);

struct Criterion {
  int id;
  const char* title;
  const char* command;
  std::vector<Section> sections;
  double time_limit_s;
};

struct Outcome {
  bool pass = true;
  double seconds = 0.0;
  std::size_t rows = 0;
  std::vector<FailureRecord> failures;
};

Outcome evaluate(const Criterion& c) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const RunConfig cfg = parse_config_string(std::string("command = \"") + c.command + "\"\n", {});
    SuiteReport rep;
    for (Section s : c.sections) s(cfg, rep);
    o.rows = rep.rows.size();
    o.failures = rep.failures;
  } catch (const Error& e) {
    o.failures.push_back({c.title, e.code(), e.what(), 0.0, 0.0});
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.seconds > c.time_limit_s)
    o.failures.push_back({c.title, "time-limit-exceeded",
                          "took " + std::to_string(o.seconds) + " s, limit " +
                              std::to_string(c.time_limit_s) + " s",
                          o.seconds, c.time_limit_s});
  o.pass = o.failures.empty();
  return o;
}

}  // namespace

int main() {
  par::configure_from_env();
  const std::vector<Criterion> criteria{
      {1, "metric identities, 4 catalog maps x 20 probes", "verify-metric",
       {sections::metric_identities}, 5.0},
      {2, "energy pullback pairs W1, D1-D5 with refinement", "verify-metric",
       {sections::pullback_pairs}, 30.0},
      {3, "Euler-Lagrange residuals and constrained pressure, 64^2 spectral", "verify-variational",
       {sections::euler_lagrange, sections::constrained}, 60.0},
      {4, "action variation O(eps^2) slope, 2 maps x 2 perturbations", "verify-metric",
       {sections::action_variation}, 60.0},
      {5, "conservation (64^2, 200 RK4 steps) and forced budgets", "verify-thermo",
       {sections::conservation, sections::force_budgets}, 120.0},
      {6, "energy equality and entropy production sign", "verify-thermo",
       {sections::energy_budget, sections::entropy_production}, 60.0},
      {7, "thermodynamic identities at integrator order", "verify-thermo",
       {sections::thermo_identities}, 60.0},
      {8, "Newtonian reduction against the plane-wave oracle", "verify-variational",
       {sections::newtonian_reduction}, 10.0},
      {9, "stress and flux from energy derivatives, O(h^2) over three h", "verify-variational",
       {sections::stress_from_energy}, 10.0},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const Outcome o = evaluate(c);
    std::printf("[%s] criterion %d: %s (%zu checks, %.2f s, limit %.0f s)\n",
                o.pass ? "PASS" : "FAIL", c.id, c.title, o.rows, o.seconds, c.time_limit_s);
    for (const FailureRecord& f : o.failures)
      std::printf("       %s [%s]: %s\n", f.check.c_str(), f.code.c_str(), f.message.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
