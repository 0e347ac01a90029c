#pragma once

// Verification suites and the simulation driver behind the command-line tool.
// Each suite produces CSV rows plus one failure record per failed check; the
// tool writes them to report.csv and failures.jsonl.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "evarfluid/config.hpp"

namespace evf {

struct FailureRecord {
  std::string check;
  std::string code;     // machine-readable: "tolerance-exceeded" or an evf::errc code
  std::string message;
  double measured = 0.0;
  double tolerance = 0.0;
};

struct SuiteReport {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<FailureRecord> failures;
  std::vector<std::string> notes;  // free-form lines for the manifest

  std::size_t failed() const { return failures.size(); }
};

/// Column sets of the three verification reports.
std::vector<std::string> metric_columns();
std::vector<std::string> variational_columns();
std::vector<std::string> thermo_columns();

/// Suite sections. Each appends rows (in its suite's columns) and failure
/// records to `out`; the run_verify_* functions are their concatenation.
namespace sections {
void metric_identities(const RunConfig& cfg, SuiteReport& out);
void pullback_pairs(const RunConfig& cfg, SuiteReport& out);
void divergence_identities(const RunConfig& cfg, SuiteReport& out);
void action_variation(const RunConfig& cfg, SuiteReport& out);

void euler_lagrange(const RunConfig& cfg, SuiteReport& out);
void constrained(const RunConfig& cfg, SuiteReport& out);
void integration_by_parts(const RunConfig& cfg, SuiteReport& out);
void newtonian_reduction(const RunConfig& cfg, SuiteReport& out);
void stress_from_energy(const RunConfig& cfg, SuiteReport& out);
void dissipation_sign(const RunConfig& cfg, SuiteReport& out);

void conservation(const RunConfig& cfg, SuiteReport& out);
void force_budgets(const RunConfig& cfg, SuiteReport& out);
void energy_budget(const RunConfig& cfg, SuiteReport& out);
void entropy_production(const RunConfig& cfg, SuiteReport& out);
void thermo_identities(const RunConfig& cfg, SuiteReport& out);
void closure_consistency(const RunConfig& cfg, SuiteReport& out);
void incompressible_divergence(const RunConfig& cfg, SuiteReport& out);
}  // namespace sections

/// Metric identities at seeded probe points for the four catalog maps, energy
/// pullback pairs, divergence identities and the action-variation check.
/// Columns: identity_name, map, t, lhs, rhs, abs_err, rel_err, tolerance, pass.
SuiteReport run_verify_metric(const RunConfig& cfg);

/// Euler-Lagrange residuals for every energy functional, the constrained
/// (divergence-free) case, integration by parts, the Newtonian reduction, the
/// stress-from-energy derivative check and the dissipation sign.
/// Columns: theorem, backend, resolution, probe_id, epsilon, residual, observed_order, pass.
SuiteReport run_verify_variational(const RunConfig& cfg);

/// Conservation drifts, body-force budgets, the incompressible energy budget,
/// entropy production sign and the thermodynamic identities under dt refinement.
/// Columns: check, case, measured, tolerance, pass.
SuiteReport run_verify_thermo(const RunConfig& cfg);

/// Runs the configured scenario; one CSV row of diagnostics per step and
/// snapshots under `snapshot_dir`.
SuiteReport run_simulate(const RunConfig& cfg, const std::filesystem::path& snapshot_dir);

/// Builds the scenario's initial state (before Simulator::prepare).
FluidState make_scenario(const RunConfig& cfg);

/// Runs cfg.command and writes manifest.txt, report.csv, failures.jsonl (and
/// snapshots/) under cfg.output. Returns 0 iff no failure records were written.
int run_command(const RunConfig& cfg, std::ostream& log);

}  // namespace evf
