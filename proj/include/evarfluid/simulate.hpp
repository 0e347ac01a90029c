#pragma once

// Time integration of the compressible, incompressible and inviscid systems on
// a periodic box, plus conservation, energy-budget and thermodynamic
// diagnostics.
//
// Compressible runs advance the conserved densities (rho, rho v, e_A, C) in
// flux form, so their box integrals change only by roundoff (and by the body
// force). The entropy s is carried as an extra field advanced along
// trajectories by theta rho D_t s = div q_theta + e~_D.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evarfluid/constitutive.hpp"
#include "evarfluid/operators.hpp"

namespace evf {

struct FluidState {
  double t = 0.0;
  ScalarField rho;    // > 0
  VectorField v;
  ScalarField sigma;  // pressure
  ScalarField theta;  // temperature
  ScalarField e;      // internal energy per mass
  ScalarField c;      // concentration
  ScalarField s;      // entropy per mass
  VectorField force;  // F, force per mass

  /// rho = 1, v = 0, sigma = 0, theta = 1, e = cv, C = 0, s = 0, F = 0.
  static FluidState rest(const Grid& g, double cv = 1.0);
  const Grid& grid() const { return rho.grid; }
  /// Throws grid-mismatch, nonpositive-density, non-finite-state.
  void validate() const;
};

struct Closure {
  enum class Pressure { barotropic, prescribed };
  enum class Caloric { ideal, none };

  Pressure pressure = Pressure::barotropic;
  double a = 1.0;       // p(rho) = a rho^gamma
  double gamma = 1.4;
  Caloric caloric = Caloric::ideal;
  double cv = 1.0;

  /// Chemical potential p(rho) and p'(rho).
  double potential(double rho) const;
  double potential_deriv(double rho) const;
  /// Barotropic pressure rho p'(rho) - p(rho).
  double barotropic_pressure(double rho) const;
  /// d(barotropic pressure)/d rho = rho p''(rho).
  double sound_speed_sq(double rho) const;
  /// |(rho p' - p) - a (gamma - 1) rho^gamma| with p' from centered differences
  /// of step h; O(h^2).
  double consistency_error(double rho, double h) const;
  /// Throws invalid-argument for a <= 0, gamma <= 1 or cv <= 0.
  void validate() const;
};

enum class SystemKind { compressible, incompressible, euler_compressible, euler_incompressible };
std::string to_string(SystemKind k);
SystemKind system_kind_from_string(const std::string& name);

enum class Integrator { rk4, euler };
std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& name);

/// d/dt of (rho, rho v, e_A, C, s) for the compressible system.
struct CompressibleRates {
  ScalarField rho;
  VectorField momentum;
  ScalarField total_energy;
  ScalarField concentration;
  ScalarField entropy;
  ScalarField sigma;  // pressure used in the stress
};

/// d/dt of (rho, v, theta, C) for the incompressible system; sigma is the
/// zero-mean projection pressure.
struct IncompressibleRates {
  ScalarField rho;
  VectorField velocity;
  ScalarField theta;
  ScalarField concentration;
  ScalarField sigma;
};

CompressibleRates rhs_compressible(const FluidState& s, const ConstitutiveSet& cs,
                                   const Closure& closure, const Operators& ops);

/// `divergence_tolerance` bounds ||div v||_max / (||grad v||_max + 1) on entry.
IncompressibleRates rhs_incompressible(const FluidState& s, const ConstitutiveSet& cs,
                                       const Closure& closure, const Operators& ops,
                                       double divergence_tolerance = 1e-8);

/// Barotropic compressible Euler or incompressible Euler: the viscous and
/// diffusive members are dropped.
CompressibleRates rhs_inviscid_compressible(const FluidState& s, const Closure& closure,
                                            const Operators& ops);
IncompressibleRates rhs_inviscid_incompressible(const FluidState& s, const Closure& closure,
                                                const Operators& ops);

/// One system bound to its constitutive set, closure and grid operators.
class Simulator {
 public:
  Simulator(SystemKind kind, ConstitutiveSet cs, Closure closure, const Operators& ops);

  SystemKind kind() const { return kind_; }
  bool incompressible() const;
  const ConstitutiveSet& constitutive() const { return cs_; }
  const Closure& closure() const { return closure_; }
  const Operators& operators() const { return ops_; }

  /// Fills the derived fields (sigma, theta or e) of a freshly built state and
  /// projects v for incompressible kinds.
  FluidState prepare(FluidState s) const;
  /// Explicit step. Throws non-finite-state, nonpositive-density, divergence-drift.
  FluidState step(const FluidState& s, double dt, Integrator integrator = Integrator::rk4) const;
  /// Largest dt inside the explicit stability bound of the spectral operators.
  double stable_dt(const FluidState& s) const;

  double divergence_tolerance = 1e-8;
  /// Incompressible divergence bound checked after every step.
  double divergence_abort = 1e-9;

 private:
  using Vars = std::vector<ScalarField>;
  Vars pack(const FluidState& s) const;
  FluidState unpack(const Vars& u, const FluidState& like, double t) const;
  Vars rates(const FluidState& s) const;

  SystemKind kind_;
  ConstitutiveSet cs_;
  Closure closure_;
  const Operators& ops_;
};

struct DiagnosticsRecord {
  double t = 0.0;
  Vec3 momentum{};
  double total_energy = 0.0;  // int rho |v|^2/2 + rho e
  double kinetic_energy = 0.0;
  double concentration_total = 0.0;
  Vec3 angular_momentum{};    // box-centered coordinates
  double mass = 0.0;
  /// int e~_D / theta + q_theta . grad theta / theta^2; empty when theta <= 0 somewhere.
  std::optional<double> entropy_production;
  double dissipation = 0.0;     // int e~_D
  double pressure_work = 0.0;   // int (div v) sigma
  double force_power = 0.0;     // int rho F . v
  Vec3 force_total{};           // int rho F
  Vec3 force_torque{};          // int x x rho F
  double max_divergence = 0.0;  // ||div v||_max
  /// Filled from the five-point history (NaN at the two ends of a run):
  /// d/dt int rho|v|^2/2 + int (e~_D - (div v) sigma) - int rho F.v
  double energy_budget_residual = std::numeric_limits<double>::quiet_NaN();
  /// max_i |d/dt int rho v_i - int rho F_i|
  double momentum_budget_residual = std::numeric_limits<double>::quiet_NaN();
  /// |d/dt int e_A - int rho F.v|
  double total_energy_budget_residual = std::numeric_limits<double>::quiet_NaN();
  /// max_i |d/dt int x x rho v - int x x rho F|_i
  double angular_momentum_budget_residual = std::numeric_limits<double>::quiet_NaN();
};

DiagnosticsRecord diagnostics(const FluidState& s, const ConstitutiveSet& cs,
                              const Operators& ops);

/// Fourth-order central difference over five equally spaced samples, at the middle one.
double central_rate(const std::array<double, 5>& f, double dt);

/// Fills the budget residuals of records[2 .. n-3] (records spaced by dt).
void fill_budget_residuals(std::vector<DiagnosticsRecord>& records, double dt);

struct ThermoFields {
  ScalarField h;    // e + sigma / rho
  ScalarField s;    // entropy per mass
  ScalarField e_f;  // e - theta s
};

/// Throws nonpositive-density / nonpositive-temperature.
ThermoFields thermo_fields(const FluidState& s);

/// Max-norm residuals, at the middle state of a five-state history, of
///   rho D_t h - div q_theta - e~_D - D_t sigma                    (enthalpy)
///   theta rho D_t s - div q_theta - e~_D                          (entropy)
///   rho D_t e_F + s rho D_t theta - S:(D+ + D-) + e~_D            (free energy)
/// with D_t f = (five-point time difference) + v . grad f.
struct ThermoResiduals {
  double enthalpy = 0.0;
  double entropy = 0.0;
  double free_energy = 0.0;
};
ThermoResiduals thermo_identity_residuals(const std::array<const FluidState*, 5>& history,
                                          double dt, const ConstitutiveSet& cs,
                                          const Operators& ops);

struct RunOptions {
  double dt = 1e-3;
  std::size_t steps = 100;
  Integrator integrator = Integrator::rk4;
  /// Evaluate the thermodynamic identities along the run.
  bool thermo = false;
  /// Called with (step index, state) after every step and for the initial state.
  std::function<void(std::size_t, const FluidState&)> observer;
};

struct RunResult {
  FluidState final_state;
  std::vector<DiagnosticsRecord> records;  // one per step, including step 0
  ThermoResiduals thermo_max;              // max over interior steps (thermo only)
  std::size_t cfl_warnings = 0;            // steps with dt above stable_dt
  double min_stable_dt = 0.0;
};

RunResult run(const Simulator& sim, const FluidState& initial, const RunOptions& opts);

// Initial conditions on the grid of `g`. All return states with rho = 1 unless noted.

/// v = U (sin kx cos ky, -cos kx sin ky, 0) with k = 2 pi / L.
FluidState taylor_green(const Grid& g, double amplitude = 1.0);
/// v = (U sin(2 pi y / Ly), 0, 0).
FluidState shear_layer(const Grid& g, double amplitude = 1.0);
/// v = 0, theta = theta0 + delta sin(2 pi x / Lx), e = cv theta.
FluidState heat_mode(const Grid& g, double theta0, double delta, double cv = 1.0);
/// rho = 1 + amp sin(2 pi x / Lx), v = 0.
FluidState density_bump(const Grid& g, double amplitude);
/// Compactly supported Gaussian vortex centered in the box (width as a fraction of Lx).
FluidState gaussian_vortex(const Grid& g, double amplitude, double width);
/// Smooth low-mode perturbations of rho, v, theta and C (seeded).
FluidState smooth_compressible(const Grid& g, double amplitude, std::uint64_t seed, double cv = 1.0);

}  // namespace evf
