#pragma once

// Dissipation / work / diffusion energy functionals on periodic grids, their
// numerical Gateaux derivatives, the strong-form forces they generate, and
// residual checks pairing the two.
//
// Printed sign conventions:
//   E_D  = -int 1/2 {e1(|D+V|^2) + e2(|div V|^2) + e3(|D-V|^2)} dx
//   E_W  =  int {(div V) sigma + rho F . V} dx
//   E_TD = -int 1/2 e4(|grad f|^2) dx,   E_GD = -int 1/2 e5(|grad f|^2) dx
// so that d/de E_{D+W}[v + e phi] = <div S(v, sigma) + rho F, phi> and
// d/de E_TD[theta + e phi] = <div(e4' grad theta), phi>.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evarfluid/constitutive.hpp"
#include "evarfluid/operators.hpp"

namespace evf {

enum class FunctionalKind { E_D1, E_D2, E_D3, E_DW, E_TD, E_GD };
std::string to_string(FunctionalKind k);
FunctionalKind functional_kind_from_string(const std::string& name);
/// True for kinds varied with respect to the velocity.
bool acts_on_velocity(FunctionalKind k);

struct VariationalState {
  VectorField v;
  ScalarField sigma;
  ScalarField rho;
  VectorField force;  // F, force per unit mass
  ScalarField theta;
  ScalarField concentration;

  /// v = 0, sigma = 0, rho = 1, F = 0, theta = 1, C = 0.
  static VariationalState rest(const Grid& g);
};

/// A perturbation direction: vector for velocity kinds, scalar otherwise.
struct Direction {
  VectorField vec;
  ScalarField scalar;
};

class EnergyFunctional {
 public:
  EnergyFunctional(FunctionalKind kind, ConstitutiveSet cs, const Operators& ops);

  FunctionalKind kind() const { return kind_; }
  const ConstitutiveSet& constitutive() const { return cs_; }
  const Operators& operators() const { return ops_; }

  double evaluate(const VariationalState& s) const;
  /// e -> E[state + e * direction], with the linear parts (gradients) of the
  /// state and direction computed once.
  std::function<double(double)> along(const VariationalState& s, const Direction& d) const;
  /// True when E is quadratic in its argument (every member involved is linear
  /// in r), so central differences are exact up to roundoff.
  bool is_quadratic() const;

  /// Strong-form force whose L2 pairing with a direction equals the Gateaux
  /// derivative: div(S_visc) - grad sigma + rho F for E_DW, the single block
  /// div(.) for E_D1..E_D3, div(e' grad f) for the scalar kinds.
  Direction strong_force(const VariationalState& s) const;

 private:
  FunctionalKind kind_;
  ConstitutiveSet cs_;
  const Operators& ops_;
};

/// div S(v, 0) - grad sigma + rho F assembled with the grid operators.
VectorField strong_force_momentum(const VariationalState& s, const ConstitutiveSet& cs,
                                  const Operators& ops);

struct GateauxResult {
  std::vector<double> epsilons;
  std::vector<double> central;  // (E[+e] - E[-e]) / 2e per epsilon
  double value = 0.0;           // Richardson extrapolation of the last two entries
  /// log(|D(e0)-D(e1)| / |D(e1)-D(e2)|) / log(e0/e1) over the last three
  /// entries; NaN when those differences are at roundoff.
  double observed_order = 0.0;
  bool converged = true;  // false: differences grow as e shrinks above roundoff
};

/// Central-difference derivative of f at 0 over a decreasing geometric sweep.
GateauxResult gateaux(const std::function<double(double)>& f, const std::vector<double>& epsilons);
GateauxResult gateaux(const EnergyFunctional& e, const VariationalState& s, const Direction& d,
                      const std::vector<double>& epsilons);

/// Deterministic probe directions (seeded band-limited fields).
std::vector<Direction> velocity_probes(const Operators& ops, std::size_t count, std::uint64_t seed,
                                       bool solenoidal);
std::vector<Direction> scalar_probes(const Grid& g, std::size_t count, std::uint64_t seed);

struct ProbeResidual {
  std::size_t probe_id = 0;
  double pairing = 0.0;            // <strong force, phi>
  std::vector<double> epsilons;
  std::vector<double> residuals;   // |central(e) - pairing|
  double richardson_residual = 0.0;
  double observed_order = 0.0;     // least-squares slope of log residual vs log e
  double scale = 1.0;              // |E| + ||force|| ||phi||
};

struct EulerLagrangeOptions {
  std::vector<double> epsilons{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  double tolerance = 1e-8;           // relative residual bound for quadratic functionals
  double order_low = 1.9, order_high = 2.1;
  /// Below this relative residual the order fit is meaningless (roundoff).
  double noise_floor = 1e-12;
};

struct EulerLagrangeReport {
  std::string name;
  FunctionalKind kind = FunctionalKind::E_DW;
  std::vector<ProbeResidual> probes;
  double max_relative_residual = 0.0;  // max over probes of min over e of residual / scale
  std::size_t worst_probe = 0;
  double min_order = 0.0, max_order = 0.0;  // over probes whose residuals clear the noise floor
  bool order_checked = false;
  bool pass = true;
  std::string failure;  // empty when pass
};

EulerLagrangeReport verify_euler_lagrange(const EnergyFunctional& e, const VariationalState& s,
                                          const std::vector<Direction>& probes,
                                          const EulerLagrangeOptions& opts = {});

/// Divergence-free setting: builds F so that the variation of E_{D+W} vanishes
/// along every solenoidal direction (rho F = -P div S_visc + grad q), checks
/// that premise with the Gateaux oracle, then recovers sigma from the Helmholtz
/// split of div S_visc + rho F.
struct ConstrainedReport {
  double premise_max = 0.0;          // max |gateaux| / scale over solenoidal probes
  double solenoidal_residual = 0.0;  // ||P(div S_visc + rho F)||_max / scale
  /// ||sigma_rec - sigma_expected||_max / ||sigma_expected||_max, where
  /// sigma_expected = q - mean q + (potential of the gradient part of div S_visc).
  double sigma_error = 0.0;
  double sigma_mean = 0.0;
  /// Same quantities without the compensating force: must be far from zero.
  double control_premise = 0.0;
  double control_solenoidal = 0.0;
  double scale = 1.0;
  ScalarField sigma;
  bool pass = false;
};

ConstrainedReport verify_constrained(const ConstitutiveSet& cs, const Operators& ops,
                                     const VectorField& v, const ScalarField& rho,
                                     const ScalarField& q, const std::vector<Direction>& probes,
                                     const EulerLagrangeOptions& opts = {}, double tolerance = 1e-10);

/// Integration-by-parts residual |<div M, phi> + <M, grad phi>| / (||M|| ||grad phi||).
double integration_by_parts_residual(const Operators& ops, const TensorField& m,
                                     const VectorField& phi);

/// Coefficients (alpha, beta) with div S(v, 0) = alpha lap v + beta grad div v
/// for a Newtonian set, read off from the pointwise stress applied to plane-wave
/// gradients (independent of the grid operators).
struct NewtonianCoefficients {
  double laplacian = 0.0;
  double grad_div = 0.0;
};
NewtonianCoefficients newtonian_reduction_oracle(const ConstitutiveSet& cs);

struct NewtonianReductionReport {
  NewtonianCoefficients oracle;
  double max_error = 0.0;  // || div S(v,0) - (alpha lap v + beta grad div v) ||_max / ||div S||_max
};
NewtonianReductionReport verify_newtonian_reduction(const ConstitutiveSet& cs, const Operators& ops,
                                                    const VectorField& v);

/// Gateaux derivative of E_D at v in direction v against -int e~_D; for
/// power-law members both equal 2 p E_D.
struct DissipationSignCheck {
  double gateaux = 0.0;
  double minus_dissipation = 0.0;  // -int e~_D
  double homogeneous = 0.0;        // 2 p E_D (only meaningful for a single power-law member)
};
DissipationSignCheck dissipation_sign_check(const ConstitutiveSet& cs, const Operators& ops,
                                            const VectorField& v,
                                            const std::vector<double>& epsilons = {1e-2, 5e-3,
                                                                                   2.5e-3});

}  // namespace evf
