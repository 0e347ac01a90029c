#pragma once

// Analytic flow maps x~(xi, t), the Riemannian metric they induce on the
// reference box, and numerical checks of the identities that relate Eulerian
// integrals over Omega(t) to Lagrangian integrals over Omega(0).
//
// Eulerian integrals are always evaluated by change of variables through the
// map, never by meshing Omega(t).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evarfluid/constitutive.hpp"
#include "evarfluid/quadrature.hpp"
#include "evarfluid/tensor.hpp"

namespace evf {

struct FlowMap {
  using VecFn = std::function<Vec3(const Vec3&, double)>;
  using MatFn = std::function<Mat3(const Vec3&, double)>;

  std::string name;
  VecFn map;                 // xi, t -> x~
  MatFn jacobian;            // [.]_{ij} = d x~_i / d xi_j ; column j is g_j
  VecFn velocity;            // x~_t
  MatFn velocity_jacobian;   // [.]_{ij} = d v_i / d xi_j ; column j is g'_j
  /// Optional Eulerian velocity gradient evaluated at a spatial point x. When
  /// absent the chain rule (velocity_jacobian * jacobian^-1) is used.
  MatFn eulerian_velocity_gradient;
  Box reference_domain{};
  /// Time scale used to size finite-difference steps in t.
  double characteristic_time = 1.0;
};

enum class MapKind { identity, shear, rotation, dilation };

/// identity; shear(rate): (xi1 + rate t xi2, xi2, xi3); rotation(omega) of
/// (xi1, xi2) by omega t; dilation(a): e^{a t} xi.
FlowMap builtin_map(MapKind kind, double parameter = 1.0, const Box& reference = {});
/// Parses "identity", "shear", "rotation", "dilation".
MapKind map_kind_from_string(const std::string& name);
std::string to_string(MapKind kind);

struct MetricData {
  std::array<Vec3, 3> g{};       // g_i
  Mat3 g_lower;                  // g_ij
  Mat3 g_upper;                  // g^ij
  std::array<Vec3, 3> g_dual{};  // g^i = g^ij g_j
  double jacobian = 1.0;         // J = sqrt(det g_ij)
  std::array<Vec3, 3> g_dot{};   // d g_i / dt
  Mat3 g_dot_lower;              // d g_ij / dt = g'_i . g_j + g_i . g'_j
};

/// Throws Error(singular-metric) when det g_ij <= det_tolerance.
MetricData metric_at(const FlowMap& fm, const Vec3& xi, double t, double det_tolerance = 1e-14);

/// Velocity gradient in x at x~(xi, t): the map's Eulerian gradient when
/// supplied, the chain rule otherwise.
Mat3 eulerian_gradient(const FlowMap& fm, const Vec3& xi, double t);

/// Fourth-order centered difference of a scalar function of time.
double time_derivative(const std::function<double(double)>& f, double t, double h);

struct MetricResiduals {
  double inverse = 0.0;          // |g^ij g_jk - delta_ik|
  double kronecker = 0.0;        // |dx_i/dxi_k dx_j/dxi_l g^kl - delta_ij|
  double dual = 0.0;             // |g^i . g_j - delta_ij|
  double jacobian_rate = 0.0;    // |dJ/dt - (g'_k . g^k) J|, relative to max(1, |J'|)
  double strain = 0.0;           // |g'_ij - 2 dx_k/dxi_i [D+]_kl dx_l/dxi_j|
  double contraction_forms = 0.0;  // pulled-back contractions vs Eulerian div v, |div v|^2, |D+|^2, |D-|^2
  double max_algebraic() const;  // max of everything except jacobian_rate
};

MetricResiduals verify_metric_identities(const FlowMap& fm, const Vec3& xi, double t);

/// Analytic Eulerian scalar field f(x, t) with its spatial gradient.
struct ScalarFn {
  std::function<double(const Vec3&, double)> value;
  std::function<Vec3(const Vec3&, double)> grad;

  static ScalarFn constant(double c);
};

enum class PullbackKind { W1, D1, D2, D3, D4, D5 };
std::string to_string(PullbackKind kind);

struct PullbackFields {
  ScalarFn sigma = ScalarFn::constant(0.0);
  ScalarFn theta = ScalarFn::constant(0.0);
  ScalarFn concentration = ScalarFn::constant(0.0);
};

struct PullbackPair {
  double lhs = 0.0;  // Eulerian integral over Omega(t)
  double rhs = 0.0;  // Lagrangian integral over Omega(0) of K(.) J
  double lhs_refined = 0.0;
  double rhs_refined = 0.0;
  /// |lhs - lhs_refined|: estimate of the quadrature error of the coarse rule.
  double quadrature_estimate = 0.0;
  bool quadrature_warning = false;

  double abs_err() const;
  double rel_err() const;          // abs_err / max(|lhs|, 1)
  double rel_err_refined() const;  // same on the refined rule
};

/// Energy-density pullback pair for one density. The Eulerian side uses the
/// spatial velocity gradient and det(d x~/d xi); the Lagrangian side uses only
/// metric quantities and J. `tolerance` drives the quadrature warning.
PullbackPair pullback_energy_pair(const FlowMap& fm, double t, PullbackKind which,
                                  const QuadratureRule& q, const ConstitutiveSet& cs,
                                  const PullbackFields& fields = {}, double tolerance = 1e-8);

struct DivergenceIdentity {
  double lhs = 0.0;          // int_{Omega(t)} f div v dx
  double rhs_metric = 0.0;   // int f (g'_j . g^j) J dxi
  double rhs_rate = 0.0;     // int f dJ/dt dxi
};

DivergenceIdentity divergence_identity_pair(const FlowMap& fm, double t, const ScalarFn& f,
                                            const QuadratureRule& q);

/// rho(x~(xi,t), t) = rho0(xi) / J(xi, t).
double mass_pullback(const FlowMap& fm, const std::function<double(const Vec3&)>& rho0,
                     const Vec3& xi, double t);

/// Continuity residual d/dt[rho(x~,t)] + (div v) rho along the orbit through xi,
/// with the orbit derivative taken by a second-order centered difference of step dt.
double continuity_residual(const FlowMap& fm, const std::function<double(const Vec3&)>& rho0,
                           const Vec3& xi, double t, double dt);

/// A variation family x~^eps = x~ + eps y + eps^2 w. Both y and w must vanish
/// at t = 0 and t = T.
struct Perturbation {
  FlowMap::VecFn y, y_t;
  FlowMap::MatFn y_jacobian;
  FlowMap::VecFn w, w_t;
  FlowMap::MatFn w_jacobian;

  /// y = sin(pi t / T) b(xi) direction, w = sin^2(pi t / T) b(xi) curvature_direction
  /// with b = 16 prod_i s_i(1 - s_i) (s = box-normalized xi).
  static Perturbation bump(const Box& box, double horizon, const Vec3& direction,
                           const Vec3& curvature_direction);
};

struct ActionVariationOptions {
  double horizon = 1.0;
  std::size_t time_nodes = 16;
  std::vector<double> epsilons{0.1, 0.05, 0.025, 0.0125};
  /// Optional chemical potential p(rho) for the barotropic action
  /// A_B = -int int (rho |v|^2 / 2 - p(rho)).
  std::optional<ConstitutiveFunction> chemical_potential;
};

struct ActionVariationResult {
  /// int_0^T int_{Omega(t)} (rho D_t v [+ grad P(rho)]) . z dx dt via pullback.
  double force_pairing = 0.0;
  std::vector<double> epsilons;
  std::vector<double> derivatives;  // central differences of A in eps
  std::vector<double> residuals;    // |derivative - force_pairing|
  double fitted_slope = 0.0;        // least-squares slope of log residual vs log eps
};

ActionVariationResult action_variation_check(const FlowMap& fm, const Perturbation& pert,
                                             const std::function<double(const Vec3&)>& rho0,
                                             const QuadratureRule& q,
                                             const ActionVariationOptions& opts = {});

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace evf
