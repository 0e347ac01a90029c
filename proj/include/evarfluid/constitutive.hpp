#pragma once

// Constitutive energy functions e_1..e_5 and the quantities built from them:
// stress tensor, viscous dissipation density, nonlinear fluxes, and the
// pointwise energy densities.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "evarfluid/tensor.hpp"

namespace evf {

/// A scalar C^1 function e(r), r >= 0, together with its derivative e'(r).
///
/// Instances are immutable after construction and safe to share across threads.
class ConstitutiveFunction {
 public:
  using Fn = std::function<double(double)>;

  ConstitutiveFunction() : ConstitutiveFunction(zero()) {}

  /// User extension point. `smooth_at_zero` tells derivative checks whether
  /// r -> e(|x|^2) may be finite-differenced across x = 0.
  ConstitutiveFunction(std::string name, Fn eval, Fn deriv,
                       std::vector<std::pair<std::string, double>> params = {},
                       bool smooth_at_zero = false);

  /// e(r) = 2 mu r, e'(r) = 2 mu.
  static ConstitutiveFunction newtonian(double mu);
  /// e(r) = mu r^p, e'(r) = mu p r^(p-1). For p < 1 the derivative argument is
  /// clamped to max(r, r_floor).
  static ConstitutiveFunction power_law(double mu, double p, double r_floor = 1e-12);
  static ConstitutiveFunction zero();

  double operator()(double r) const { return eval_(r); }
  double eval(double r) const { return eval_(r); }
  double deriv(double r) const { return deriv_(r); }

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::string, double>>& params() const { return params_; }
  /// Returns the named parameter or `fallback`.
  double param(const std::string& key, double fallback = 0.0) const;
  bool smooth_at_zero() const { return smooth_at_zero_; }
  bool is_zero() const { return name_ == "zero"; }

 private:
  std::string name_;
  Fn eval_;
  Fn deriv_;
  std::vector<std::pair<std::string, double>> params_;
  bool smooth_at_zero_ = false;
};

struct ConstitutiveSet {
  ConstitutiveFunction e1, e2, e3, e4, e5;

  /// All five members zero.
  static ConstitutiveSet inviscid();
  /// e_j(r) = 2 mu_j r for j = 1..5.
  static ConstitutiveSet newtonian(double mu1, double mu2, double mu3, double kappa = 0.0,
                                   double diffusivity = 0.0);
};

struct EnergyDensities {
  double kinetic = 0.0;  // e_K
  double viscous = 0.0;  // e_D
  double work = 0.0;     // e_W (power density)
  double thermal = 0.0;  // e_TD
  double general = 0.0;  // e_GD
};

/// S(v, sigma) = e1'(|D+|^2) D+ + e2'(|div|^2) div I + e3'(|D-|^2) D- - sigma I
Mat3 stress(const GradientDecomposition& dec, double sigma, const ConstitutiveSet& cs);

/// e~_D = e1'|D+|^2 + e2'|div|^2 + e3'|D-|^2
double dissipation_density(const GradientDecomposition& dec, const ConstitutiveSet& cs);

/// e'(|g|^2) g ; heat flux with e4, general flux with e5.
Vec3 nonlinear_flux(const Vec3& g, const ConstitutiveFunction& e);

/// Pointwise e_K, e_D, e_W, e_TD, e_GD. Throws Error(nonpositive-density) for rho < 0.
EnergyDensities energy_densities(double rho, const Vec3& v, const GradientDecomposition& dec,
                                 double sigma, const Vec3& force, const Vec3& grad_theta,
                                 const Vec3& grad_c, const ConstitutiveSet& cs);

/// Result of differentiating the matrix/vector energies
///   E1 = -e1(|sym T|^2)/2, E2 = -e2(|tr T|^2)/2, E3 = -e3(|skw T|^2)/2,
///   E4 = -e4(|t|^2)/2,     E5 = -e5(|t|^2)/2
/// entrywise by centered differences, next to their closed forms.
struct StressEnergyCheck {
  std::array<Mat3, 3> analytic{};
  std::array<Mat3, 3> finite_difference{};
  std::array<Vec3, 2> flux_analytic{};
  std::array<Vec3, 2> flux_finite_difference{};
  /// false when the evaluation point sits at a kink of a non-smooth member.
  std::array<bool, 5> applicable{true, true, true, true, true};

  /// Max-norm discrepancy of energy k (0-based, 0..4); 0 when not applicable.
  double discrepancy(int k) const;
};

StressEnergyCheck stress_from_energy_check(const Mat3& grad, const ConstitutiveSet& cs, double h,
                                           const Vec3& grad_theta = {},
                                           const Vec3& grad_c = {});

}  // namespace evf
