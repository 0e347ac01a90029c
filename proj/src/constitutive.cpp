#include "evarfluid/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evarfluid/error.hpp"

namespace evf {

namespace {

void require_parameters(bool ok, const std::string& detail) {
  if (!ok)
    throw Error(errc::invalid_constitutive, "invalid constitutive parameters: " + detail);
}

bool is_positive_integer(double p) { return p >= 1.0 && std::floor(p) == p; }

}  // namespace

ConstitutiveFunction::ConstitutiveFunction(std::string name, Fn eval, Fn deriv,
                                           std::vector<std::pair<std::string, double>> params,
                                           bool smooth_at_zero)
    : name_(std::move(name)),
      eval_(std::move(eval)),
      deriv_(std::move(deriv)),
      params_(std::move(params)),
      smooth_at_zero_(smooth_at_zero) {
  require_parameters(static_cast<bool>(eval_) && static_cast<bool>(deriv_),
                     "constitutive function '" + name_ + "' needs eval and deriv");
}

ConstitutiveFunction ConstitutiveFunction::newtonian(double mu) {
  require_parameters(std::isfinite(mu) && mu >= 0.0, "newtonian mu must be >= 0");
  const double two_mu = 2.0 * mu;
  return {"newtonian", [two_mu](double r) { return two_mu * r; },
          [two_mu](double) { return two_mu; }, {{"mu", mu}}, true};
}

ConstitutiveFunction ConstitutiveFunction::power_law(double mu, double p, double r_floor) {
  require_parameters(std::isfinite(mu) && mu >= 0.0, "power_law mu must be >= 0");
  require_parameters(std::isfinite(p) && p > 0.0, "power_law p must be > 0");
  require_parameters(std::isfinite(r_floor) && r_floor > 0.0, "power_law r_floor must be > 0");
  auto eval = [mu, p](double r) { return mu * std::pow(r, p); };
  Fn deriv;
  if (p < 1.0) {
    deriv = [mu, p, r_floor](double r) { return mu * p * std::pow(std::max(r, r_floor), p - 1.0); };
  } else {
    deriv = [mu, p](double r) { return mu * p * std::pow(r, p - 1.0); };
  }
  return {"power_law", std::move(eval), std::move(deriv),
          {{"mu", mu}, {"p", p}, {"r_floor", r_floor}}, is_positive_integer(p)};
}

ConstitutiveFunction ConstitutiveFunction::zero() {
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, {}, true};
}

double ConstitutiveFunction::param(const std::string& key, double fallback) const {
  for (const auto& [k, v] : params_)
    if (k == key) return v;
  return fallback;
}

ConstitutiveSet ConstitutiveSet::inviscid() {
  return {ConstitutiveFunction::zero(), ConstitutiveFunction::zero(),
          ConstitutiveFunction::zero(), ConstitutiveFunction::zero(),
          ConstitutiveFunction::zero()};
}

ConstitutiveSet ConstitutiveSet::newtonian(double mu1, double mu2, double mu3, double kappa,
                                           double diffusivity) {
  return {ConstitutiveFunction::newtonian(mu1), ConstitutiveFunction::newtonian(mu2),
          ConstitutiveFunction::newtonian(mu3), ConstitutiveFunction::newtonian(kappa),
          ConstitutiveFunction::newtonian(diffusivity)};
}

Mat3 stress(const GradientDecomposition& dec, double sigma, const ConstitutiveSet& cs) {
  const double a1 = cs.e1.deriv(frobenius_sq(dec.d_plus));
  const double a2 = cs.e2.deriv(dec.divergence * dec.divergence);
  const double a3 = cs.e3.deriv(frobenius_sq(dec.d_minus));
  Mat3 s = a1 * dec.d_plus + a3 * dec.d_minus;
  const double diag = a2 * dec.divergence - sigma;
  s(0, 0) += diag;
  s(1, 1) += diag;
  s(2, 2) += diag;
  return s;
}

double dissipation_density(const GradientDecomposition& dec, const ConstitutiveSet& cs) {
  const double rp = frobenius_sq(dec.d_plus);
  const double rd = dec.divergence * dec.divergence;
  const double rm = frobenius_sq(dec.d_minus);
  return cs.e1.deriv(rp) * rp + cs.e2.deriv(rd) * rd + cs.e3.deriv(rm) * rm;
}

Vec3 nonlinear_flux(const Vec3& g, const ConstitutiveFunction& e) {
  return e.deriv(norm_sq(g)) * g;
}

EnergyDensities energy_densities(double rho, const Vec3& v, const GradientDecomposition& dec,
                                 double sigma, const Vec3& force, const Vec3& grad_theta,
                                 const Vec3& grad_c, const ConstitutiveSet& cs) {
  if (!(rho >= 0.0)) {
    std::ostringstream os;
    os << "density must be nonnegative, got " << rho;
    throw Error(errc::nonpositive_density, os.str());
  }
  EnergyDensities d;
  d.kinetic = 0.5 * rho * norm_sq(v);
  d.viscous = 0.5 * (cs.e1(frobenius_sq(dec.d_plus)) + cs.e2(dec.divergence * dec.divergence) +
                     cs.e3(frobenius_sq(dec.d_minus)));
  d.work = dec.divergence * sigma + rho * dot(force, v);
  d.thermal = 0.5 * cs.e4(norm_sq(grad_theta));
  d.general = 0.5 * cs.e5(norm_sq(grad_c));
  return d;
}

double StressEnergyCheck::discrepancy(int k) const {
  if (!applicable.at(static_cast<std::size_t>(k))) return 0.0;
  if (k < 3) return max_abs(analytic[k] - finite_difference[k]);
  const Vec3 d = flux_analytic[k - 3] - flux_finite_difference[k - 3];
  return std::max({std::fabs(d[0]), std::fabs(d[1]), std::fabs(d[2])});
}

namespace {

double energy_matrix(int k, const Mat3& t, const ConstitutiveSet& cs) {
  const auto dec = decompose_gradient(t);
  switch (k) {
    case 0: return -0.5 * cs.e1(frobenius_sq(dec.d_plus));
    case 1: return -0.5 * cs.e2(dec.divergence * dec.divergence);
    default: return -0.5 * cs.e3(frobenius_sq(dec.d_minus));
  }
}

// A kink is only reachable when the member is not smooth at the origin and the
// probe stencil comes close to it.
bool near_kink(const ConstitutiveFunction& e, double r, double h) {
  return !e.smooth_at_zero() && r <= 16.0 * h * h;
}

}  // namespace

StressEnergyCheck stress_from_energy_check(const Mat3& grad, const ConstitutiveSet& cs, double h,
                                           const Vec3& grad_theta, const Vec3& grad_c) {
  if (!(h > 0.0)) throw Error(errc::invalid_argument, "probe step h must be > 0");
  StressEnergyCheck out;
  const auto dec = decompose_gradient(grad);
  const double rp = frobenius_sq(dec.d_plus);
  const double rd = dec.divergence * dec.divergence;
  const double rm = frobenius_sq(dec.d_minus);

  out.analytic[0] = -cs.e1.deriv(rp) * dec.d_plus;
  out.analytic[1] = Mat3::diagonal(-cs.e2.deriv(rd) * dec.divergence);
  out.analytic[2] = -cs.e3.deriv(rm) * dec.d_minus;
  out.applicable[0] = !near_kink(cs.e1, rp, h);
  out.applicable[1] = !near_kink(cs.e2, rd, h);
  out.applicable[2] = !near_kink(cs.e3, rm, h);

  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        Mat3 tp = grad, tm = grad;
        tp(i, j) += h;
        tm(i, j) -= h;
        out.finite_difference[k](i, j) =
            (energy_matrix(k, tp, cs) - energy_matrix(k, tm, cs)) / (2.0 * h);
      }
  }

  const std::array<const ConstitutiveFunction*, 2> fluxes{&cs.e4, &cs.e5};
  const std::array<Vec3, 2> points{grad_theta, grad_c};
  for (std::size_t m = 0; m < 2; ++m) {
    const auto& e = *fluxes[m];
    const Vec3& t = points[m];
    out.flux_analytic[m] = -e.deriv(norm_sq(t)) * t;
    out.applicable[3 + m] = !near_kink(e, norm_sq(t), h);
    for (std::size_t i = 0; i < 3; ++i) {
      Vec3 tp = t, tm = t;
      tp[i] += h;
      tm[i] -= h;
      out.flux_finite_difference[m][i] = (-0.5 * e(norm_sq(tp)) + 0.5 * e(norm_sq(tm))) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace evf
