#include "evarfluid/kernels.hpp"

#include <algorithm>

#include "evarfluid/parallel.hpp"

namespace evf {

namespace {

double viscous_energy_at(const Mat3& g, const ConstitutiveSet& cs) {
  const auto dec = decompose_gradient(g);
  return -0.5 * (cs.e1(frobenius_sq(dec.d_plus)) + cs.e2(dec.divergence * dec.divergence) +
                 cs.e3(frobenius_sq(dec.d_minus)));
}

}  // namespace

namespace kernels {

TensorField stress_field(const TensorField& grad_v, const ScalarField& sigma,
                         const ConstitutiveSet& cs) {
  require_same_grid(grad_v.grid, sigma.grid);
  TensorField out(grad_v.grid);
  par::for_each(out.size(), [&](std::size_t p) {
    out.set(p, stress(decompose_gradient(grad_v.at(p)), sigma[p], cs));
  });
  return out;
}

TensorField viscous_stress_field(const TensorField& grad_v, const ConstitutiveSet& cs) {
  TensorField out(grad_v.grid);
  par::for_each(out.size(),
                [&](std::size_t p) { out.set(p, stress(decompose_gradient(grad_v.at(p)), 0.0, cs)); });
  return out;
}

ScalarField dissipation_field(const TensorField& grad_v, const ConstitutiveSet& cs) {
  ScalarField out(grad_v.grid);
  par::for_each(out.size(), [&](std::size_t p) {
    out[p] = dissipation_density(decompose_gradient(grad_v.at(p)), cs);
  });
  return out;
}

VectorField flux_field(const VectorField& g, const ConstitutiveFunction& e) {
  VectorField out(g.grid);
  par::for_each(out.size(), [&](std::size_t p) { out.set(p, nonlinear_flux(g.at(p), e)); });
  return out;
}

ScalarField viscous_energy_field(const TensorField& grad_v, const ConstitutiveSet& cs) {
  ScalarField out(grad_v.grid);
  par::for_each(out.size(), [&](std::size_t p) { out[p] = viscous_energy_at(grad_v.at(p), cs); });
  return out;
}

ScalarField gradient_energy_field(const VectorField& g, const ConstitutiveFunction& e) {
  ScalarField out(g.grid);
  par::for_each(out.size(), [&](std::size_t p) { out[p] = -0.5 * e(norm_sq(g.at(p))); });
  return out;
}

double max_effective_viscosity(const TensorField& grad_v, const ConstitutiveSet& cs) {
  double m = 0.0;
  for (std::size_t p = 0; p < grad_v.size(); ++p) {
    const auto dec = decompose_gradient(grad_v.at(p));
    m = std::max({m, cs.e1.deriv(frobenius_sq(dec.d_plus)),
                  cs.e2.deriv(dec.divergence * dec.divergence),
                  cs.e3.deriv(frobenius_sq(dec.d_minus))});
  }
  return m;
}

}  // namespace kernels

namespace reference {

TensorField stress_field(const TensorField& grad_v, const ScalarField& sigma,
                         const ConstitutiveSet& cs) {
  require_same_grid(grad_v.grid, sigma.grid);
  TensorField out(grad_v.grid);
  for (std::size_t p = 0; p < out.size(); ++p)
    out.set(p, stress(decompose_gradient(grad_v.at(p)), sigma[p], cs));
  return out;
}

ScalarField dissipation_field(const TensorField& grad_v, const ConstitutiveSet& cs) {
  ScalarField out(grad_v.grid);
  for (std::size_t p = 0; p < out.size(); ++p)
    out[p] = dissipation_density(decompose_gradient(grad_v.at(p)), cs);
  return out;
}

VectorField flux_field(const VectorField& g, const ConstitutiveFunction& e) {
  VectorField out(g.grid);
  for (std::size_t p = 0; p < out.size(); ++p) out.set(p, nonlinear_flux(g.at(p), e));
  return out;
}

ScalarField viscous_energy_field(const TensorField& grad_v, const ConstitutiveSet& cs) {
  ScalarField out(grad_v.grid);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = viscous_energy_at(grad_v.at(p), cs);
  return out;
}

}  // namespace reference

}  // namespace evf
