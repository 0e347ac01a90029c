#pragma once

// Pointwise field kernels built on the constitutive relations. The functions in
// evf::kernels run data-parallel under OpenMP; evf::reference holds plain
// serial loops with the same arithmetic, kept for testing and benchmarking.

#include "evarfluid/constitutive.hpp"
#include "evarfluid/grid.hpp"

namespace evf {

namespace kernels {

/// S(v, sigma) at every point from the velocity-gradient field.
TensorField stress_field(const TensorField& grad_v, const ScalarField& sigma,
                         const ConstitutiveSet& cs);
/// Viscous part S(v, 0).
TensorField viscous_stress_field(const TensorField& grad_v, const ConstitutiveSet& cs);
/// e~_D at every point.
ScalarField dissipation_field(const TensorField& grad_v, const ConstitutiveSet& cs);
/// e'(|g|^2) g at every point.
VectorField flux_field(const VectorField& g, const ConstitutiveFunction& e);
/// -(1/2)[e1(|D+|^2) + e2(|div|^2) + e3(|D-|^2)] at every point.
ScalarField viscous_energy_field(const TensorField& grad_v, const ConstitutiveSet& cs);
/// -(1/2) e(|g|^2) at every point.
ScalarField gradient_energy_field(const VectorField& g, const ConstitutiveFunction& e);
/// Largest e1'(|D+|^2), e2'(|div|^2), e3'(|D-|^2) over the grid (time-step bound).
double max_effective_viscosity(const TensorField& grad_v, const ConstitutiveSet& cs);

}  // namespace kernels

namespace reference {

TensorField stress_field(const TensorField& grad_v, const ScalarField& sigma,
                         const ConstitutiveSet& cs);
ScalarField dissipation_field(const TensorField& grad_v, const ConstitutiveSet& cs);
VectorField flux_field(const VectorField& g, const ConstitutiveFunction& e);
ScalarField viscous_energy_field(const TensorField& grad_v, const ConstitutiveSet& cs);

}  // namespace reference

}  // namespace evf
