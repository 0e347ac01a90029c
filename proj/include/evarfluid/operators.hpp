#pragma once

// Discrete differential operators on periodic grids, grid quadrature, the
// Helmholtz split, and band-limited test-field generation.
//
// Both backends produce a real antisymmetric first-derivative matrix, so the
// discrete integration-by-parts identity <div M, phi> = -<M, grad phi> holds to
// roundoff for any fields.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "evarfluid/grid.hpp"
#include "evarfluid/spectral.hpp"

namespace evf {

enum class Backend { spectral, fd4 };
Backend backend_from_string(const std::string& name);
std::string to_string(Backend b);

struct HelmholtzSplit {
  VectorField solenoidal;
  VectorField gradient_part;
  ScalarField potential;  // zero mean; gradient_part = grad potential
};

class Operators {
 public:
  Operators(const Grid& g, Backend backend = Backend::spectral);

  const Grid& grid() const { return grid_; }
  Backend backend() const { return backend_; }

  ScalarField derivative(const ScalarField& f, std::size_t axis) const;
  VectorField grad(const ScalarField& f) const;
  ScalarField div(const VectorField& u) const;
  /// [.]_{ij} = d u_i / d x_j
  TensorField grad_tensor(const VectorField& u) const;
  /// (div M)_i = d_j M_{ij}
  VectorField div_tensor(const TensorField& m) const;
  ScalarField laplacian(const ScalarField& f) const;
  VectorField laplacian(const VectorField& u) const;

  /// Spectral split u = solenoidal + grad(potential) with div(solenoidal) = 0,
  /// regardless of the differentiation backend.
  HelmholtzSplit helmholtz_split(const VectorField& u) const;
  /// Solenoidal part of u (Leray projection).
  VectorField project(const VectorField& u) const;
  /// Solves lap(phi) = f for zero-mean phi (spectral); the mean of f is dropped.
  ScalarField inverse_laplacian(const ScalarField& f) const;

  const SpectralTransform& transform() const { return *fft_; }

 private:
  Grid grid_;
  Backend backend_;
  std::shared_ptr<const SpectralTransform> fft_;
};

/// Rectangle rule sum f * cell volume, summed in a thread-count independent order.
double integrate(const ScalarField& f);
double mean(const ScalarField& f);
/// Discrete L2 pairings (rectangle rule).
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
double inner(const TensorField& a, const TensorField& b);
/// Integral of each component.
Vec3 integrate(const VectorField& u);

ScalarField sample(const Grid& g, const std::function<double(const Vec3&)>& f);
VectorField sample(const Grid& g, const std::function<Vec3(const Vec3&)>& f);

/// Zero-mean pseudo-random field whose spectrum is confined to mode numbers
/// |m_a| <= n_a / 3 on every active axis (top third of modes zeroed). The
/// result has max-norm `amplitude`. Deterministic in `seed`.
ScalarField random_band_limited(const Grid& g, std::uint64_t seed, double amplitude = 1.0);
/// Same per component (components use seeds derived from `seed`); z-component
/// is zero on 2D grids when `planar` is true.
VectorField random_band_limited_vector(const Grid& g, std::uint64_t seed, double amplitude = 1.0,
                                       bool planar = true);

}  // namespace evf
