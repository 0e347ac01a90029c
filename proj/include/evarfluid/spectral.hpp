#pragma once

// Thin owner of FFTW real-to-complex plans for one periodic grid.
//
// Plans are created under a process-wide lock (the FFTW planner is not
// reentrant). forward()/inverse() allocate their own work arrays and use the
// new-array execute interface, so a const SpectralTransform may be shared by
// several threads.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "evarfluid/grid.hpp"

namespace evf {

class SpectralTransform {
 public:
  explicit SpectralTransform(const Grid& g);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  const Grid& grid() const { return grid_; }
  /// Shape of the half-complex array; the last active axis is halved.
  const std::array<std::size_t, 3>& complex_dims() const { return cdims_; }
  std::size_t complex_size() const { return cdims_[0] * cdims_[1] * cdims_[2]; }

  /// Unnormalized forward transform.
  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) const;
  /// Inverse transform including the 1/N factor; `in` is left untouched.
  void inverse(const std::vector<std::complex<double>>& in, std::vector<double>& out) const;

  /// Wavenumber along `axis` for every half-complex index, as used by first
  /// derivatives: the Nyquist mode of an even axis maps to 0 so that the
  /// discrete derivative is a real antisymmetric operator.
  const std::vector<double>& derivative_wavenumbers(std::size_t axis) const { return kd_[axis]; }
  /// Signed wavenumber along `axis` (Nyquist kept), for second derivatives.
  const std::vector<double>& wavenumbers(std::size_t axis) const { return k_[axis]; }
  /// Mode number magnitude for every half-complex index along `axis`.
  const std::vector<std::size_t>& mode_index(std::size_t axis) const { return mode_[axis]; }

  std::array<std::size_t, 3> unflatten(std::size_t flat) const {
    return {flat / (cdims_[1] * cdims_[2]), (flat / cdims_[2]) % cdims_[1], flat % cdims_[2]};
  }

 private:
  struct Plans;
  Grid grid_;
  std::array<std::size_t, 3> cdims_{};
  std::array<std::vector<double>, 3> k_, kd_;
  std::array<std::vector<std::size_t>, 3> mode_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace evf
