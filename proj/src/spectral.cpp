#include "evarfluid/spectral.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <numbers>

#include "evarfluid/error.hpp"

namespace evf {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectralTransform::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

SpectralTransform::SpectralTransform(const Grid& g) : grid_(g), plans_(std::make_unique<Plans>()) {
  g.validate();
  const int rank = g.is_2d() ? 2 : 3;
  const std::size_t last = static_cast<std::size_t>(rank - 1);
  cdims_ = {g.dims[0], g.dims[1], g.dims[2]};
  cdims_[last] = g.dims[last] / 2 + 1;

  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t n = g.dims[a];
    const double base = 2.0 * std::numbers::pi / g.lengths[a];
    k_[a].resize(cdims_[a]);
    kd_[a].resize(cdims_[a]);
    mode_[a].resize(cdims_[a]);
    for (std::size_t m = 0; m < cdims_[a]; ++m) {
      const bool folded = a != last && m > n / 2;
      const double idx = folded ? static_cast<double>(m) - static_cast<double>(n)
                                : static_cast<double>(m);
      const bool nyquist = n % 2 == 0 && m == n / 2;
      k_[a][m] = n == 1 ? 0.0 : base * idx;
      kd_[a][m] = (n == 1 || nyquist) ? 0.0 : base * idx;
      mode_[a][m] = folded ? n - m : m;
    }
  }

  const std::size_t nr = g.size();
  const std::size_t nc = complex_size();
  double* rbuf = fftw_alloc_real(nr);
  fftw_complex* cbuf = fftw_alloc_complex(nc);
  const int n[3] = {static_cast<int>(g.dims[0]), static_cast<int>(g.dims[1]),
                    static_cast<int>(g.dims[2])};
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans_->r2c = fftw_plan_dft_r2c(rank, n, rbuf, cbuf, FFTW_ESTIMATE);
    plans_->c2r = fftw_plan_dft_c2r(rank, n, cbuf, rbuf, FFTW_ESTIMATE);
  }
  fftw_free(rbuf);
  fftw_free(cbuf);
  if (!plans_->r2c || !plans_->c2r) throw Error(errc::invalid_grid, "FFTW planning failed");
}

SpectralTransform::~SpectralTransform() {
  if (!plans_) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

void SpectralTransform::forward(const std::vector<double>& in,
                                std::vector<std::complex<double>>& out) const {
  const std::size_t nr = grid_.size();
  const std::size_t nc = complex_size();
  if (in.size() != nr) throw Error(errc::grid_mismatch, "forward transform size mismatch");
  double* rbuf = fftw_alloc_real(nr);
  fftw_complex* cbuf = fftw_alloc_complex(nc);
  std::memcpy(rbuf, in.data(), nr * sizeof(double));
  fftw_execute_dft_r2c(plans_->r2c, rbuf, cbuf);
  out.resize(nc);
  std::memcpy(static_cast<void*>(out.data()), cbuf, nc * sizeof(fftw_complex));
  fftw_free(rbuf);
  fftw_free(cbuf);
}

void SpectralTransform::inverse(const std::vector<std::complex<double>>& in,
                                std::vector<double>& out) const {
  const std::size_t nr = grid_.size();
  const std::size_t nc = complex_size();
  if (in.size() != nc) throw Error(errc::grid_mismatch, "inverse transform size mismatch");
  double* rbuf = fftw_alloc_real(nr);
  fftw_complex* cbuf = fftw_alloc_complex(nc);
  std::memcpy(cbuf, static_cast<const void*>(in.data()), nc * sizeof(fftw_complex));
  fftw_execute_dft_c2r(plans_->c2r, cbuf, rbuf);
  out.resize(nr);
  const double scale = 1.0 / static_cast<double>(nr);
  for (std::size_t i = 0; i < nr; ++i) out[i] = rbuf[i] * scale;
  fftw_free(rbuf);
  fftw_free(cbuf);
}

}  // namespace evf
