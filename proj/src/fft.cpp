#include "fft.hpp"

#include <cstring>
#include <mutex>

#include "triblock/error.hpp"

namespace triblock::detail {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2D::Fft2D(int n) : n_(n) {
  if (n < 2 || n % 2 != 0) fail(ErrorKind::invalid_input, "FFT grid size must be even and at least 2");
  const std::size_t nr = static_cast<std::size_t>(n) * n;
  const std::size_t nc = static_cast<std::size_t>(n) * cols();
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = fftw_alloc_real(nr);
  spec_ = fftw_alloc_complex(nc);
  fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, spec_, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_2d(n, n, spec_, real_, FFTW_ESTIMATE);
  if (!fwd_ || !inv_) fail(ErrorKind::invalid_input, "FFTW planning failed");
}

Fft2D::~Fft2D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (inv_) fftw_destroy_plan(inv_);
  fftw_free(real_);
  fftw_free(spec_);
}

void Fft2D::forward(const Grid& in, std::vector<std::complex<double>>& out) {
  if (in.n != n_) fail(ErrorKind::invalid_input, "FFT grid size mismatch");
  std::memcpy(real_, in.v.data(), in.v.size() * sizeof(double));
  fftw_execute(fwd_);
  const std::size_t nc = static_cast<std::size_t>(n_) * cols();
  out.resize(nc);
  std::memcpy(static_cast<void*>(out.data()), spec_, nc * sizeof(fftw_complex));
}

void Fft2D::inverse(const std::vector<std::complex<double>>& in, Grid& out) {
  const std::size_t nc = static_cast<std::size_t>(n_) * cols();
  if (in.size() != nc) fail(ErrorKind::invalid_input, "FFT spectrum size mismatch");
  // c2r destroys its input, so work on the internal buffer
  std::memcpy(spec_, in.data(), nc * sizeof(fftw_complex));
  fftw_execute(inv_);
  if (out.n != n_) out = Grid(n_);
  std::memcpy(out.v.data(), real_, out.v.size() * sizeof(double));
}

}  // namespace triblock::detail
