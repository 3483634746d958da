#pragma once

#include <complex>
#include <vector>

#include <fftw3.h>

#include "triblock/grid.hpp"

namespace triblock::detail {

/// Real-to-complex 2D transform pair on an N×N grid (FFTW, estimate planning,
/// one thread). The half spectrum has N rows and N/2+1 columns.
class Fft2D {
 public:
  explicit Fft2D(int n);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int n() const { return n_; }
  int cols() const { return n_ / 2 + 1; }

  void forward(const Grid& in, std::vector<std::complex<double>>& out);
  /// Unnormalized inverse; callers divide by N².
  void inverse(const std::vector<std::complex<double>>& in, Grid& out);

  /// Integer wave number of spectrum row i.
  int ky(int i) const { return i <= n_ / 2 ? i : i - n_; }
  int kx(int j) const { return j; }

 private:
  int n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace triblock::detail
