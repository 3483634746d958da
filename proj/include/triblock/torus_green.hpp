#pragma once

#include <array>

#include "triblock/grid.hpp"

namespace triblock {

/// Point of the unit flat torus stored as its representative in [−1/2, 1/2)².
struct TorusPoint {
  double x = 0.0;
  double y = 0.0;

  static TorusPoint canonical(double x, double y);
  TorusPoint operator-(const TorusPoint& o) const { return canonical(x - o.x, y - o.y); }
  TorusPoint operator+(const TorusPoint& o) const { return canonical(x + o.x, y + o.y); }
  double norm() const;
};

/// Wrap a coordinate into [−1/2, 1/2).
double wrap(double t);

/// Zero-mean Green's function of −Δ on the torus, by Ewald splitting.
double green(const TorusPoint& p);

/// Same function from its Fourier series, summed in closed form along one
/// axis and truncated adaptively along the other. Independent of green().
double green_spectral(const TorusPoint& p);

std::array<double, 2> green_gradient(const TorusPoint& p);

/// green(p) + log|p|/2π for |p| < 1/2, continuous at 0.
double regular_part(const TorusPoint& p);

/// R(0) from the Ewald representation.
double regular_part_origin();

/// R(0) from the product expansion 1/12 − log(2π)/2π − (1/π)Σ log(1 − e^{−2πn}).
double regular_part_origin_product();

/// Zero-mean solution of −Δψ = rhs − mean(rhs), by spectral division.
Grid periodic_poisson_solve(const Grid& rhs);

}  // namespace triblock
