#pragma once

#include <cstddef>
#include <vector>

namespace triblock {

/// N×N periodic samples on the unit torus. Row i holds y = i/N, column j holds x = j/N.
struct Grid {
  int n = 0;
  std::vector<double> v;

  Grid() = default;
  explicit Grid(int size, double fill = 0.0) : n(size), v(static_cast<std::size_t>(size) * size, fill) {}

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * n + j]; }
  std::size_t size() const { return v.size(); }
  double spacing() const { return 1.0 / n; }

  double sum() const;
  double mean() const { return sum() / static_cast<double>(v.size()); }
  /// Integral over the torus by the trapezoid rule (mean value, since the area is 1).
  double integral() const { return mean(); }
};

/// L² inner product on the torus, ∫ a·b dx.
double dot(const Grid& a, const Grid& b);

}  // namespace triblock
