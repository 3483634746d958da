#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace triblock {

/// Areas of the two components of a cluster (either may be zero for a single bubble).
struct MassPair {
  double m1 = 0.0;
  double m2 = 0.0;

  double total() const { return m1 + m2; }
  double operator[](int i) const { return i == 1 ? m1 : m2; }
  bool is_double() const { return m1 > 0.0 && m2 > 0.0; }
};

/// Symmetric interaction matrix. Positive definiteness is only checked on request.
struct GammaMatrix {
  double g11 = 1.0;
  double g22 = 1.0;
  double g12 = 0.0;
  bool enforce_positive_definite = false;

  double diag(int i) const { return i == 1 ? g11 : g22; }
  void validate() const;
};

void validate(const MassPair& m);

/**
 * Standard double bubble. Fields are reported in the caller's lobe order; the
 * smaller lobe always has half-angle 2π/3 − theta0 and the larger 2π/3 + theta0.
 * swapped is true when the caller's lobe 1 is the larger one. r0 is +inf for
 * equal masses (straight middle interface).
 */
struct BubbleGeometry {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double r0 = std::numeric_limits<double>::infinity();
  double r1 = 0.0;
  double r2 = 0.0;
  double h = 0.0;
  /// π/3 − theta0, stored separately to keep full precision when the smaller lobe is tiny.
  double gap = std::numbers::pi / 3.0;
  bool swapped = false;

  /// Curvature of the middle arc, signed so that 1/r_small − 1/r_large = curvature0().
  double curvature0() const { return std::isinf(r0) ? 0.0 : 1.0 / r0; }
};

/// Value of an energy or perimeter together with its partial derivatives in (m1, m2).
struct Evaluation {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

BubbleGeometry solve_geometry(const MassPair& m);

/// The six defining equations evaluated at g: two area equations, the two
/// junction-height equations, the curvature balance and the angle balance.
/// Areas are relative to m1+m2, heights to sqrt(m1+m2), curvature to 1/r_small.
std::array<double, 6> geometry_residuals(const BubbleGeometry& g, const MassPair& m);

double perimeter(const MassPair& m);
std::array<double, 2> perimeter_gradient(const MassPair& m);

double e0(const MassPair& m, const GammaMatrix& gamma);

/// e0 with its gradient. For a single bubble the derivative in the absent
/// species is +inf (creating a vanishing lobe costs infinitely much at the margin).
Evaluation e0_eval(const MassPair& m, const GammaMatrix& gamma);

/// Single-bubble energy F_i(x) = 2√(πx) + Γ_ii x²/4π and its derivatives.
double single_energy(double x, double gamma_ii);
double single_energy_derivative(double x, double gamma_ii);
double single_energy_second_derivative(double x, double gamma_ii);

double e0_hessian_diag(const MassPair& m, const GammaMatrix& gamma, int i);

/// First sign change of e0_hessian_diag in m_i with the other lobe held at
/// probe_other_mass.
double concavity_threshold(double gamma_ii, int i, double probe_other_mass);

struct ThresholdScan {
  std::vector<double> probes;
  std::vector<double> thresholds;
  double infimum = 0.0;
};

/// Thresholds over a probe grid. With an empty grid a default grid spanning
/// 1e-3..1e4 in units of gamma_ii^(-2/3) is used.
ThresholdScan concavity_threshold_scan(double gamma_ii, int i, std::vector<double> probes = {});

}  // namespace triblock
