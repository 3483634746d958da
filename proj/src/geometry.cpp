#include "triblock/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "triblock/error.hpp"

namespace triblock {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSymmetricCrossover = 1e-13;
constexpr double kResidualTolerance = 1e-11;

// t − sin t cos t, i.e. twice the area of a circular segment of unit radius.
double lens(double t) {
  if (t < 0.5) {
    // (2t)^3/12 − (2t)^5/240 + ... summed until the terms vanish
    const double u = 2.0 * t;
    const double u2 = u * u;
    double term = u * u2 / 6.0;
    double sum = 0.0;
    for (int k = 1; k < 30; ++k) {
      sum += term / 2.0 * (k % 2 == 1 ? 1.0 : -1.0);
      term *= u2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
      if (term < 1e-18 * sum) break;
    }
    return sum;
  }
  return t - std::sin(t) * std::cos(t);
}

struct Angles {
  double t0, t_small, t_large;
  double s0, s_small, s_large;
  double c0, c_small, c_large;
};

// gap = π/3 − θ0 is carried separately: as the small lobe vanishes the large
// half-angle π − gap needs gap to full relative precision.
Angles angles(double theta0, double gap) {
  Angles a{};
  a.t0 = theta0;
  a.t_small = kPi / 3.0 + gap;
  a.t_large = kPi - gap;
  a.s0 = std::sin(theta0);
  a.c0 = std::cos(theta0);
  a.s_small = std::sin(kPi / 3.0 + theta0);
  a.c_small = -std::cos(kPi / 3.0 + theta0);
  a.s_large = std::sin(gap);
  a.c_large = -std::cos(gap);
  return a;
}

// Segment area over squared chord half-length: lens(t)/sin²(t); 0 at t = 0.
double q(double t, double s) {
  if (t == 0.0) return 0.0;
  return lens(t) / (s * s);
}

// lens for angles beyond π/2 where the direct formula is accurate but the
// sine must come from the complementary angle.
double lens_large(double t, double s, double c) { return t - s * c; }

void check_positive(const MassPair& m) {
  if (!(m.m1 > 0.0) || !(m.m2 > 0.0) || !std::isfinite(m.m1) || !std::isfinite(m.m2)) {
    std::ostringstream os;
    os << "double bubble needs two positive finite masses, got (" << m.m1 << ", " << m.m2 << ")";
    fail(ErrorKind::invalid_input, os.str());
  }
}

}  // namespace

void GammaMatrix::validate() const {
  if (!(g11 > 0.0) || !(g22 > 0.0) || !(g12 >= 0.0) || !std::isfinite(g11) || !std::isfinite(g22) ||
      !std::isfinite(g12)) {
    std::ostringstream os;
    os << "gamma needs g11 > 0, g22 > 0, g12 >= 0; got (" << g11 << ", " << g22 << ", " << g12 << ")";
    fail(ErrorKind::invalid_input, os.str());
  }
  if (enforce_positive_definite && !(g11 * g22 - g12 * g12 > 0.0)) {
    fail(ErrorKind::invalid_input, "gamma is not positive definite");
  }
}

void validate(const MassPair& m) {
  if (!(m.m1 >= 0.0) || !(m.m2 >= 0.0) || !std::isfinite(m.m1) || !std::isfinite(m.m2) ||
      !(m.m1 + m.m2 > 0.0)) {
    std::ostringstream os;
    os << "masses must be finite, nonnegative and not both zero; got (" << m.m1 << ", " << m.m2 << ")";
    fail(ErrorKind::invalid_input, os.str());
  }
}

BubbleGeometry solve_geometry(const MassPair& m) {
  check_positive(m);
  BubbleGeometry g;
  g.swapped = m.m1 > m.m2;
  const double small = std::min(m.m1, m.m2);
  const double large = std::max(m.m1, m.m2);
  const double ratio = small / large;

  double theta0 = 0.0;
  double gap = kPi / 3.0;
  if (1.0 - ratio >= kSymmetricCrossover) {
    // q(θ_small) + q(θ0) − ratio·(q(θ_large) − q(θ0)): positive at θ0 = 0, → −∞ at π/3.
    // Near-equal masses solve for θ0 itself, lopsided ones for the gap.
    const bool by_gap = ratio < 0.5;
    auto f = [ratio, by_gap](double v) {
      const Angles a = by_gap ? angles(kPi / 3.0 - v, v) : angles(v, kPi / 3.0 - v);
      const double q0 = q(a.t0, a.s0);
      const double qs = lens_large(a.t_small, a.s_small, a.c_small) / (a.s_small * a.s_small);
      const double ql = lens_large(a.t_large, a.s_large, a.c_large) / (a.s_large * a.s_large);
      const double val = qs + q0 - ratio * (ql - q0);
      return by_gap ? val : -val;
    };
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1);
    const double lo = by_gap ? 1e-150 : 0.0;
    const double hi = by_gap ? kPi / 3.0 : kPi / 3.0 * (1.0 - 1e-12);
    double v = lo;
    if (!(by_gap && f(lo) >= 0.0)) {
      auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi), tol, iters);
      v = 0.5 * (a + b);
    }
    if (by_gap) {
      gap = v;
      theta0 = kPi / 3.0 - gap;
    } else {
      theta0 = v;
      gap = kPi / 3.0 - theta0;
    }
  }

  const Angles a = angles(theta0, gap);
  const double q0 = q(a.t0, a.s0);
  const double qs = lens_large(a.t_small, a.s_small, a.c_small) / (a.s_small * a.s_small);
  const double h = std::sqrt(small / (qs + q0));
  g.theta0 = theta0;
  g.gap = gap;
  g.h = h;
  g.r0 = theta0 == 0.0 ? std::numeric_limits<double>::infinity() : h / a.s0;
  const double r_small = h / a.s_small;
  const double r_large = h / a.s_large;
  if (g.swapped) {
    g.theta1 = a.t_large;
    g.theta2 = a.t_small;
    g.r1 = r_large;
    g.r2 = r_small;
  } else {
    g.theta1 = a.t_small;
    g.theta2 = a.t_large;
    g.r1 = r_small;
    g.r2 = r_large;
  }

  const auto res = geometry_residuals(g, m);
  const double worst = *std::max_element(res.begin(), res.end(), [](double x, double y) {
    return std::abs(x) < std::abs(y);
  });
  if (!(std::abs(worst) <= kResidualTolerance)) {
    std::ostringstream os;
    os << "double-bubble solve did not converge for (" << m.m1 << ", " << m.m2 << "): residual " << worst;
    fail(ErrorKind::convergence, os.str());
  }
  return g;
}

std::array<double, 6> geometry_residuals(const BubbleGeometry& g, const MassPair& m) {
  const bool sw = g.swapped;
  const double m_small = sw ? m.m2 : m.m1;
  const double m_large = sw ? m.m1 : m.m2;
  const double r_small = sw ? g.r2 : g.r1;
  const double r_large = sw ? g.r1 : g.r2;
  const Angles a = angles(g.theta0, g.gap);

  // middle lens r0²·lens(θ0) written as h²·q(θ0) so the straight case is exact
  const double mid = g.h * g.h * q(a.t0, a.s0);
  const double total = m.m1 + m.m2;
  const double scale = std::sqrt(total);
  const double mid_height = std::isinf(g.r0) ? g.h : g.r0 * a.s0;

  std::array<double, 6> r{};
  r[0] = (r_small * r_small * lens_large(a.t_small, a.s_small, a.c_small) + mid - m_small) / total;
  r[1] = (r_large * r_large * lens_large(a.t_large, a.s_large, a.c_large) - mid - m_large) / total;
  r[2] = (r_small * a.s_small - mid_height) / scale;
  r[3] = (r_large * a.s_large - mid_height) / scale;
  r[4] = (1.0 / r_small - 1.0 / r_large - g.curvature0()) * r_small;
  r[5] = a.c_small + a.c_large + a.c0;
  return r;
}

double perimeter(const MassPair& m) {
  validate(m);
  if (m.m1 == 0.0) return 2.0 * std::sqrt(kPi * m.m2);
  if (m.m2 == 0.0) return 2.0 * std::sqrt(kPi * m.m1);
  const BubbleGeometry g = solve_geometry(m);
  const double middle = g.theta0 == 0.0 ? g.h : g.h * g.theta0 / std::sin(g.theta0);
  return 2.0 * (g.theta1 * g.r1 + g.theta2 * g.r2 + middle);
}

std::array<double, 2> perimeter_gradient(const MassPair& m) {
  const BubbleGeometry g = solve_geometry(m);
  return {1.0 / g.r1, 1.0 / g.r2};
}

double single_energy(double x, double gamma_ii) {
  return 2.0 * std::sqrt(kPi * x) + gamma_ii * x * x / (4.0 * kPi);
}

double single_energy_derivative(double x, double gamma_ii) {
  return std::sqrt(kPi / x) + gamma_ii * x / (2.0 * kPi);
}

double single_energy_second_derivative(double x, double gamma_ii) {
  return -0.5 * std::sqrt(kPi) * std::pow(x, -1.5) + gamma_ii / (2.0 * kPi);
}

Evaluation e0_eval(const MassPair& m, const GammaMatrix& gamma) {
  validate(m);
  const double inf = std::numeric_limits<double>::infinity();
  Evaluation e;
  const double quad = (gamma.g11 * m.m1 * m.m1 + 2.0 * gamma.g12 * m.m1 * m.m2 + gamma.g22 * m.m2 * m.m2) /
                      (4.0 * kPi);
  const double q1 = (gamma.g11 * m.m1 + gamma.g12 * m.m2) / (2.0 * kPi);
  const double q2 = (gamma.g12 * m.m1 + gamma.g22 * m.m2) / (2.0 * kPi);
  if (m.m2 == 0.0) {
    e.value = 2.0 * std::sqrt(kPi * m.m1) + quad;
    e.d1 = std::sqrt(kPi / m.m1) + q1;
    e.d2 = inf;
    return e;
  }
  if (m.m1 == 0.0) {
    e.value = 2.0 * std::sqrt(kPi * m.m2) + quad;
    e.d1 = inf;
    e.d2 = std::sqrt(kPi / m.m2) + q2;
    return e;
  }
  const BubbleGeometry g = solve_geometry(m);
  const double middle = g.theta0 == 0.0 ? g.h : g.h * g.theta0 / std::sin(g.theta0);
  e.value = 2.0 * (g.theta1 * g.r1 + g.theta2 * g.r2 + middle) + quad;
  e.d1 = 1.0 / g.r1 + q1;
  e.d2 = 1.0 / g.r2 + q2;
  return e;
}

double e0(const MassPair& m, const GammaMatrix& gamma) { return e0_eval(m, gamma).value; }

double e0_hessian_diag(const MassPair& m, const GammaMatrix& gamma, int i) {
  if (i != 1 && i != 2) fail(ErrorKind::invalid_input, "species index must be 1 or 2");
  check_positive(m);
  const double mi = m[i];
  auto grad = [&](double x) {
    MassPair p = m;
    (i == 1 ? p.m1 : p.m2) = x;
    const BubbleGeometry g = solve_geometry(p);
    return 1.0 / (i == 1 ? g.r1 : g.r2);
  };
  const double step = 1e-5 * mi;
  auto central = [&](double s) { return (grad(mi + s) - grad(mi - s)) / (2.0 * s); };
  const double coarse = central(step);
  const double fine = central(0.5 * step);
  return gamma.diag(i) / (2.0 * kPi) + (4.0 * fine - coarse) / 3.0;
}

double concavity_threshold(double gamma_ii, int i, double probe_other_mass) {
  if (!(gamma_ii > 0.0) || !(probe_other_mass > 0.0)) {
    fail(ErrorKind::invalid_input, "concavity threshold needs gamma_ii > 0 and a positive probe mass");
  }
  if (i != 1 && i != 2) fail(ErrorKind::invalid_input, "species index must be 1 or 2");
  GammaMatrix gamma;
  gamma.g11 = gamma.g22 = gamma_ii;
  auto hess = [&](double x) {
    MassPair p = i == 1 ? MassPair{x, probe_other_mass} : MassPair{probe_other_mass, x};
    return e0_hessian_diag(p, gamma, i);
  };
  const double scale = std::pow(gamma_ii, -2.0 / 3.0);
  double lo = 1e-6 * scale;
  double h_lo = hess(lo);
  if (!(h_lo < 0.0)) {
    fail(ErrorKind::convergence, "concavity scan: hessian not negative at the small-mass end");
  }
  double hi = lo;
  double h_hi = h_lo;
  const double limit = 1e4 * scale;
  while (h_hi < 0.0) {
    lo = hi;
    h_lo = h_hi;
    hi *= 1.2;
    if (hi > limit) fail(ErrorKind::convergence, "concavity scan: no sign change in the scan range");
    h_hi = hess(hi);
  }
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-11 * std::abs(b); };
  auto [a, b] = boost::math::tools::toms748_solve(hess, lo, hi, h_lo, h_hi, tol, iters);
  const double root = 0.5 * (a + b);
  if (!(hess(root * (1.0 - 1e-4)) < 0.0 && hess(root * (1.0 + 1e-4)) > 0.0)) {
    fail(ErrorKind::convergence, "concavity threshold failed its bracketing post-check");
  }
  return root;
}

ThresholdScan concavity_threshold_scan(double gamma_ii, int i, std::vector<double> probes) {
  if (probes.empty()) {
    const double scale = std::pow(gamma_ii, -2.0 / 3.0);
    for (double p = 1e-3; p <= 1e4 * 1.0001; p *= 10.0) probes.push_back(p * scale);
  }
  ThresholdScan scan;
  scan.probes = probes;
  scan.infimum = std::numeric_limits<double>::infinity();
  for (double p : probes) {
    const double t = concavity_threshold(gamma_ii, i, p);
    scan.thresholds.push_back(t);
    scan.infimum = std::min(scan.infimum, t);
  }
  return scan;
}

}  // namespace triblock
