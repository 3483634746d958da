#include "triblock/torus_green.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "fft.hpp"
#include "triblock/error.hpp"

namespace triblock {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAlpha = 2.0;
constexpr int kRealShells = 4;
constexpr int kRecipCut = 5;
// exp(−α²r²) below 1e-18 beyond this squared radius
constexpr double kRealCutoff2 = 42.0 / (kAlpha * kAlpha);

double e1(double z) { return -std::expint(-z); }

// z − z²/4 + z³/18 − ..., the entire part of E1: E1(z) = Ein(z) − γ − log z
double ein(double z) {
  double term = z;
  double sum = 0.0;
  for (int j = 1; j < 80; ++j) {
    sum += term / j;
    term *= -z / (j + 1);
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

struct Reciprocal {
  double value = 0.0;
  double gx = 0.0;
  double gy = 0.0;
};

// Σ_{k≠0} cos(2πk·p) exp(−π²|k|²/α²)/(4π²|k|²) and its gradient.
Reciprocal reciprocal_sum(double x, double y, bool with_gradient) {
  std::array<double, kRecipCut + 1> cx{}, sx{}, cy{}, sy{};
  for (int k = 0; k <= kRecipCut; ++k) {
    cx[k] = std::cos(2.0 * kPi * k * x);
    sx[k] = std::sin(2.0 * kPi * k * x);
    cy[k] = std::cos(2.0 * kPi * k * y);
    sy[k] = std::sin(2.0 * kPi * k * y);
  }
  Reciprocal r;
  for (int k1 = -kRecipCut; k1 <= kRecipCut; ++k1) {
    for (int k2 = -kRecipCut; k2 <= kRecipCut; ++k2) {
      const int kk = k1 * k1 + k2 * k2;
      if (kk == 0 || kk > kRecipCut * kRecipCut) continue;
      const double w = std::exp(-kPi * kPi * kk / (kAlpha * kAlpha)) / (4.0 * kPi * kPi * kk);
      const int a1 = std::abs(k1), a2 = std::abs(k2);
      const double s1 = k1 < 0 ? -sx[a1] : sx[a1];
      const double s2 = k2 < 0 ? -sy[a2] : sy[a2];
      // cos(a+b) and sin(a+b)
      r.value += w * (cx[a1] * cy[a2] - s1 * s2);
      if (with_gradient) {
        const double sn = s1 * cy[a2] + cx[a1] * s2;
        r.gx -= w * 2.0 * kPi * k1 * sn;
        r.gy -= w * 2.0 * kPi * k2 * sn;
      }
    }
  }
  return r;
}

// The n = 0 real-space image is excluded when skip_origin is set.
double real_space_sum(double x, double y, bool skip_origin) {
  double s = 0.0;
  for (int n1 = -kRealShells; n1 <= kRealShells; ++n1) {
    for (int n2 = -kRealShells; n2 <= kRealShells; ++n2) {
      if (skip_origin && n1 == 0 && n2 == 0) continue;
      const double dx = x - n1, dy = y - n2;
      const double r2 = dx * dx + dy * dy;
      if (r2 > kRealCutoff2) continue;
      s += e1(kAlpha * kAlpha * r2);
    }
  }
  return s / (4.0 * kPi);
}

void require_nonzero(const TorusPoint& p) {
  if (p.x == 0.0 && p.y == 0.0) fail(ErrorKind::singular_input, "Green's function is singular at 0");
}

}  // namespace

double wrap(double t) {
  double w = t - std::floor(t + 0.5);
  if (w >= 0.5) w -= 1.0;
  if (w < -0.5) w += 1.0;
  return w;
}

TorusPoint TorusPoint::canonical(double x, double y) { return {wrap(x), wrap(y)}; }

double TorusPoint::norm() const { return std::hypot(x, y); }

double green(const TorusPoint& q) {
  const TorusPoint p = TorusPoint::canonical(q.x, q.y);
  require_nonzero(p);
  return real_space_sum(p.x, p.y, false) - 1.0 / (4.0 * kAlpha * kAlpha) +
         reciprocal_sum(p.x, p.y, false).value;
}

std::array<double, 2> green_gradient(const TorusPoint& q) {
  const TorusPoint p = TorusPoint::canonical(q.x, q.y);
  require_nonzero(p);
  double gx = 0.0, gy = 0.0;
  for (int n1 = -kRealShells; n1 <= kRealShells; ++n1) {
    for (int n2 = -kRealShells; n2 <= kRealShells; ++n2) {
      const double dx = p.x - n1, dy = p.y - n2;
      const double r2 = dx * dx + dy * dy;
      if (r2 > kRealCutoff2) continue;
      const double f = std::exp(-kAlpha * kAlpha * r2) / r2;
      gx -= dx * f;
      gy -= dy * f;
    }
  }
  const Reciprocal r = reciprocal_sum(p.x, p.y, true);
  return {gx / (2.0 * kPi) + r.gx, gy / (2.0 * kPi) + r.gy};
}

double regular_part(const TorusPoint& q) {
  const TorusPoint p = TorusPoint::canonical(q.x, q.y);
  const double r2 = p.x * p.x + p.y * p.y;
  if (!(r2 < 0.25)) fail(ErrorKind::domain, "regular part is defined for |p| < 1/2");
  const double self = (ein(kAlpha * kAlpha * r2) - std::numbers::egamma - 2.0 * std::log(kAlpha)) / (4.0 * kPi);
  return self + real_space_sum(p.x, p.y, true) - 1.0 / (4.0 * kAlpha * kAlpha) +
         reciprocal_sum(p.x, p.y, false).value;
}

double regular_part_origin() { return regular_part({0.0, 0.0}); }

double regular_part_origin_product() {
  double s = 0.0;
  for (int n = 1; n < 40; ++n) {
    const double t = std::log1p(-std::exp(-2.0 * kPi * n));
    s += t;
    if (std::abs(t) < 1e-20) break;
  }
  return 1.0 / 12.0 - std::log(2.0 * kPi) / (2.0 * kPi) - s / kPi;
}

double green_spectral(const TorusPoint& q) {
  TorusPoint p = TorusPoint::canonical(q.x, q.y);
  require_nonzero(p);
  // sum the Fourier series along the axis whose coordinate is farther from 0
  double x = p.x, y = p.y;
  if (std::abs(x) > std::abs(y)) std::swap(x, y);
  double t = y < 0.0 ? y + 1.0 : y;  // t ∈ (0, 1)
  const double d = std::min(t, 1.0 - t);
  double s = 0.5 * (t * t - t + 1.0 / 6.0);
  for (int k = 1;; ++k) {
    const double a = std::exp(-2.0 * kPi * k * t);
    const double b = std::exp(-2.0 * kPi * k * (1.0 - t));
    const double term = std::cos(2.0 * kPi * k * x) * (a + b) / (2.0 * kPi * k * (-std::expm1(-2.0 * kPi * k)));
    s += term;
    // geometric tail bound of the remaining terms
    const double tail = 2.0 * std::exp(-2.0 * kPi * k * d) / (2.0 * kPi * k * (-std::expm1(-2.0 * kPi * d)));
    if (tail < 1e-17) break;
    if (k > 10000000) fail(ErrorKind::convergence, "spectral Green's sum did not converge");
  }
  return s;
}

Grid periodic_poisson_solve(const Grid& rhs) {
  const int n = rhs.n;
  detail::Fft2D fft(n);
  std::vector<std::complex<double>> spec;
  fft.forward(rhs, spec);
  const int nc = fft.cols();
  const double norm = static_cast<double>(n) * n;
  for (int i = 0; i < n; ++i) {
    const int ky = fft.ky(i);
    for (int j = 0; j < nc; ++j) {
      const int kx = fft.kx(j);
      const double k2 = static_cast<double>(kx * kx + ky * ky);
      auto& c = spec[static_cast<std::size_t>(i) * nc + j];
      c = k2 == 0.0 ? 0.0 : c / (4.0 * kPi * kPi * k2 * norm);
    }
  }
  Grid out(n);
  fft.inverse(spec, out);
  return out;
}

}  // namespace triblock
