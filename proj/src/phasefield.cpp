#include "triblock/phasefield.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "fft.hpp"
#include "triblock/error.hpp"
#include "triblock/torus_green.hpp"

namespace triblock {

namespace {

using Spectrum = std::vector<std::complex<double>>;

constexpr double kPi = std::numbers::pi;
constexpr double kLow = -0.1;
constexpr double kHigh = 1.1;

double w_raw(double u, WellKind k) {
  return k == WellKind::standard ? u * u * (1.0 - u) * (1.0 - u) : u * u * (1.0 - u * u);
}
double dw_raw(double u, WellKind k) {
  return k == WellKind::standard ? 2.0 * u * (1.0 - u) * (1.0 - 2.0 * u) : 2.0 * u - 4.0 * u * u * u;
}
double d2w_raw(double u, WellKind k) {
  return k == WellKind::standard ? 2.0 - 12.0 * u + 12.0 * u * u : 2.0 - 12.0 * u * u;
}

// half-spectrum multiplicity of column j in a real transform
double column_weight(int j, int n) { return (j == 0 || 2 * j == n) ? 1.0 : 2.0; }

double k2_of(const detail::Fft2D& fft, int i, int j) {
  const double ky = fft.ky(i), kx = fft.kx(j);
  return kx * kx + ky * ky;
}

// Σ_k w · Re(a conj b) · mult(k) / N⁴ over nonzero modes
template <class Mult>
double spectral_pair(const detail::Fft2D& fft, const Spectrum& a, const Spectrum& b, Mult mult) {
  const int n = fft.n(), nc = fft.cols();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nc; ++j) {
      const double k2 = k2_of(fft, i, j);
      if (k2 == 0.0) continue;
      const std::size_t idx = static_cast<std::size_t>(i) * nc + j;
      s += column_weight(j, n) * (a[idx] * std::conj(b[idx])).real() * mult(k2);
    }
  const double nn = static_cast<double>(n) * n;
  return s / (nn * nn);
}

EnergyParts energy_from(const detail::Fft2D& fft, const Field& f, const Spectrum& s1, const Spectrum& s2,
                        const GammaMatrix& g) {
  EnergyParts e;
  const double four_pi2 = 4.0 * kPi * kPi;
  auto grad = [&](double k2) { return four_pi2 * k2; };
  auto inv = [&](double k2) { return 1.0 / (four_pi2 * k2); };
  const double g11 = spectral_pair(fft, s1, s1, grad);
  const double g22 = spectral_pair(fft, s2, s2, grad);
  const double g12 = spectral_pair(fft, s1, s2, grad);
  // |∇u0|² = |∇u1 + ∇u2|²
  e.gradient = 0.5 * f.epsilon * (g11 + g22 + (g11 + 2.0 * g12 + g22));
  double w = 0.0;
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    const double a = f.u1.v[k], b = f.u2.v[k];
    w += well(a, f.well) + well(b, f.well) + well(1.0 - a - b, f.well);
  }
  e.well = 0.5 / f.epsilon * w / static_cast<double>(f.u1.size());
  const double p11 = spectral_pair(fft, s1, s1, inv);
  const double p22 = spectral_pair(fft, s2, s2, inv);
  const double p12 = spectral_pair(fft, s1, s2, inv);
  e.nonlocal = 0.5 * (g.g11 * p11 + 2.0 * g.g12 * p12 + g.g22 * p22);
  return e;
}

void check_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) fail(ErrorKind::invalid_input, "eta must lie in (0, 1)");
}

// fractional coverage of cells by a region given in torus coordinates, 4×4 supersampling
template <class Inside>
void paint(Grid& g, double cx, double cy, double radius, Inside inside) {
  const int n = g.n;
  const double h = 1.0 / n;
  const int span = static_cast<int>(std::ceil(radius / h)) + 2;
  const int ci = static_cast<int>(std::lround(cy * n)), cj = static_cast<int>(std::lround(cx * n));
  constexpr int kSub = 4;
  for (int di = -span; di <= span; ++di)
    for (int dj = -span; dj <= span; ++dj) {
      const int i = ((ci + di) % n + n) % n, j = ((cj + dj) % n + n) % n;
      int hits = 0;
      for (int a = 0; a < kSub; ++a)
        for (int b = 0; b < kSub; ++b) {
          const double y = (ci + di) * h + (a + 0.5) / kSub * h - 0.5 * h - cy;
          const double x = (cj + dj) * h + (b + 0.5) / kSub * h - 0.5 * h - cx;
          if (inside(x, y)) ++hits;
        }
      if (hits > 0) g(i, j) = std::min(1.0, g(i, j) + static_cast<double>(hits) / (kSub * kSub));
    }
}

}  // namespace

double well(double u, WellKind kind) {
  if (u < kLow) {
    const double d = u - kLow;
    return w_raw(kLow, kind) + dw_raw(kLow, kind) * d + 0.5 * d2w_raw(kLow, kind) * d * d;
  }
  if (u > kHigh) {
    const double d = u - kHigh;
    return w_raw(kHigh, kind) + dw_raw(kHigh, kind) * d + 0.5 * d2w_raw(kHigh, kind) * d * d;
  }
  return w_raw(u, kind);
}

double well_derivative(double u, WellKind kind) {
  if (u < kLow) return dw_raw(kLow, kind) + d2w_raw(kLow, kind) * (u - kLow);
  if (u > kHigh) return dw_raw(kHigh, kind) + d2w_raw(kHigh, kind) * (u - kHigh);
  return dw_raw(u, kind);
}

void Field::validate() const {
  if (u1.n < 8 || u1.n != u2.n) fail(ErrorKind::invalid_input, "field grids must be N×N with equal N ≥ 8");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::invalid_input, "epsilon must be positive");
  for (std::size_t k = 0; k < u1.size(); ++k)
    if (!std::isfinite(u1.v[k]) || !std::isfinite(u2.v[k])) fail(ErrorKind::invalid_input, "field has non-finite values");
}

GammaMatrix diffuse_gamma(const GammaMatrix& gamma, double eta) {
  check_eta(eta);
  const double s = kSurfaceTension / (std::abs(std::log(eta)) * eta * eta * eta);
  GammaMatrix g = gamma;
  g.g11 *= s;
  g.g22 *= s;
  g.g12 *= s;
  return g;
}

EnergyParts diffuse_energy(const Field& f, const GammaMatrix& gamma_scaled) {
  f.validate();
  detail::Fft2D fft(f.n());
  Spectrum s1, s2;
  fft.forward(f.u1, s1);
  fft.forward(f.u2, s2);
  return energy_from(fft, f, s1, s2, gamma_scaled);
}

RelaxResult relax(const Field& init, const GammaMatrix& gamma_scaled, const RelaxOptions& options) {
  init.validate();
  if (!(gamma_scaled.g11 >= 0.0 && gamma_scaled.g22 >= 0.0 && gamma_scaled.g12 >= 0.0)) {
    fail(ErrorKind::invalid_input, "nonlocal coefficients must be nonnegative");
  }
  if (options.steps < 0 || options.trace_every < 1) fail(ErrorKind::invalid_input, "steps ≥ 0 and trace_every ≥ 1 required");
  const int n = init.n();
  const double eps = init.epsilon;
  const double dt = options.dt > 0.0 ? options.dt : eps / n;
  const double cs = options.stabilization > 0.0 ? options.stabilization : 2.0 / eps;
  if (!std::isfinite(dt)) fail(ErrorKind::invalid_input, "time step must be finite");

  RelaxResult out;
  out.field = init;
  Field& f = out.field;
  const double target1 = init.u1.mean(), target2 = init.u2.mean();
  detail::Fft2D fft(n);
  const int nc = fft.cols();
  const double nn = static_cast<double>(n) * n;
  Spectrum s1, s2, n1, n2;
  fft.forward(f.u1, s1);
  fft.forward(f.u2, s2);
  Grid f1(n), f2(n);

  auto record = [&](int step) {
    TraceRow row;
    row.step = step;
    row.energy = energy_from(fft, f, s1, s2, gamma_scaled);
    row.mass1 = f.u1.mean();
    row.mass2 = f.u2.mean();
    out.trace.push_back(row);
  };
  record(0);

  const double a = 1.0 / dt + cs;
  const double four_pi2 = 4.0 * kPi * kPi;
  for (int step = 1; step <= options.steps; ++step) {
    for (std::size_t k = 0; k < f.u1.size(); ++k) {
      const double u1 = f.u1.v[k], u2 = f.u2.v[k];
      const double d0 = well_derivative(1.0 - u1 - u2, f.well);
      f1.v[k] = 0.5 / eps * (well_derivative(u1, f.well) - d0);
      f2.v[k] = 0.5 / eps * (well_derivative(u2, f.well) - d0);
    }
    fft.forward(f1, n1);
    fft.forward(f2, n2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < nc; ++j) {
        const double k2 = k2_of(fft, i, j);
        if (k2 == 0.0) continue;  // means stay fixed
        const std::size_t idx = static_cast<std::size_t>(i) * nc + j;
        const std::complex<double> g1 = (gamma_scaled.g11 * s1[idx] + gamma_scaled.g12 * s2[idx]) / (four_pi2 * k2);
        const std::complex<double> g2 = (gamma_scaled.g12 * s1[idx] + gamma_scaled.g22 * s2[idx]) / (four_pi2 * k2);
        const std::complex<double> r1 = a * s1[idx] - n1[idx] - g1;
        const std::complex<double> r2 = a * s2[idx] - n2[idx] - g2;
        // (a I + b [[2,1],[1,2]]) x = r
        const double b = eps * four_pi2 * k2;
        const double d11 = a + 2.0 * b, d12 = b;
        const double det = d11 * d11 - d12 * d12;
        s1[idx] = (d11 * r1 - d12 * r2) / det;
        s2[idx] = (d11 * r2 - d12 * r1) / det;
      }
    fft.inverse(s1, f.u1);
    fft.inverse(s2, f.u2);
    double max_abs = 0.0;
    for (std::size_t k = 0; k < f.u1.size(); ++k) {
      f.u1.v[k] /= nn;
      f.u2.v[k] /= nn;
      max_abs = std::max({max_abs, std::abs(f.u1.v[k]), std::abs(f.u2.v[k])});
    }
    if (!(max_abs < 10.0)) {
      std::ostringstream os;
      os << "phase field blew up at step " << step << ": max |u| = " << max_abs << " (dt = " << dt << ", eps = " << eps
         << ")";
      fail(ErrorKind::convergence, os.str());
    }
    // exact re-projection of the means
    const double c1 = target1 - f.u1.mean(), c2 = target2 - f.u2.mean();
    for (std::size_t k = 0; k < f.u1.size(); ++k) {
      f.u1.v[k] += c1;
      f.u2.v[k] += c2;
    }
    s1[0] = target1 * nn;
    s2[0] = target2 * nn;
    out.max_mass_drift =
        std::max({out.max_mass_drift, std::abs(f.u1.mean() - target1), std::abs(f.u2.mean() - target2)});
    if (step % options.trace_every == 0 || step == options.steps) record(step);
  }
  for (std::size_t k = 0; k < f.u1.size(); ++k) out.max_sum = std::max(out.max_sum, f.u1.v[k] + f.u2.v[k]);
  return out;
}

std::uint8_t SharpConfig::label(int i, int j) const {
  const std::size_t k = static_cast<std::size_t>(i) * n + j;
  return v1[k] ? 1 : (v2[k] ? 2 : 0);
}

double grid_interface_length(const SharpConfig& c) {
  long long edges = 0;
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) {
      const int l = c.label(i, j);
      if (l != c.label(i, (j + 1) % c.n)) ++edges;
      if (l != c.label((i + 1) % c.n, j)) ++edges;
    }
  // Cauchy-Crofton: axis-aligned crossings overcount length by 4/π on average
  return 0.25 * kPi * static_cast<double>(edges) / c.n;
}

SharpEnergy sharp_energy(const SharpConfig& c, const GammaMatrix& gamma) {
  check_eta(c.eta);
  gamma.validate();
  const std::size_t cells = static_cast<std::size_t>(c.n) * c.n;
  if (c.n < 2 || c.v1.size() != cells || c.v2.size() != cells) fail(ErrorKind::invalid_input, "sharp config grids malformed");
  bool any = false;
  for (std::size_t k = 0; k < cells; ++k) {
    if (c.v1[k] && c.v2[k]) fail(ErrorKind::overlap, "species supports intersect");
    any = any || c.v1[k] || c.v2[k];
  }
  if (!any) fail(ErrorKind::invalid_input, "sharp config is empty");
  SharpEnergy e;
  e.perimeter = grid_interface_length(c) / c.eta;
  Grid x1(c.n), x2(c.n);
  for (std::size_t k = 0; k < cells; ++k) {
    x1.v[k] = c.v1[k];
    x2.v[k] = c.v2[k];
  }
  const Grid p1 = periodic_poisson_solve(x1), p2 = periodic_poisson_solve(x2);
  const double scale = 1.0 / (2.0 * std::abs(std::log(c.eta)) * std::pow(c.eta, 4));
  e.nonlocal = scale * (gamma.g11 * dot(p1, x1) + 2.0 * gamma.g12 * dot(p1, x2) + gamma.g22 * dot(p2, x2));
  return e;
}

ThresholdResult threshold(const Field& f, double level, double eta) {
  f.validate();
  check_eta(eta);
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::invalid_input, "threshold level must lie in (0, 1)");
  ThresholdResult r;
  SharpConfig& c = r.config;
  c.n = f.n();
  c.eta = eta;
  c.v1.assign(f.u1.size(), 0);
  c.v2.assign(f.u1.size(), 0);
  long long both = 0;
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    const double a = f.u1.v[k], b = f.u2.v[k];
    if (a > level && b > level) ++both;
    if (a + b <= level) continue;
    if (a >= b) c.v1[k] = 1;
    else c.v2[k] = 1;
  }
  r.overlap_fraction = static_cast<double>(both) / static_cast<double>(f.u1.size());
  return r;
}

Components extract_components(const SharpConfig& c) {
  check_eta(c.eta);
  const int n = c.n;
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  std::vector<int> comp(cells, -1);
  Components out;
  const double cell_mass = 1.0 / (static_cast<double>(n) * n * c.eta * c.eta);
  std::vector<std::size_t> stack;
  int next = 0;
  for (std::size_t start = 0; start < cells; ++start) {
    if (comp[start] >= 0 || !(c.v1[start] || c.v2[start])) continue;
    long long n1 = 0, n2 = 0;
    std::complex<double> ex = 0.0, ey = 0.0;
    comp[start] = next;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(k / n), j = static_cast<int>(k % n);
      if (c.v1[k]) ++n1;
      else ++n2;
      ex += std::polar(1.0, 2.0 * kPi * j / n);
      ey += std::polar(1.0, 2.0 * kPi * i / n);
      const int ni[4] = {(i + 1) % n, (i + n - 1) % n, i, i};
      const int nj[4] = {j, j, (j + 1) % n, (j + n - 1) % n};
      for (int d = 0; d < 4; ++d) {
        const std::size_t q = static_cast<std::size_t>(ni[d]) * n + nj[d];
        if (comp[q] < 0 && (c.v1[q] || c.v2[q])) {
          comp[q] = next;
          stack.push_back(q);
        }
      }
    }
    Cluster cl = Cluster::from_mass({n1 * cell_mass, n2 * cell_mass});
    out.config.clusters.push_back(cl);
    out.config.total.m1 += cl.mass.m1;
    out.config.total.m2 += cl.mass.m2;
    out.centers.push_back(TorusPoint::canonical(std::arg(ex) / (2.0 * kPi), std::arg(ey) / (2.0 * kPi)));
    ++next;
  }
  return out;
}

Field seed_droplets(const std::vector<Droplet>& droplets, int n, double eta, double epsilon, SeedShape shape) {
  check_eta(eta);
  Field f;
  f.u1 = Grid(n);
  f.u2 = Grid(n);
  f.epsilon = epsilon;
  for (const Droplet& d : droplets) {
    validate(d.mass);
    const double cx = d.center.x, cy = d.center.y;
    if (!d.mass.is_double()) {
      const int i = d.mass.m1 > 0.0 ? 1 : 2;
      const double R = eta * std::sqrt(d.mass[i] / kPi);
      paint(i == 1 ? f.u1 : f.u2, cx, cy, R, [R](double x, double y) { return x * x + y * y <= R * R; });
      continue;
    }
    if (shape == SeedShape::disks) {
      const double R1 = eta * std::sqrt(d.mass.m1 / kPi), R2 = eta * std::sqrt(d.mass.m2 / kPi);
      paint(f.u1, cx - R1, cy, R1, [R1](double x, double y) { return x * x + y * y <= R1 * R1; });
      paint(f.u2, cx + R2, cy, R2, [R2](double x, double y) { return x * x + y * y <= R2 * R2; });
    } else {
      for (int i = 1; i <= 2; ++i) {
        const LobeShape s = lobe_shape(d.mass, i);
        const double reach = eta * std::max({std::abs(s.box[0]), std::abs(s.box[1]), std::abs(s.box[2]), std::abs(s.box[3])});
        paint(i == 1 ? f.u1 : f.u2, cx, cy, reach, [&s, eta](double x, double y) { return s.contains(x / eta, y / eta); });
      }
    }
  }
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    const double s = f.u1.v[k] + f.u2.v[k];
    if (s > 1.0) {
      f.u1.v[k] /= s;
      f.u2.v[k] /= s;
    }
  }
  return f;
}

Field uniform_noise(const MassPair& means, int n, double epsilon, double amplitude, std::uint64_t seed) {
  Field f;
  f.u1 = Grid(n);
  f.u2 = Grid(n);
  f.epsilon = epsilon;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    f.u1.v[k] = means.m1 + amplitude * U(rng);
    f.u2.v[k] = means.m2 + amplitude * U(rng);
  }
  const double c1 = means.m1 - f.u1.mean(), c2 = means.m2 - f.u2.mean();
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    f.u1.v[k] += c1;
    f.u2.v[k] += c2;
  }
  return f;
}

Field from_sharp(const SharpConfig& c, double epsilon) {
  Field f;
  f.u1 = Grid(c.n);
  f.u2 = Grid(c.n);
  f.epsilon = epsilon;
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    f.u1.v[k] = c.v1[k];
    f.u2.v[k] = c.v2[k];
  }
  return f;
}

void write_pgm(const std::string& path, const Grid& g, double lo, double hi, const std::string& comment) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot open " + path);
  os << "P5\n";
  if (!comment.empty()) os << "# " << comment << "\n";
  os << g.n << " " << g.n << "\n65535\n";
  for (double v : g.v) {
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    os.write(bytes, 2);
  }
  if (!os) fail(ErrorKind::io, "failed writing " + path);
}

}  // namespace triblock
