#include "triblock/placement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/sobol.hpp>

#include "lbfgs.hpp"
#include "triblock/error.hpp"
#include "triblock/partition.hpp"

namespace triblock {

namespace {

constexpr double kPi = std::numbers::pi;

double pair_weight(const MassPair& a, const MassPair& b, const GammaMatrix& g) {
  return 0.5 * (g.g11 * a.m1 * b.m1 + g.g12 * (a.m1 * b.m2 + a.m2 * b.m1) + g.g22 * a.m2 * b.m2);
}

// x² + y² − h² + 2 x r cos α ≤ 0: inside the circle through (0, ±h) with junction angle α
bool in_circle(double x, double y, double h, double r, double cos_alpha) {
  return x * x + y * y - h * h + 2.0 * x * r * cos_alpha <= 0.0;
}

// ∮ (log ρ / 2 − 1/4) (y − x)·n ds = ∫_A log|y − x| dy
double log_potential(const LobeShape& s, double px, double py, int panels) {
  using Gauss = boost::math::quadrature::gauss<double, 16>;
  double total = 0.0;
  for (const Arc& a : s.arcs) {
    const double sign = a.inward ? -1.0 : 1.0;
    auto integrand = [&](double phi) {
      const double dx = -2.0 * a.r * std::sin(0.5 * (phi + a.alpha)) * std::sin(0.5 * (phi - a.alpha)) - px;
      const double dy = a.r * std::sin(phi) - py;
      const double rho2 = dx * dx + dy * dy;
      if (rho2 == 0.0) return 0.0;
      const double dn = sign * (dx * std::cos(phi) + dy * std::sin(phi));
      return (0.25 * std::log(rho2) - 0.25) * dn * a.r;
    };
    const double w = (a.phi1 - a.phi0) / panels;
    for (int p = 0; p < panels; ++p) total += Gauss::integrate(integrand, a.phi0 + p * w, a.phi0 + (p + 1) * w);
  }
  if (s.has_chord) {
    auto integrand = [&](double y) {
      const double dx = -px, dy = y - py;
      const double rho2 = dx * dx + dy * dy;
      if (rho2 == 0.0) return 0.0;
      return (0.25 * std::log(rho2) - 0.25) * dx * s.chord_normal;
    };
    const double w = 2.0 * s.h / panels;
    for (int p = 0; p < panels; ++p) total += Gauss::integrate(integrand, -s.h + p * w, -s.h + (p + 1) * w);
  }
  return total;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void Layout::validate() const {
  if (points.empty()) fail(ErrorKind::invalid_input, "layout needs at least one point");
  if (points.size() != masses.size()) fail(ErrorKind::invalid_input, "layout has different numbers of points and masses");
  for (const MassPair& m : masses) triblock::validate(m);
  for (std::size_t k = 0; k < points.size(); ++k)
    for (std::size_t l = k + 1; l < points.size(); ++l)
      if ((points[k] - points[l]).norm() == 0.0) {
        fail(ErrorKind::singular_input, "layout points " + std::to_string(k) + " and " + std::to_string(l) + " coincide");
      }
}

double FK(const Layout& layout, const GammaMatrix& gamma) {
  layout.validate();
  double e = 0.0;
  for (std::size_t k = 0; k < layout.size(); ++k)
    for (std::size_t l = k + 1; l < layout.size(); ++l)
      e += 2.0 * pair_weight(layout.masses[k], layout.masses[l], gamma) * green(layout.points[k] - layout.points[l]);
  return e;
}

std::vector<std::array<double, 2>> FK_gradient(const Layout& layout, const GammaMatrix& gamma) {
  layout.validate();
  std::vector<std::array<double, 2>> g(layout.size(), {0.0, 0.0});
  for (std::size_t k = 0; k < layout.size(); ++k)
    for (std::size_t l = k + 1; l < layout.size(); ++l) {
      const double w = 2.0 * pair_weight(layout.masses[k], layout.masses[l], gamma);
      const auto d = green_gradient(layout.points[k] - layout.points[l]);
      g[k][0] += w * d[0];
      g[k][1] += w * d[1];
      g[l][0] -= w * d[0];
      g[l][1] -= w * d[1];
    }
  return g;
}

PlacementResult minimize_FK(const std::vector<MassPair>& masses, const GammaMatrix& gamma,
                            const PlacementOptions& options) {
  if (masses.empty()) fail(ErrorKind::invalid_input, "minimize_FK needs at least one mass");
  for (const MassPair& m : masses) validate(m);
  gamma.validate();
  const std::size_t K = masses.size();
  PlacementResult best;
  best.layout.points.assign(K, TorusPoint{});
  best.layout.masses = masses;
  if (K == 1) return best;

  const std::size_t n = 2 * (K - 1);
  auto build = [&](const std::vector<double>& z) {
    Layout lay;
    lay.masses = masses;
    lay.points.push_back(TorusPoint{});
    for (std::size_t k = 1; k < K; ++k) lay.points.push_back(TorusPoint::canonical(z[2 * k - 2], z[2 * k - 1]));
    return lay;
  };
  auto objective = [&](const std::vector<double>& z, std::vector<double>& grad) {
    try {
      const Layout lay = build(z);
      const auto g = FK_gradient(lay, gamma);
      grad.assign(n, 0.0);
      for (std::size_t k = 1; k < K; ++k) {
        grad[2 * k - 2] = g[k][0];
        grad[2 * k - 1] = g[k][1];
      }
      return FK(lay, gamma);
    } catch (const Error&) {
      grad.assign(n, 0.0);
      return std::numeric_limits<double>::infinity();
    }
  };
  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double t : v) s += t * t;
    return std::sqrt(s);
  };

  std::mt19937_64 rng(mix(options.seed));
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  best.energy = std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> z(n);
    for (double& t : z) t = unit(rng);
    detail::LbfgsOptions opt;
    opt.max_iterations = options.max_iterations;
    opt.gradient_tolerance = options.gradient_tolerance / std::sqrt(static_cast<double>(n));
    opt.relative_decrease = 0.0;
    int last_iteration = 0;
    if (options.record_trace) {
      opt.on_iteration = [&best, &last_iteration, r](int it, double f, double gmax) {
        best.trace.push_back({r, it, f, gmax});
        last_iteration = it;
      };
    }
    detail::lbfgs(objective, z, opt);
    std::vector<double> g;
    double f = objective(z, g);
    // energy differences fall below rounding near the minimum; finish on the gradient alone
    for (int it = 0; it < 20 && std::isfinite(f) && norm2(g) > 0.1 * options.gradient_tolerance; ++it) {
      Eigen::MatrixXd H(n, n);
      std::vector<double> gp, gm;
      const double step = 1e-6;
      for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> zp = z, zm = z;
        zp[c] += step;
        zm[c] -= step;
        objective(zp, gp);
        objective(zm, gm);
        for (std::size_t rr = 0; rr < n; ++rr) H(rr, c) = (gp[rr] - gm[rr]) / (2.0 * step);
      }
      H = 0.5 * (H + H.transpose()).eval();
      const Eigen::VectorXd d = H.ldlt().solve(-Eigen::Map<Eigen::VectorXd>(g.data(), n));
      if (!d.allFinite()) break;
      std::vector<double> zn = z, gn;
      for (std::size_t c = 0; c < n; ++c) zn[c] += d[c];
      const double fn = objective(zn, gn);
      if (!std::isfinite(fn) || norm2(gn) >= norm2(g) || fn > f + 1e-12 * std::max(1.0, std::abs(f))) break;
      z.swap(zn);
      g.swap(gn);
      f = fn;
      if (options.record_trace) best.trace.push_back({r, ++last_iteration, f, norm2(g)});
    }
    if (f < best.energy) {
      best.energy = f;
      best.layout = build(z);
      best.gradient_norm = norm2(g);
      best.best_restart = r;
    }
  }
  if (!(best.gradient_norm <= options.gradient_tolerance)) {
    std::ostringstream os;
    os << "placement descent stalled: gradient norm " << best.gradient_norm << " > " << options.gradient_tolerance
       << " at energy " << best.energy << " (restart " << best.best_restart << " of " << restarts << ")";
    fail(ErrorKind::convergence, os.str());
  }
  return best;
}

bool LobeShape::contains(double x, double y) const {
  switch (rule) {
    case 0: return x * x + y * y <= own_r * own_r;
    case 1: return x <= 0.0 ? in_circle(x, y, h, own_r, own_cos) : in_circle(x, y, h, mid_r, mid_cos);
    case 2: return x > 0.0 && in_circle(x, y, h, own_r, own_cos) && !in_circle(x, y, h, mid_r, mid_cos);
    case 3: return x <= 0.0 && in_circle(x, y, h, own_r, own_cos);
    case 4: return x >= 0.0 && in_circle(x, y, h, own_r, own_cos);
  }
  return false;
}

LobeShape lobe_shape(const MassPair& m, int i) {
  validate(m);
  if (i != 1 && i != 2) fail(ErrorKind::invalid_input, "lobe index must be 1 or 2");
  if (!(m[i] > 0.0)) fail(ErrorKind::invalid_input, "lobe " + std::to_string(i) + " is empty");
  LobeShape s;
  s.area = m[i];
  if (!m.is_double()) {
    const double R = std::sqrt(m[i] / kPi);
    s.rule = 0;
    s.own_r = R;
    s.arcs.push_back({R, kPi / 2.0, 0.0, 2.0 * kPi, false});
    s.box = {-R, R, -R, R};
    return s;
  }
  const BubbleGeometry g = solve_geometry(m);
  const bool small = (i == 1) != g.swapped;
  const double rs = g.swapped ? g.r2 : g.r1;
  const double rl = g.swapped ? g.r1 : g.r2;
  const double ts = kPi / 3.0 + g.gap;  // small-lobe half-angle
  const double tl = kPi - g.gap;        // large-lobe half-angle
  s.h = g.h;
  const bool symmetric = std::isinf(g.r0);
  if (small) {
    s.own_r = rs;
    s.own_cos = -std::cos(ts);
    s.arcs.push_back({rs, kPi - ts, kPi - ts, kPi + ts, false});
    s.box[0] = -rs * (1.0 - std::cos(ts));
    s.box[3] = ts > kPi / 2.0 ? rs : g.h;
  } else {
    s.own_r = rl;
    s.own_cos = std::cos(tl);
    s.arcs.push_back({rl, tl, -tl, tl, false});
    s.box[1] = rl * (1.0 - std::cos(tl));
    s.box[3] = rl;
  }
  s.box[2] = -s.box[3];
  if (symmetric) {
    s.rule = small ? 3 : 4;
    s.has_chord = true;
    s.chord_normal = small ? 1.0 : -1.0;
  } else {
    s.rule = small ? 1 : 2;
    s.mid_r = g.r0;
    s.mid_cos = std::cos(g.theta0);
    s.arcs.push_back({g.r0, g.theta0, -g.theta0, g.theta0, !small});
    if (small) s.box[1] = 2.0 * g.r0 * std::sin(0.5 * g.theta0) * std::sin(0.5 * g.theta0);
  }
  return s;
}

QuadratureResult self_interaction(const MassPair& m, int i, int j, const QuadratureOptions& options) {
  validate(m);
  if (i < 1 || i > 2 || j < 1 || j > 2) fail(ErrorKind::invalid_input, "species index must be 1 or 2");
  QuadratureResult out;
  if (!(m[i] > 0.0) || !(m[j] > 0.0)) return out;
  if (!m.is_double()) {
    // ∫∫_disk log|x − y| = π² R⁴ (log R − 1/4)
    const double R = std::sqrt(m[i] / kPi);
    out.value = -0.5 * kPi * std::pow(R, 4) * (std::log(R) - 0.25);
    return out;
  }
  if (options.log2_points < 4 || options.log2_points > 30 || options.replicates < 2 || options.panels < 1) {
    fail(ErrorKind::invalid_input, "quadrature needs 4..30 log2 points, at least 2 replicates and 1 panel");
  }
  const LobeShape outer = lobe_shape(m, i);
  const LobeShape inner = lobe_shape(m, j);
  const long long N = 1LL << options.log2_points;
  const double bw = outer.box[1] - outer.box[0];
  const double bh = outer.box[3] - outer.box[2];
  const double scale = 0x1p-64;
  std::vector<double> reps;
  for (int r = 0; r < options.replicates; ++r) {
    const std::uint64_t sx = mix(options.seed * 0x100000001b3ULL + 2 * r);
    const std::uint64_t sy = mix(options.seed * 0x100000001b3ULL + 2 * r + 1);
    boost::random::sobol qrng(2);
    double acc = 0.0;
    for (long long k = 0; k < N; ++k) {
      std::uint64_t a = 0, b = 0;
      if (k > 0) {
        a = qrng();
        b = qrng();
      }
      const double x = outer.box[0] + bw * (static_cast<double>(a ^ sx) * scale);
      const double y = outer.box[2] + bh * (static_cast<double>(b ^ sy) * scale);
      if (outer.contains(x, y)) acc += log_potential(inner, x, y, options.panels);
    }
    reps.push_back(-bw * bh * acc / static_cast<double>(N) / (2.0 * kPi));
  }
  double mean = 0.0;
  for (double v : reps) mean += v;
  mean /= reps.size();
  double var = 0.0;
  for (double v : reps) var += (v - mean) * (v - mean);
  var /= (reps.size() - 1);
  out.value = mean;
  out.std_error = std::sqrt(var / reps.size());
  out.samples = N * options.replicates;
  return out;
}

F0Result F0(const Layout& layout, const GammaMatrix& gamma, const QuadratureOptions& options) {
  layout.validate();
  gamma.validate();
  F0Result out;
  out.R0 = regular_part_origin();
  out.fk = FK(layout, gamma);
  std::map<std::pair<double, double>, std::pair<double, double>> cache;
  double var = 0.0;
  for (const MassPair& m : layout.masses) {
    const auto key = std::make_pair(m.m1, m.m2);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const QuadratureResult f11 = self_interaction(m, 1, 1, options);
      const QuadratureResult f22 = self_interaction(m, 2, 2, options);
      const QuadratureResult f12 = self_interaction(m, 1, 2, options);
      const double v = 0.5 * (gamma.g11 * f11.value + gamma.g22 * f22.value) + gamma.g12 * f12.value;
      const double e2 = 0.25 * (std::pow(gamma.g11 * f11.std_error, 2) + std::pow(gamma.g22 * f22.std_error, 2)) +
                        std::pow(gamma.g12 * f12.std_error, 2);
      it = cache.emplace(key, std::make_pair(v, e2)).first;
    }
    out.self += it->second.first + pair_weight(m, m, gamma) * out.R0;
    var += it->second.second;
  }
  out.value = out.self + out.fk;
  out.std_error = std::sqrt(var);

  Configuration c;
  for (const MassPair& m : layout.masses) c.clusters.push_back(Cluster::from_mass(m));
  c.canonicalize();
  const Thresholds th = thresholds(gamma);
  out.masses_pass_conditions = true;
  for (const ConditionCheck& ck : check_necessary_conditions(c, gamma, th)) out.masses_pass_conditions &= ck.passed;
  return out;
}

}  // namespace triblock
