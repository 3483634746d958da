#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "triblock/error.hpp"
#include "triblock/geometry.hpp"
#include "triblock/phasefield.hpp"

using namespace triblock;

namespace {

constexpr double kPi = std::numbers::pi;

GammaMatrix G(double g11, double g22, double g12) {
  GammaMatrix g;
  g.g11 = g11;
  g.g22 = g22;
  g.g12 = g12;
  return g;
}

// periodic stripe of species 1 with tanh walls at x = 1/4 and 3/4
Field stripe(int n, double eps) {
  Field f;
  f.u1 = Grid(n);
  f.u2 = Grid(n);
  f.epsilon = eps;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) / n;
      const double d = std::min(std::abs(x - 0.5), 1.0 - std::abs(x - 0.5));  // distance to the stripe center
      f.u1(i, j) = 1.0 / (1.0 + std::exp(-(0.25 - d) / eps));
    }
  return f;
}

Field disks(int n, double eta, double eps, std::vector<Droplet> ds) { return seed_droplets(ds, n, eta, eps); }

double max_shift_diff(const Grid& a, const Grid& b, int si, int sj) {
  double d = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) d = std::max(d, std::abs(a((i + si) % a.n, (j + sj) % a.n) - b(i, j)));
  return d;
}

}  // namespace

TEST(PhaseField, WellAndExtension) {
  EXPECT_EQ(well(0.0), 0.0);
  EXPECT_EQ(well(1.0), 0.0);
  EXPECT_NEAR(well(0.5), 1.0 / 16.0, 1e-15);
  for (double u : {-0.3, -0.1, 0.2, 0.7, 1.1, 1.4}) {
    const double h = 1e-6;
    EXPECT_NEAR(well_derivative(u), (well(u + h) - well(u - h)) / (2 * h), 1e-8) << u;
  }
  // C¹ across the switch points
  for (double u : {-0.1, 1.1}) {
    EXPECT_NEAR(well(u - 1e-12), well(u + 1e-12), 1e-11);
    EXPECT_NEAR(well_derivative(u - 1e-12), well_derivative(u + 1e-12), 1e-10);
  }
  EXPECT_LT(well(-0.5, WellKind::printed), well(-0.4, WellKind::printed) + 1.0);
}

TEST(PhaseField, SurfaceTensionConstant) {
  const int n = 100000;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = (k + 0.5) / n;
    s += std::sqrt(well(u));
  }
  EXPECT_NEAR(2.0 * s / n, kSurfaceTension, 1e-9);
}

TEST(PhaseField, UniformFieldHasOnlyWellEnergy) {
  Field f;
  f.u1 = Grid(32, 0.2);
  f.u2 = Grid(32, 0.1);
  f.epsilon = 0.05;
  const EnergyParts e = diffuse_energy(f, G(10, 10, 3));
  EXPECT_NEAR(e.gradient, 0.0, 1e-16);
  EXPECT_NEAR(e.nonlocal, 0.0, 1e-16);
  EXPECT_NEAR(e.well, 0.5 / 0.05 * (well(0.2) + well(0.1) + well(0.7)), 1e-13);
}

TEST(PhaseField, StripeEnergyApproachesSurfaceTension) {
  const int n = 256;
  for (double cells : {4.0, 8.0}) {
    const Field f = stripe(n, cells / n);
    const EnergyParts e = diffuse_energy(f, G(1, 1, 0));
    // two walls of unit length
    EXPECT_NEAR((e.gradient + e.well) / (2.0 * kSurfaceTension), 1.0, 0.05) << cells;
    EXPECT_GT(e.nonlocal, 0.0);
  }
}

TEST(PhaseField, ThresholdOfStripe) {
  const int n = 128;
  const Field f = stripe(n, 3.0 / n);
  const ThresholdResult t = threshold(f, 0.5, 0.1);
  // each row has the cells with |x − 1/2| < 1/4: columns 33..95
  int first = -1, last = -1;
  for (int j = 0; j < n; ++j)
    if (t.config.v1[j]) {
      if (first < 0) first = j;
      last = j;
    }
  EXPECT_NEAR(first, n / 4, 1);
  EXPECT_NEAR(last, 3 * n / 4, 1);
  EXPECT_EQ(t.overlap_fraction, 0.0);
  // idempotent on indicators
  const ThresholdResult again = threshold(from_sharp(t.config, 1.0 / n), 0.5, 0.1);
  EXPECT_EQ(again.config.v1, t.config.v1);
  EXPECT_EQ(again.config.v2, t.config.v2);
  Field zero;
  zero.u1 = Grid(16);
  zero.u2 = Grid(16);
  zero.epsilon = 0.1;
  const ThresholdResult z = threshold(zero, 0.5, 0.1);
  EXPECT_TRUE(extract_components(z.config).config.clusters.empty());
  EXPECT_THROW(sharp_energy(z.config, G(1, 1, 0)), Error);
}

TEST(PhaseField, ComponentsOfSeededDroplets) {
  const int n = 256;
  const double eta = 0.05;
  const Field f = disks(n, eta, 1.0 / n, {{{0.1, 0.1}, {2.0, 0.0}}, {{-0.3, 0.2}, {0.0, 3.0}}, {{0.49, -0.49}, {1.0, 1.5}}});
  const ThresholdResult t = threshold(f, 0.5, eta);
  const Components c = extract_components(t.config);
  ASSERT_EQ(c.config.clusters.size(), 3u);
  EXPECT_EQ(c.config.count(ClusterKind::double_bubble), 1);
  EXPECT_EQ(c.config.count(ClusterKind::single_type1), 1);
  EXPECT_EQ(c.config.count(ClusterKind::single_type2), 1);
  const double cell = 1.0 / (n * n * eta * eta);
  for (std::size_t k = 0; k < 3; ++k) {
    const Cluster& cl = c.config.clusters[k];
    const TorusPoint p = c.centers[k];
    if (cl.kind == ClusterKind::single_type1) {
      EXPECT_NEAR(cl.mass.m1, 2.0, 2.0 * std::sqrt(2.0 * kPi) / eta * (1.0 / n) / eta + cell);
      EXPECT_NEAR(p.x, 0.1, 1.0 / n);
      EXPECT_NEAR(p.y, 0.1, 1.0 / n);
    } else if (cl.kind == ClusterKind::double_bubble) {
      EXPECT_NEAR(cl.mass.m1 / 1.0, 1.0, 0.1);
      EXPECT_NEAR(cl.mass.m2 / 1.5, 1.0, 0.1);
      EXPECT_NEAR(std::abs(p.y), 0.49, 2.0 / n);  // wraps across the boundary
    }
  }
}

TEST(PhaseField, SharpEnergyOfDiskNearE0) {
  const int n = 512;
  const double eta = 0.05;
  const GammaMatrix g = G(1, 1, 0);
  for (double m : {1.0, 4.0}) {
    const Field f = disks(n, eta, 1.0 / n, {{{0.0, 0.0}, {m, 0.0}}});
    const ThresholdResult t = threshold(f, 0.5, eta);
    const SharpEnergy s = sharp_energy(t.config, g);
    EXPECT_NEAR(s.total() / e0({m, 0.0}, g), 1.0, 0.1) << m;
    EXPECT_NEAR(s.perimeter / perimeter({m, 0.0}), 1.0, 0.03) << m;
  }
}

TEST(PhaseField, FarDisksInteractWeakly) {
  const int n = 256;
  const double eta = 0.05;
  const GammaMatrix g = G(1, 1, 1);
  const Field one = disks(n, eta, 1.0 / n, {{{0.0, 0.0}, {2.0, 0.0}}});
  const Field two = disks(n, eta, 1.0 / n, {{{0.0, 0.0}, {2.0, 0.0}}, {{0.5, 0.5}, {0.0, 2.0}}});
  const Field other = disks(n, eta, 1.0 / n, {{{0.5, 0.5}, {0.0, 2.0}}});
  const double self = sharp_energy(threshold(one, 0.5, eta).config, g).nonlocal +
                      sharp_energy(threshold(other, 0.5, eta).config, g).nonlocal;
  const double both = sharp_energy(threshold(two, 0.5, eta).config, g).nonlocal;
  const double cross = both - self;
  EXPECT_LT(std::abs(cross), std::abs(self) * 3.0 / std::abs(std::log(eta)));
}

TEST(PhaseField, OverlappingIndicatorsAreRejected) {
  SharpConfig c;
  c.n = 16;
  c.eta = 0.1;
  c.v1.assign(256, 0);
  c.v2.assign(256, 0);
  c.v1[5] = c.v2[5] = 1;
  EXPECT_THROW(sharp_energy(c, G(1, 1, 0)), Error);
}

TEST(PhaseField, UniformStateIsFixed) {
  Field f = uniform_noise({0.2, 0.3}, 32, 0.05, 0.0, 1);
  RelaxOptions o;
  o.steps = 50;
  const RelaxResult r = relax(f, G(100, 100, 10), o);
  for (std::size_t k = 0; k < f.u1.size(); ++k) {
    EXPECT_NEAR(r.field.u1.v[k], 0.2, 1e-15);
    EXPECT_NEAR(r.field.u2.v[k], 0.3, 1e-15);
  }
}

TEST(PhaseField, MassConservedAndEnergyMonotone) {
  const GammaMatrix g = G(200, 150, 40);
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Field f = uniform_noise({0.3, 0.25}, 64, 2.0 / 64, 1e-2 * (1 + seed % 3), seed);
    RelaxOptions o;
    o.steps = 1000;
    const RelaxResult r = relax(f, g, o);
    EXPECT_LT(r.max_mass_drift, 1e-12);
    ASSERT_EQ(r.trace.size(), 1001u);
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      EXPECT_LE(r.trace[k].energy.total(), r.trace[k - 1].energy.total() + 1e-10) << "seed " << seed << " step " << k;
      EXPECT_NEAR(r.trace[k].mass1, 0.3, 1e-12);
      EXPECT_NEAR(r.trace[k].mass2, 0.25, 1e-12);
    }
    EXPECT_LT(r.trace.back().energy.total(), r.trace.front().energy.total());
    EXPECT_LT(r.max_sum, 1.0 + 0.1);
  }
}

TEST(PhaseField, TranslationEquivariance) {
  const int n = 64;
  Field f = uniform_noise({0.3, 0.2}, n, 2.0 / n, 2e-2, 5);
  Field s = f;
  const int si = 7, sj = 19;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      s.u1((i + si) % n, (j + sj) % n) = f.u1(i, j);
      s.u2((i + si) % n, (j + sj) % n) = f.u2(i, j);
    }
  RelaxOptions o;
  o.steps = 200;
  const GammaMatrix g = G(50, 80, 10);
  const RelaxResult a = relax(f, g, o), b = relax(s, g, o);
  EXPECT_LT(max_shift_diff(b.field.u1, a.field.u1, si, sj), 1e-10);
  EXPECT_LT(max_shift_diff(b.field.u2, a.field.u2, si, sj), 1e-10);
}

TEST(PhaseField, SpeciesSwapCommutesWithRelax) {
  const int n = 64;
  Field f = uniform_noise({0.3, 0.2}, n, 2.0 / n, 2e-2, 9);
  Field s = f;
  std::swap(s.u1, s.u2);
  RelaxOptions o;
  o.steps = 200;
  const RelaxResult a = relax(f, G(50, 80, 10), o), b = relax(s, G(80, 50, 10), o);
  EXPECT_LT(max_shift_diff(a.field.u1, b.field.u2, 0, 0), 1e-10);
  EXPECT_LT(max_shift_diff(a.field.u2, b.field.u1, 0, 0), 1e-10);
}

TEST(PhaseField, BlowUpIsDetected) {
  Field f = uniform_noise({0.3, 0.3}, 32, 0.01, 0.1, 3);
  RelaxOptions o;
  o.dt = 10.0;
  o.stabilization = 1e-9;
  o.steps = 200;
  try {
    relax(f, G(1, 1, 0), o);
    FAIL() << "expected blow-up";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::convergence);
  }
}

TEST(PhaseField, DiffuseGammaScaling) {
  const GammaMatrix d = diffuse_gamma(G(2, 3, 1), 0.04);
  const double s = kSurfaceTension / (std::abs(std::log(0.04)) * std::pow(0.04, 3));
  EXPECT_NEAR(d.g11 / s, 2.0, 1e-12);
  EXPECT_NEAR(d.g22 / s, 3.0, 1e-12);
  EXPECT_NEAR(d.g12 / s, 1.0, 1e-12);
  EXPECT_THROW(diffuse_gamma(G(1, 1, 0), 0.0), Error);
}

TEST(PhaseField, PgmHeaderAndSize) {
  Grid g(8, 0.5);
  const std::string path = testing::TempDir() + "field.pgm";
  write_pgm(path, g, 0.0, 1.0, "config_hash abc");
  std::ifstream is(path, std::ios::binary);
  std::string magic, comment;
  std::getline(is, magic);
  std::getline(is, comment);
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(comment, "# config_hash abc");
  std::string dims, maxv;
  std::getline(is, dims);
  std::getline(is, maxv);
  EXPECT_EQ(dims, "8 8");
  EXPECT_EQ(maxv, "65535");
  std::string body((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  EXPECT_EQ(body.size(), 128u);
  std::remove(path.c_str());
}
