#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "triblock/error.hpp"
#include "triblock/geometry.hpp"

using namespace triblock;

namespace {

constexpr double kPi = std::numbers::pi;

struct Pt {
  double x, y;
};

// Dense polyline of the circle of radius r centered at (cx, 0), angles a..b.
std::vector<Pt> arc(double cx, double r, double a, double b, int n) {
  std::vector<Pt> p;
  for (int k = 0; k <= n; ++k) {
    const double t = a + (b - a) * k / n;
    p.push_back({cx + r * std::cos(t), r * std::sin(t)});
  }
  return p;
}

double shoelace(const std::vector<Pt>& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Pt& a = p[k];
    const Pt& b = p[(k + 1) % p.size()];
    s += a.x * b.y - a.y * b.x;
  }
  return 0.5 * std::abs(s);
}

double length(const std::vector<Pt>& p) {
  double s = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) s += std::hypot(p[k].x - p[k - 1].x, p[k].y - p[k - 1].y);
  return s;
}

// Small lobe on the left, large on the right, middle arc bulging into the large lobe.
struct Built {
  double area_small, area_large, length;
  double junction_angles[3];
};

Built build(const BubbleGeometry& g) {
  const double ts = g.swapped ? g.theta2 : g.theta1;
  const double tl = g.swapped ? g.theta1 : g.theta2;
  const double rs = g.swapped ? g.r2 : g.r1;
  const double rl = g.swapped ? g.r1 : g.r2;
  const int n = 200000;
  // left arc: center (rs cos ts, 0), angles π − ts .. π + ts
  const std::vector<Pt> left = arc(rs * std::cos(ts), rs, kPi - ts, kPi + ts, n);
  // right arc: center (−rl cos tl, 0), angles −tl .. tl
  const std::vector<Pt> right = arc(-rl * std::cos(tl), rl, -tl, tl, n);
  std::vector<Pt> middle;
  if (std::isinf(g.r0)) {
    for (int k = 0; k <= n; ++k) middle.push_back({0.0, -g.h + 2.0 * g.h * k / n});
  } else {
    middle = arc(-g.r0 * std::cos(g.theta0), g.r0, -g.theta0, g.theta0, n);
  }
  std::vector<Pt> small = left;  // top → bottom through the left
  small.insert(small.end(), middle.begin() + 1, middle.end() - 1);  // bottom → top
  std::vector<Pt> large = right;  // bottom → top through the right
  large.insert(large.end(), middle.rbegin() + 1, middle.rend() - 1);  // top → bottom
  Built b{};
  b.area_small = shoelace(small);
  b.area_large = shoelace(large);
  b.length = length(left) + length(right) + length(middle);
  // unit tangents leaving the top junction (0, h) along each arc
  auto dir = [](const std::vector<Pt>& p, bool from_front) {
    const Pt a = from_front ? p[0] : p[p.size() - 1];
    const Pt b = from_front ? p[1] : p[p.size() - 2];
    const double l = std::hypot(b.x - a.x, b.y - a.y);
    return Pt{(b.x - a.x) / l, (b.y - a.y) / l};
  };
  const Pt d[3] = {dir(left, true), dir(right, false), dir(middle, false)};
  for (int k = 0; k < 3; ++k) {
    const Pt& u = d[k];
    const Pt& v = d[(k + 1) % 3];
    b.junction_angles[k] = std::acos(std::clamp(u.x * v.x + u.y * v.y, -1.0, 1.0));
  }
  return b;
}

}  // namespace

TEST(Geometry, ArcConstructionReproducesAreasLengthAndJunctionAngles) {
  for (MassPair m : {MassPair{1.0, 1.0}, MassPair{1.0, 2.0}, MassPair{3.0, 0.5}, MassPair{0.05, 1.0}, MassPair{7.0, 6.5}}) {
    const BubbleGeometry g = solve_geometry(m);
    const Built b = build(g);
    const double small = std::min(m.m1, m.m2), large = std::max(m.m1, m.m2);
    EXPECT_NEAR(b.area_small / small, 1.0, 1e-8) << m.m1 << "," << m.m2;
    EXPECT_NEAR(b.area_large / large, 1.0, 1e-8) << m.m1 << "," << m.m2;
    EXPECT_NEAR(b.length / perimeter(m), 1.0, 1e-8);
    // first polyline segments stand in for the tangents
    for (double a : b.junction_angles) EXPECT_NEAR(a, 2.0 * kPi / 3.0, 1e-4);
  }
}

TEST(Geometry, ClosedFormsAtEqualMassesAndSingles) {
  EXPECT_NEAR(perimeter({1.0, 0.0}), 2.0 * std::sqrt(kPi), 1e-14);
  EXPECT_NEAR(perimeter({0.0, 1.0}), 2.0 * std::sqrt(kPi), 1e-14);
  const double eq = 2.0 * std::sqrt(2.0) * std::sqrt(4.0 * kPi / 3.0 + std::sqrt(3.0) / 2.0);
  EXPECT_NEAR(perimeter({1.0, 1.0}) / eq, 1.0, 1e-13);
  EXPECT_NEAR(perimeter({1.0, 1.0}), 6.359129253959747, 1e-12);
  const BubbleGeometry g = solve_geometry({2.0, 2.0});
  EXPECT_TRUE(std::isinf(g.r0));
  EXPECT_DOUBLE_EQ(g.r1, g.r2);
  EXPECT_DOUBLE_EQ(g.theta1, 2.0 * kPi / 3.0);
}

TEST(Geometry, ScalingLaw) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.01, 5.0);
  for (int k = 0; k < 50; ++k) {
    const MassPair m{U(rng), U(rng)};
    for (double lam : {0.1, 0.5, 2.0, 10.0}) {
      const double p = perimeter({lam * lam * m.m1, lam * lam * m.m2});
      EXPECT_NEAR(p / (lam * perimeter(m)), 1.0, 1e-12);
    }
  }
}

TEST(Geometry, SwapSymmetry) {
  for (MassPair m : {MassPair{1.0, 3.0}, MassPair{0.001, 2.0}}) {
    const BubbleGeometry a = solve_geometry(m), b = solve_geometry({m.m2, m.m1});
    EXPECT_DOUBLE_EQ(a.r1, b.r2);
    EXPECT_DOUBLE_EQ(a.theta1, b.theta2);
    EXPECT_DOUBLE_EQ(perimeter(m), perimeter({m.m2, m.m1}));
  }
}

TEST(Geometry, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.05, 4.0);
  for (int k = 0; k < 100; ++k) {
    const MassPair m{U(rng), U(rng)};
    const auto g = perimeter_gradient(m);
    const double s1 = 1e-6 * m.m1, s2 = 1e-6 * m.m2;
    const double f1 = (perimeter({m.m1 + s1, m.m2}) - perimeter({m.m1 - s1, m.m2})) / (2 * s1);
    const double f2 = (perimeter({m.m1, m.m2 + s2}) - perimeter({m.m1, m.m2 - s2})) / (2 * s2);
    EXPECT_NEAR(g[0] / f1, 1.0, 1e-6);
    EXPECT_NEAR(g[1] / f2, 1.0, 1e-6);
  }
}

TEST(Geometry, ResidualsAtRoundOffOverWideRatios) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> L(std::log(1e-4), 0.0);
  for (int k = 0; k < 2000; ++k) {
    const MassPair m{std::exp(L(rng)) * 2.0, 2.0};
    for (double r : geometry_residuals(solve_geometry(m), m)) EXPECT_LT(std::abs(r), 1e-12);
  }
  // nearly equal masses straddle the symmetric shortcut
  for (double d : {1e-15, 1e-13, 1e-11, 1e-9, 1e-6}) {
    const MassPair m{1.0, 1.0 - d};
    for (double r : geometry_residuals(solve_geometry(m), m)) EXPECT_LT(std::abs(r), 1e-12) << d;
  }
}

TEST(Geometry, TinyLobeApproachesDisk) {
  const double p = perimeter({1e-10, 1.0});
  EXPECT_NEAR(p, 2.0 * std::sqrt(kPi), 1e-4);
  EXPECT_GT(p, 2.0 * std::sqrt(kPi));
}

TEST(Geometry, E0AddsQuadraticSelfEnergy) {
  GammaMatrix g;
  g.g11 = 2.0;
  g.g22 = 3.0;
  g.g12 = 0.5;
  const MassPair m{1.5, 0.7};
  const double quad = (2.0 * 1.5 * 1.5 + 2.0 * 0.5 * 1.5 * 0.7 + 3.0 * 0.7 * 0.7) / (4.0 * kPi);
  EXPECT_NEAR(e0(m, g), perimeter(m) + quad, 1e-13);
  EXPECT_NEAR(e0({2.0, 0.0}, g), 2.0 * std::sqrt(2.0 * kPi) + 2.0 * 4.0 / (4.0 * kPi), 1e-13);
  const Evaluation s = e0_eval({2.0, 0.0}, g);
  EXPECT_TRUE(std::isinf(s.d2));
}

TEST(Geometry, ConcavityNearSmallLobes) {
  GammaMatrix g;
  const double probe = 1.0;
  const double ms = concavity_threshold(g.g11, 1, probe);
  EXPECT_GT(ms, 0.0);
  EXPECT_LT(e0_hessian_diag({0.5 * ms, probe}, g, 1), 0.0);
  EXPECT_GT(e0_hessian_diag({2.0 * ms, probe}, g, 1), 0.0);
  double prev = e0_hessian_diag({1e-2 * ms, probe}, g, 1);
  for (double f : {1e-3, 1e-4}) {
    const double h = e0_hessian_diag({f * ms, probe}, g, 1);
    EXPECT_LT(h, prev);
    prev = h;
  }
}

TEST(Geometry, InvalidInputs) {
  EXPECT_THROW(solve_geometry({0.0, 1.0}), Error);
  EXPECT_THROW(perimeter({-1.0, 1.0}), Error);
  EXPECT_THROW(perimeter({0.0, 0.0}), Error);
  EXPECT_THROW(perimeter({std::nan(""), 1.0}), Error);
  GammaMatrix bad;
  bad.g11 = -1.0;
  EXPECT_THROW(bad.validate(), Error);
}
