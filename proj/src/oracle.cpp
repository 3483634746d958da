#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "triblock/error.hpp"
#include "triblock/partition.hpp"

namespace triblock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Grid steps that divide each total exactly.
std::array<long, 2> grid_counts(const MassPair& M, double delta) {
  return {std::lround(M.m1 / delta), std::lround(M.m2 / delta)};
}

double quantum(double total, long count) { return count > 0 ? total / static_cast<double>(count) : 0.0; }

// |∂e0/∂m_i| bounded over the box of masses within one quantum of m.
double gradient_bound(const MassPair& m, const GammaMatrix& gamma, int i, const std::array<double, 2>& q) {
  double best = 0.0;
  for (int c1 = -1; c1 <= 1; ++c1)
    for (int c2 = -1; c2 <= 1; ++c2) {
      const MassPair p{m.m1 + c1 * q[0], m.m2 + c2 * q[1]};
      if (p.m1 < 0.0 || p.m2 < 0.0 || !(p.m1 + p.m2 > 0.0)) continue;
      if (!(p[i] > 0.0)) continue;
      const Evaluation e = e0_eval(p, gamma);
      best = std::max(best, std::abs(i == 1 ? e.d1 : e.d2));
    }
  return 1.05 * best;
}

}  // namespace

OracleResult ebar_oracle(const MassPair& M, const GammaMatrix& gamma, double delta, int max_parts,
                         double work_budget) {
  validate(M);
  gamma.validate();
  if (!(delta > 0.0) || !std::isfinite(delta)) fail(ErrorKind::invalid_input, "oracle quantum must be positive");
  const auto [A, B] = grid_counts(M, delta);
  if ((M.m1 > 0.0 && A < 1) || (M.m2 > 0.0 && B < 1)) {
    fail(ErrorKind::invalid_input, "oracle quantum larger than a total mass");
  }
  const double q1 = quantum(M.m1, A), q2 = quantum(M.m2, B);

  if (max_parts <= 0) {
    const Thresholds th = thresholds(gamma);
    const double lo = M.m1 > 0.0 && M.m2 > 0.0 ? std::min(M.m1 / th.m_star[0], M.m2 / th.m_star[1]) : 0.0;
    const int spec_cap = 2 + static_cast<int>(std::ceil(lo)) + 4;
    // every cluster holds at most M_i* of species i
    const int needed = static_cast<int>(std::ceil(M.m1 / th.M_star[0]) + std::ceil(M.m2 / th.M_star[1]));
    max_parts = std::max(spec_cap, needed + 4);
  }

  const long W = B + 1;
  const long S = (A + 1) * W;
  const double pairs = 0.25 * static_cast<double>(A + 1) * (A + 2) * (B + 1) * (B + 2);
  const double work = pairs * std::max(1, max_parts - 1) + static_cast<double>(S);
  if (work > work_budget) {
    fail(ErrorKind::budget_exceeded, "oracle needs about " + std::to_string(work) + " updates, budget is " +
                                         std::to_string(work_budget));
  }

  std::vector<double> cost(S, kInf);
  for (long a = 0; a <= A; ++a)
    for (long b = 0; b <= B; ++b)
      if (a + b > 0) cost[a * W + b] = e0({a * q1, b * q2}, gamma);

  // layer k: best energy with at most k clusters; choice records the last cluster added
  std::vector<double> prev = cost;
  prev[0] = 0.0;
  std::vector<std::vector<std::int32_t>> choice;
  choice.emplace_back(S);
  for (long s = 0; s < S; ++s) choice[0][s] = static_cast<std::int32_t>(s);
  std::vector<double> cur(S);
  int layers = 1;
  for (int k = 2; k <= max_parts; ++k) {
    std::vector<std::int32_t> ch(S, -1);
    bool improved = false;
    for (long a = 0; a <= A; ++a) {
      for (long b = 0; b <= B; ++b) {
        const long s = a * W + b;
        double best = prev[s];
        std::int32_t arg = -1;
        for (long x = 0; x <= a; ++x) {
          const double* row_prev = prev.data() + (a - x) * W;
          const double* row_cost = cost.data() + x * W;
          for (long y = (x == 0 ? 1 : 0); y <= b; ++y) {
            const double v = row_prev[b - y] + row_cost[y];
            if (v < best) {
              best = v;
              arg = static_cast<std::int32_t>(x * W + y);
            }
          }
        }
        cur[s] = best;
        ch[s] = arg;
        if (arg >= 0 && best < prev[s] - 1e-15 * std::abs(prev[s])) improved = true;
      }
    }
    choice.push_back(std::move(ch));
    prev.swap(cur);
    ++layers;
    if (!improved) break;
  }

  OracleResult out;
  out.energy = prev[A * W + B];
  out.states = S;
  // walk the layers back from the full state
  long s = A * W + B;
  for (int k = layers - 1; k >= 1 && s != 0; --k) {
    const std::int32_t c = choice[k][s];
    if (c < 0) continue;
    const long x = c / W, y = c % W;
    out.config.clusters.push_back(Cluster::from_mass({x * q1, y * q2}));
    s -= c;
  }
  if (s != 0) out.config.clusters.push_back(Cluster::from_mass({(s / W) * q1, (s % W) * q2}));
  out.config.canonicalize();
  out.config.total = M;
  return out;
}

double quantization_bound(const Configuration& c, const GammaMatrix& gamma, double delta) {
  if (!(delta > 0.0)) fail(ErrorKind::invalid_input, "quantum must be positive");
  const auto counts = grid_counts(c.total, delta);
  const std::array<double, 2> q{quantum(c.total.m1, counts[0]), quantum(c.total.m2, counts[1])};
  double bound = 0.0;
  for (const Cluster& cl : c.clusters) {
    for (int i = 1; i <= 2; ++i) {
      const double m = cl.mass[i];
      if (!(m > 0.0)) continue;
      const double qi = q[i - 1];
      const int j = 3 - i;
      // quadratic part changes by at most q·(Γ_ii (m_i + q) + Γ_ij (m_j + q_j))/2π
      const double quad =
          qi * (gamma.diag(i) * (m + qi) + gamma.g12 * (cl.mass[j] + q[j - 1])) / (2.0 * std::numbers::pi);
      if (m < 2.0 * qi) {
        // perimeter is monotone and changes by at most the perimeter of a disk of area q
        bound += 2.0 * std::sqrt(std::numbers::pi * qi) + quad;
      } else {
        bound += qi * gradient_bound(cl.mass, gamma, i, q);
      }
    }
  }
  return bound;
}

}  // namespace triblock
