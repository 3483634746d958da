#include "triblock/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "lbfgs.hpp"
#include "triblock/error.hpp"

namespace triblock {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDropFraction = 1e-12;

double optimal_single_size(double g) { return std::pow(4.0 * kPi * std::sqrt(kPi) / g, 2.0 / 3.0); }

double inflection_point(double g) { return kPi * std::pow(g, -2.0 / 3.0); }

// ---------------------------------------------------------------- items
// A configuration under local refinement: doubles, free singles and one pool
// of equal singles per species.
enum class ItemKind { dbl, single, pool };

struct Item {
  ItemKind kind;
  int species;  // for single and pool
  double a;     // species-1 mass (double) or the item mass
  double b;     // species-2 mass (double only)
};

struct ItemEval {
  double value;
  double g[2];
};

ItemEval eval_item(const Item& it, const GammaMatrix& gamma) {
  ItemEval e{};
  if (it.kind == ItemKind::dbl) {
    const Evaluation ev = e0_eval({it.a, it.b}, gamma);
    e.value = ev.value;
    e.g[0] = ev.d1;
    e.g[1] = ev.d2;
  } else if (it.kind == ItemKind::single) {
    const double gi = gamma.diag(it.species);
    e.value = single_energy(it.a, gi);
    e.g[0] = single_energy_derivative(it.a, gi);
  } else {
    const SinglesSplit s = best_singles(it.a, gamma.diag(it.species));
    e.value = s.energy;
    e.g[0] = s.derivative;
  }
  return e;
}

double pool_second_derivative(double S, double gi) {
  const SinglesSplit s = best_singles(S, gi);
  if (s.odd == 0.0) return single_energy_second_derivative(s.equal, gi) / s.count;
  const int nn = s.count - 1;
  const double fx = single_energy_second_derivative(s.odd, gi);
  const double fy = single_energy_second_derivative(s.equal, gi);
  return fy * fx / (fy + nn * fx);
}

int nvars(const Item& it) { return it.kind == ItemKind::dbl ? 2 : 1; }

int var_species(const Item& it, int v) { return it.kind == ItemKind::dbl ? v + 1 : it.species; }

double& var_ref(Item& it, int v) { return v == 0 ? it.a : it.b; }

double items_energy(const std::vector<Item>& items, const GammaMatrix& gamma) {
  double e = 0.0;
  for (const Item& it : items) e += eval_item(it, gamma).value;
  return e;
}

// Spread of the marginal costs per species relative to their magnitude.
double balance_residual(const std::vector<Item>& items, const GammaMatrix& gamma) {
  double lo[2] = {kInf, kInf}, hi[2] = {-kInf, -kInf};
  for (const Item& it : items) {
    const ItemEval e = eval_item(it, gamma);
    for (int v = 0; v < nvars(it); ++v) {
      const int s = var_species(it, v) - 1;
      lo[s] = std::min(lo[s], e.g[v]);
      hi[s] = std::max(hi[s], e.g[v]);
    }
  }
  double r = 0.0;
  for (int s = 0; s < 2; ++s) {
    if (hi[s] >= lo[s]) r = std::max(r, (hi[s] - lo[s]) / std::max(1.0, std::abs(hi[s])));
  }
  return r;
}

// Vanishing lobes turn doubles into free singles; vanishing singles and pools go away.
void prune(std::vector<Item>& items, const MassPair& M) {
  std::vector<Item> out;
  const double tol1 = kDropFraction * std::max(M.m1, M.m2);
  for (Item it : items) {
    if (it.kind == ItemKind::dbl) {
      const bool za = it.a <= tol1, zb = it.b <= tol1;
      if (za && zb) continue;
      if (za) it = {ItemKind::single, 2, it.b, 0.0};
      else if (zb) it = {ItemKind::single, 1, it.a, 0.0};
    } else if (it.a <= tol1) {
      continue;
    }
    out.push_back(it);
  }
  items.swap(out);
}

// Restore the species totals exactly after pruning or rounding drift.
void rescale(std::vector<Item>& items, const MassPair& M) {
  double sum[2] = {0.0, 0.0};
  for (const Item& it : items)
    for (int v = 0; v < nvars(it); ++v) sum[var_species(it, v) - 1] += it.kind == ItemKind::dbl && v == 1 ? it.b : it.a;
  const double target[2] = {M.m1, M.m2};
  for (Item& it : items)
    for (int v = 0; v < nvars(it); ++v) {
      const int s = var_species(it, v) - 1;
      if (sum[s] > 0.0) var_ref(it, v) *= target[s] / sum[s];
    }
}

// Newton iteration on the first-order conditions: marginal costs equal per species.
void newton_polish(std::vector<Item>& items, const MassPair& M, const GammaMatrix& gamma) {
  for (int iter = 0; iter < 40; ++iter) {
    if (items.empty()) return;
    const double res0 = balance_residual(items, gamma);
    if (res0 <= 1e-13) return;
    const double e_old = items_energy(items, gamma);

    // per-item gradient and inverse Hessian blocks
    const std::size_t n = items.size();
    std::vector<std::array<double, 2>> g(n);
    std::vector<std::array<double, 4>> hinv(n);
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) {
      const Item& it = items[k];
      const ItemEval e = eval_item(it, gamma);
      g[k] = {e.g[0], e.g[1]};
      if (it.kind == ItemKind::dbl) {
        std::array<double, 4> H{};
        for (int v = 0; v < 2; ++v) {
          const double h = 1e-6 * (v == 0 ? it.a : it.b);
          Item p = it, m = it;
          var_ref(p, v) += h;
          var_ref(m, v) -= h;
          const ItemEval ep = eval_item(p, gamma), em = eval_item(m, gamma);
          H[0 + v] = (ep.g[0] - em.g[0]) / (2.0 * h);  // ∂g0/∂v
          H[2 + v] = (ep.g[1] - em.g[1]) / (2.0 * h);  // ∂g1/∂v
        }
        const double off = 0.5 * (H[1] + H[2]);
        const double det = H[0] * H[3] - off * off;
        if (!(std::abs(det) > 1e-300)) {
          ok = false;
          break;
        }
        hinv[k] = {H[3] / det, -off / det, -off / det, H[0] / det};
      } else {
        const double gi = gamma.diag(it.species);
        const double h2 = it.kind == ItemKind::single ? single_energy_second_derivative(it.a, gi)
                                                      : pool_second_derivative(it.a, gi);
        if (!(std::abs(h2) > 1e-300)) {
          ok = false;
          break;
        }
        hinv[k] = {1.0 / h2, 0.0, 0.0, 0.0};
      }
    }
    if (!ok) return;

    // Schur complement for the multipliers: (Σ A H⁻¹ Aᵀ) λ = Σ A H⁻¹ g
    double S[2][2] = {{0, 0}, {0, 0}}, r[2] = {0, 0};
    bool present[2] = {false, false};
    for (std::size_t k = 0; k < n; ++k) {
      const Item& it = items[k];
      if (it.kind == ItemKind::dbl) {
        present[0] = present[1] = true;
        S[0][0] += hinv[k][0];
        S[0][1] += hinv[k][1];
        S[1][0] += hinv[k][2];
        S[1][1] += hinv[k][3];
        r[0] += hinv[k][0] * g[k][0] + hinv[k][1] * g[k][1];
        r[1] += hinv[k][2] * g[k][0] + hinv[k][3] * g[k][1];
      } else {
        const int s = it.species - 1;
        present[s] = true;
        S[s][s] += hinv[k][0];
        r[s] += hinv[k][0] * g[k][0];
      }
    }
    double lam[2] = {0.0, 0.0};
    if (present[0] && present[1]) {
      const double det = S[0][0] * S[1][1] - S[0][1] * S[1][0];
      if (!(std::abs(det) > 1e-300)) return;
      lam[0] = (S[1][1] * r[0] - S[0][1] * r[1]) / det;
      lam[1] = (S[0][0] * r[1] - S[1][0] * r[0]) / det;
    } else {
      for (int s = 0; s < 2; ++s)
        if (present[s]) {
          if (!(std::abs(S[s][s]) > 1e-300)) return;
          lam[s] = r[s] / S[s][s];
        }
    }

    std::vector<std::array<double, 2>> d(n);
    double t = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Item& it = items[k];
      if (it.kind == ItemKind::dbl) {
        const double q0 = lam[0] - g[k][0], q1 = lam[1] - g[k][1];
        d[k] = {hinv[k][0] * q0 + hinv[k][1] * q1, hinv[k][2] * q0 + hinv[k][3] * q1};
      } else {
        d[k] = {hinv[k][0] * (lam[it.species - 1] - g[k][0]), 0.0};
      }
      for (int v = 0; v < nvars(it); ++v) {
        const double x = v == 0 ? it.a : it.b;
        if (d[k][v] < 0.0) t = std::min(t, 0.9 * x / -d[k][v]);
      }
    }
    for (const auto& dk : d)
      if (!std::isfinite(dk[0]) || !std::isfinite(dk[1])) return;
    bool accepted = false;
    for (int ls = 0; ls < 12 && !accepted; ++ls, t *= 0.5) {
      std::vector<Item> trial = items;
      for (std::size_t k = 0; k < n; ++k)
        for (int v = 0; v < nvars(trial[k]); ++v) var_ref(trial[k], v) += t * d[k][v];
      rescale(trial, M);
      const double e_new = items_energy(trial, gamma);
      const double res_new = balance_residual(trial, gamma);
      if (std::isfinite(e_new) && e_new <= e_old + 1e-13 * std::abs(e_old) && (res_new < res0 || e_new < e_old)) {
        items.swap(trial);
        accepted = true;
      }
    }
    if (!accepted) return;
  }
}

Configuration items_to_configuration(const std::vector<Item>& items, const MassPair& M, const GammaMatrix& gamma) {
  Configuration c;
  for (const Item& it : items) {
    if (it.kind == ItemKind::dbl) {
      c.clusters.push_back(Cluster::from_mass({it.a, it.b}));
    } else if (it.kind == ItemKind::single) {
      c.clusters.push_back(Cluster::from_mass(it.species == 1 ? MassPair{it.a, 0.0} : MassPair{0.0, it.a}));
    } else {
      const SinglesSplit s = best_singles(it.a, gamma.diag(it.species));
      auto add = [&](double m) {
        c.clusters.push_back(Cluster::from_mass(it.species == 1 ? MassPair{m, 0.0} : MassPair{0.0, m}));
      };
      if (s.odd > 0.0) add(s.odd);
      for (int k = s.odd > 0.0 ? 1 : 0; k < s.count; ++k) add(s.equal);
    }
  }
  c.total = M;
  c.canonicalize();
  c.total = M;
  return c;
}

// ---------------------------------------------------------------- cells

struct Cell {
  int K;
  bool pool1;
  bool pool2;
};

struct CellProblem {
  MassPair M;
  GammaMatrix gamma;
  Cell cell;
  int n1, n2;  // softmax slots per species

  // softmax weights from z (first n1 entries species 1, then n2 entries species 2)
  void masses(const std::vector<double>& z, std::vector<double>& a, std::vector<double>& b) const {
    auto soft = [](const double* zz, int n, double total, std::vector<double>& out) {
      out.assign(n, 0.0);
      if (n == 0) return;
      double mx = -kInf;
      for (int i = 0; i < n; ++i) mx = std::max(mx, zz[i]);
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        out[i] = std::exp(zz[i] - mx);
        s += out[i];
      }
      for (int i = 0; i < n; ++i) out[i] *= total / s;
    };
    soft(z.data(), n1, M.m1, a);
    soft(z.data() + n1, n2, M.m2, b);
  }

  std::vector<Item> items(const std::vector<double>& a, const std::vector<double>& b) const {
    std::vector<Item> it;
    for (int k = 0; k < cell.K; ++k) it.push_back({ItemKind::dbl, 0, a[k], b[k]});
    if (cell.pool1) it.push_back({ItemKind::pool, 1, a[cell.K], 0.0});
    if (cell.pool2) it.push_back({ItemKind::pool, 2, b[cell.K], 0.0});
    return it;
  }

  double operator()(const std::vector<double>& z, std::vector<double>& grad) const {
    std::vector<double> a, b;
    masses(z, a, b);
    std::vector<double> ga(n1, 0.0), gb(n2, 0.0);
    double f = 0.0;
    const double tiny = kDropFraction * std::max(M.m1, M.m2);
    for (int k = 0; k < cell.K; ++k) {
      const bool za = a[k] <= tiny, zb = b[k] <= tiny;
      if (za && zb) continue;
      if (za) {
        f += single_energy(b[k], gamma.g22);
        gb[k] = single_energy_derivative(b[k], gamma.g22);
      } else if (zb) {
        f += single_energy(a[k], gamma.g11);
        ga[k] = single_energy_derivative(a[k], gamma.g11);
      } else {
        const Evaluation e = e0_eval({a[k], b[k]}, gamma);
        f += e.value;
        ga[k] = e.d1;
        gb[k] = e.d2;
      }
    }
    if (cell.pool1 && a[cell.K] > 0.0) {
      const SinglesSplit s = best_singles(a[cell.K], gamma.g11);
      f += s.energy;
      ga[cell.K] = s.derivative;
    }
    if (cell.pool2 && b[cell.K] > 0.0) {
      const SinglesSplit s = best_singles(b[cell.K], gamma.g22);
      f += s.energy;
      gb[cell.K] = s.derivative;
    }
    // chain rule through the softmax: ∂f/∂z_j = m_j (g_j − Σ_l m_l g_l / M)
    grad.assign(z.size(), 0.0);
    auto chain = [](const std::vector<double>& m, const std::vector<double>& g, double total, double* out) {
      if (m.empty() || total <= 0.0) return;
      double mean = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) mean += m[j] * g[j];
      mean /= total;
      for (std::size_t j = 0; j < m.size(); ++j) out[j] = m[j] * (g[j] - mean);
    };
    chain(a, ga, M.m1, grad.data());
    chain(b, gb, M.m2, grad.data() + n1);
    return f;
  }
};

std::vector<double> log_masses(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> z;
  for (double x : a) z.push_back(std::log(std::max(x, 1e-300)));
  for (double x : b) z.push_back(std::log(std::max(x, 1e-300)));
  return z;
}

struct Candidate {
  double energy = kInf;
  Configuration config;
  std::vector<Item> items;
};

// Strict weak order: lower energy, then fewer clusters, then lexicographic masses.
bool better(const Candidate& x, const Candidate& y) {
  if (!std::isfinite(y.energy)) return std::isfinite(x.energy);
  if (!std::isfinite(x.energy)) return false;
  const double tol = 1e-12 * std::max(1.0, std::abs(y.energy));
  if (x.energy < y.energy - tol) return true;
  if (x.energy > y.energy + tol) return false;
  if (x.config.clusters.size() != y.config.clusters.size()) return x.config.clusters.size() < y.config.clusters.size();
  for (std::size_t k = 0; k < x.config.clusters.size(); ++k) {
    const MassPair& p = x.config.clusters[k].mass;
    const MassPair& q = y.config.clusters[k].mass;
    if (p.m1 != q.m1) return p.m1 < q.m1;
    if (p.m2 != q.m2) return p.m2 < q.m2;
  }
  return false;
}

Candidate finish(std::vector<Item> items, const MassPair& M, const GammaMatrix& gamma) {
  prune(items, M);
  rescale(items, M);
  newton_polish(items, M, gamma);
  prune(items, M);
  rescale(items, M);
  Candidate c;
  c.items = items;
  c.config = items_to_configuration(items, M, gamma);
  c.energy = c.config.energy(gamma);
  return c;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Candidate solve_cell(const MassPair& M, const GammaMatrix& gamma, const Cell& cell, const SearchBudget& budget,
                     const Candidate* warm) {
  CellProblem prob{M, gamma, cell, cell.K + (cell.pool1 ? 1 : 0), cell.K + (cell.pool2 ? 1 : 0)};
  const int n = prob.n1 + prob.n2;
  std::vector<std::vector<double>> seeds;
  seeds.push_back(std::vector<double>(n, 0.0));
  for (double frac : {0.9, 0.5, 0.1}) {
    if (!cell.pool1 && !cell.pool2) break;
    std::vector<double> a(prob.n1), b(prob.n2);
    for (int k = 0; k < cell.K; ++k) {
      a[k] = (cell.pool1 ? frac : 1.0) * M.m1 / cell.K;
      b[k] = (cell.pool2 ? frac : 1.0) * M.m2 / cell.K;
    }
    if (cell.pool1) a[cell.K] = (1.0 - frac) * M.m1;
    if (cell.pool2) b[cell.K] = (1.0 - frac) * M.m2;
    seeds.push_back(log_masses(a, b));
  }
  if (warm != nullptr && cell.K >= 1) {
    // previous cell's doubles plus one average-sized double split off the rest
    std::vector<double> a, b;
    double pa = 0.0, pb = 0.0, sa = 0.0, sb = 0.0;
    int kd = 0;
    for (const Item& it : warm->items) {
      if (it.kind == ItemKind::dbl) {
        a.push_back(it.a);
        b.push_back(it.b);
        sa += it.a;
        sb += it.b;
        ++kd;
      } else if (it.species == 1) {
        pa += it.a;
      } else {
        pb += it.a;
      }
    }
    if (kd < cell.K) {
      const double na = kd > 0 ? sa / kd : 0.5 * M.m1, nb = kd > 0 ? sb / kd : 0.5 * M.m2;
      while (static_cast<int>(a.size()) < cell.K) {
        a.push_back(na);
        b.push_back(nb);
      }
      a.resize(cell.K);
      b.resize(cell.K);
      if (cell.pool1) a.push_back(std::max(pa, 1e-3 * M.m1));
      if (cell.pool2) b.push_back(std::max(pb, 1e-3 * M.m2));
      seeds.push_back(log_masses(a, b));
    }
  }
  std::mt19937_64 rng(mix(budget.seed ^ mix(static_cast<std::uint64_t>(cell.K) * 4 + (cell.pool1 ? 2 : 0) +
                                             (cell.pool2 ? 1 : 0))));
  std::exponential_distribution<double> expo(1.0);
  for (int r = 0; r < budget.restarts && n > 0; ++r) {
    std::vector<double> z(n);
    for (double& t : z) t = std::log(expo(rng) + 1e-300);
    seeds.push_back(z);
  }

  detail::LbfgsOptions opt;
  opt.max_iterations = budget.max_iterations;
  opt.gradient_tolerance = 1e-11 * std::max(1.0, M.m1 + M.m2);
  Candidate best;
  for (auto& z : seeds) {
    if (n > 0) detail::lbfgs(prob, z, opt);
    std::vector<double> a, b;
    prob.masses(z, a, b);
    Candidate c = finish(prob.items(a, b), M, gamma);
    if (better(c, best)) best = std::move(c);
  }
  return best;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- public

const char* to_string(ClusterKind kind) {
  switch (kind) {
    case ClusterKind::single_type1: return "single_type1";
    case ClusterKind::single_type2: return "single_type2";
    case ClusterKind::double_bubble: return "double";
  }
  return "unknown";
}

ClusterKind cluster_kind_from_string(const std::string& s) {
  if (s == "single_type1") return ClusterKind::single_type1;
  if (s == "single_type2") return ClusterKind::single_type2;
  if (s == "double") return ClusterKind::double_bubble;
  fail(ErrorKind::invalid_input, "unknown cluster kind '" + s + "'");
}

Cluster Cluster::from_mass(const MassPair& m) {
  validate(m);
  Cluster c;
  c.mass = m;
  c.kind = m.m1 > 0.0 && m.m2 > 0.0 ? ClusterKind::double_bubble
           : m.m1 > 0.0             ? ClusterKind::single_type1
                                    : ClusterKind::single_type2;
  return c;
}

double Configuration::energy(const GammaMatrix& gamma) const {
  double e = 0.0;
  for (const Cluster& c : clusters) e += e0(c.mass, gamma);
  return e;
}

int Configuration::count(ClusterKind kind) const {
  return static_cast<int>(std::count_if(clusters.begin(), clusters.end(), [&](const Cluster& c) { return c.kind == kind; }));
}

void Configuration::canonicalize() {
  auto rank = [](ClusterKind k) { return k == ClusterKind::double_bubble ? 0 : k == ClusterKind::single_type1 ? 1 : 2; };
  std::sort(clusters.begin(), clusters.end(), [&](const Cluster& x, const Cluster& y) {
    if (rank(x.kind) != rank(y.kind)) return rank(x.kind) < rank(y.kind);
    if (x.mass.m1 != y.mass.m1) return x.mass.m1 > y.mass.m1;
    return x.mass.m2 > y.mass.m2;
  });
  total = {0.0, 0.0};
  for (const Cluster& c : clusters) {
    total.m1 += c.mass.m1;
    total.m2 += c.mass.m2;
  }
}

void Configuration::validate(double tol) const {
  double s1 = 0.0, s2 = 0.0;
  for (const Cluster& c : clusters) {
    triblock::validate(c.mass);
    const ClusterKind k = Cluster::from_mass(c.mass).kind;
    if (k != c.kind) fail(ErrorKind::invalid_input, std::string("cluster kind ") + to_string(c.kind) + " does not match its masses");
    s1 += c.mass.m1;
    s2 += c.mass.m2;
  }
  const double scale = std::max(1e-300, total.m1 + total.m2);
  if (std::abs(s1 - total.m1) > tol * scale || std::abs(s2 - total.m2) > tol * scale) {
    fail(ErrorKind::invalid_input, "cluster masses do not sum to the configuration total");
  }
}

SinglesSplit best_singles(double S, double gii) {
  SinglesSplit best;
  if (!(S > 0.0)) return best;
  const double xs = optimal_single_size(gii);
  const double c = inflection_point(gii);
  best.energy = kInf;
  const long n0 = static_cast<long>(std::floor(S / xs));
  auto consider_equal = [&](long n) {
    if (n < 1) return;
    const double s = S / static_cast<double>(n);
    const double e = static_cast<double>(n) * single_energy(s, gii);
    if (e < best.energy) {
      best = {e, single_energy_derivative(s, gii), static_cast<int>(n), 0.0, s};
    }
  };
  for (long n : {1L, n0 - 1, n0, n0 + 1, n0 + 2}) consider_equal(n);
  // one bubble in the concave range next to nn equal ones
  for (long nn : {n0 - 1, n0, n0 + 1}) {
    if (nn < 1) continue;
    const double hi = std::min(c, S);
    auto h = [&](double x) { return single_energy(x, gii) + nn * single_energy((S - x) / nn, gii); };
    auto [x, e] = boost::math::tools::brent_find_minima(h, 1e-6 * hi, hi * (1.0 - 1e-9), 40);
    if (e < best.energy - 1e-14 * std::abs(best.energy)) {
      const double y = (S - x) / nn;
      best = {e, single_energy_derivative(y, gii), static_cast<int>(nn + 1), x, y};
    }
  }
  return best;
}

Thresholds thresholds(const GammaMatrix& gamma, std::optional<double> probe) {
  gamma.validate();
  Thresholds th;
  for (int i = 1; i <= 2; ++i) {
    const double g = gamma.diag(i);
    const int s = i - 1;
    th.M_star[s] = 8.0 * kPi / std::pow(g, 2.0 / 3.0);
    th.m_s_bar[s] = 4.0 * kPi * kPi * kPi / std::pow(g * th.M_star[s], 2.0);
    th.m_star[s] = probe ? concavity_threshold(g, i, *probe) : concavity_threshold_scan(g, i).infimum;
    th.inflection[s] = inflection_point(g);
    const double denom = g * th.M_star[s] / (2.0 * kPi) + std::sqrt(kPi / th.m_s_bar[s]);
    th.m_d_bar[s] = kPi / (3.0 * denom * denom);
  }
  const double num = 4.0 * kPi * std::sqrt(kPi) * (std::sqrt(th.M_star[0]) + std::sqrt(th.M_star[1]));
  th.gamma12_star = num / (th.m_star[0] * th.m_star[1]);
  th.gamma12_star_singles = num / (th.m_d_bar[0] * th.m_d_bar[1]);
  return th;
}

PartitionResult ebar(const MassPair& M, const GammaMatrix& gamma, const SearchBudget& budget) {
  validate(M);
  gamma.validate();
  PartitionResult out;
  std::vector<Cell> cells;
  int kmax = 0;
  if (M.m1 > 0.0 && M.m2 > 0.0) {
    const Thresholds th = thresholds(gamma);
    const double bound = 2.0 + std::min(M.m1 / th.m_star[0], M.m2 / th.m_star[1]);
    kmax = static_cast<int>(std::floor(bound));
    if (budget.max_doubles >= 0) kmax = std::min(kmax, budget.max_doubles);
  }
  Candidate best;
  std::array<Candidate, 4> previous;
  std::array<bool, 4> have_previous{};
  for (int K = 0; K <= kmax; ++K) {
    for (int p = 0; p < 4; ++p) {
      const bool p1 = (p & 2) != 0, p2 = (p & 1) != 0;
      if (p1 && !(M.m1 > 0.0)) continue;
      if (p2 && !(M.m2 > 0.0)) continue;
      if (K == 0 && (p1 != (M.m1 > 0.0) || p2 != (M.m2 > 0.0))) continue;
      const Cell cell{K, p1, p2};
      // the all-singles cell seeds every pool variant of K = 1
      const Candidate* warm = have_previous[p] ? &previous[p] : (have_previous[3] ? &previous[3] : nullptr);
      Candidate c = solve_cell(M, gamma, cell, budget, warm);
      ++out.cells_searched;
      previous[p] = c;
      have_previous[p] = true;
      if (better(c, best)) best = std::move(c);
    }
  }
  for (const Configuration& user : budget.seeds) {
    user.validate(1e-9);
    if (std::abs(user.total.m1 - M.m1) > 1e-9 * M.total() || std::abs(user.total.m2 - M.m2) > 1e-9 * M.total()) {
      fail(ErrorKind::invalid_input, "seed configuration has a different total mass");
    }
    std::vector<Item> items;
    for (const Cluster& c : user.clusters) {
      if (c.kind == ClusterKind::double_bubble) items.push_back({ItemKind::dbl, 0, c.mass.m1, c.mass.m2});
      else if (c.kind == ClusterKind::single_type1) items.push_back({ItemKind::single, 1, c.mass.m1, 0.0});
      else items.push_back({ItemKind::single, 2, c.mass.m2, 0.0});
    }
    Candidate raw;
    raw.items = items;
    raw.config = items_to_configuration(items, M, gamma);
    raw.energy = raw.config.energy(gamma);
    if (better(raw, best)) best = std::move(raw);
    Candidate polished = finish(items, M, gamma);
    if (better(polished, best)) best = std::move(polished);
  }
  out.energy = best.energy;
  out.config = best.config;
  out.max_doubles_searched = kmax;
  return out;
}

double E0(const std::vector<MassPair>& measure, const GammaMatrix& gamma, const SearchBudget& budget) {
  if (measure.empty()) return kInf;
  double e = 0.0;
  try {
    for (const MassPair& m : measure) e += ebar(m, gamma, budget).energy;
  } catch (const Error&) {
    return kInf;
  }
  return e;
}

std::vector<ConditionCheck> check_necessary_conditions(const Configuration& c, const GammaMatrix& gamma,
                                                       const Thresholds& th, double balance_tol) {
  std::vector<ConditionCheck> out;
  const double cap_tol = 1e-9;

  {
    ConditionCheck ck{"mass_caps", true, ""};
    for (const Cluster& cl : c.clusters) {
      for (int i = 1; i <= 2; ++i) {
        if (cl.mass[i] > th.M_star[i - 1] * (1.0 + cap_tol)) {
          ck.passed = false;
          ck.detail = "species " + std::to_string(i) + " mass " + fmt(cl.mass[i]) + " exceeds " + fmt(th.M_star[i - 1]);
        }
      }
    }
    out.push_back(ck);
  }
  {
    ConditionCheck ck{"small_singles", true, ""};
    for (int i = 1; i <= 2; ++i) {
      const ClusterKind kind = i == 1 ? ClusterKind::single_type1 : ClusterKind::single_type2;
      int small = 0;
      for (const Cluster& cl : c.clusters)
        if (cl.kind == kind && cl.mass[i] < th.m_s_bar[i - 1]) ++small;
      if (small > 1) {
        ck.passed = false;
        ck.detail = std::to_string(small) + " type-" + std::to_string(i) + " singles below " + fmt(th.m_s_bar[i - 1]);
      }
    }
    out.push_back(ck);
  }
  {
    ConditionCheck ck{"derivative_balance", true, ""};
    for (int i = 1; i <= 2; ++i) {
      double lo = kInf, hi = -kInf;
      for (const Cluster& cl : c.clusters) {
        if (!(cl.mass[i] > 0.0)) continue;
        const Evaluation e = e0_eval(cl.mass, gamma);
        const double d = i == 1 ? e.d1 : e.d2;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      if (hi >= lo) {
        const double spread = (hi - lo) / std::max(1.0, std::abs(hi));
        if (spread > balance_tol) {
          ck.passed = false;
          ck.detail = "species " + std::to_string(i) + " marginal costs spread " + fmt(spread);
        }
      }
    }
    out.push_back(ck);
  }
  {
    ConditionCheck ck{"small_lobes", true, ""};
    for (int i = 1; i <= 2; ++i) {
      int small = 0;
      for (const Cluster& cl : c.clusters)
        if (cl.kind == ClusterKind::double_bubble && cl.mass[i] < th.m_star[i - 1]) ++small;
      if (small > 1) {
        ck.passed = false;
        ck.detail = std::to_string(small) + " doubles with species-" + std::to_string(i) + " lobe below " + fmt(th.m_star[i - 1]);
      }
    }
    out.push_back(ck);
  }
  {
    ConditionCheck ck{"single_sizes", true, ""};
    for (int i = 1; i <= 2; ++i) {
      const ClusterKind kind = i == 1 ? ClusterKind::single_type1 : ClusterKind::single_type2;
      int below = 0;
      double lo = kInf, hi = -kInf;
      for (const Cluster& cl : c.clusters) {
        if (cl.kind != kind) continue;
        const double m = cl.mass[i];
        if (m <= th.inflection[i - 1]) {
          ++below;
        } else {
          lo = std::min(lo, m);
          hi = std::max(hi, m);
        }
      }
      if (below > 1) {
        ck.passed = false;
        ck.detail = std::to_string(below) + " type-" + std::to_string(i) + " singles in the concave range";
      }
      if (hi >= lo && (hi - lo) > 1e-6 * hi) {
        ck.passed = false;
        ck.detail = "type-" + std::to_string(i) + " singles of unequal size " + fmt(lo) + " vs " + fmt(hi);
      }
    }
    out.push_back(ck);
  }
  {
    // exchanging species-i mass between two clusters must not be a descent direction
    ConditionCheck ck{"pairwise_second_order", true, ""};
    for (int i = 1; i <= 2; ++i) {
      std::vector<double> h;
      for (const Cluster& cl : c.clusters) {
        if (!(cl.mass[i] > 0.0)) continue;
        if (cl.kind == ClusterKind::double_bubble) h.push_back(e0_hessian_diag(cl.mass, gamma, i));
        else h.push_back(single_energy_second_derivative(cl.mass[i], gamma.diag(i)));
      }
      if (h.size() < 2) continue;
      std::sort(h.begin(), h.end());
      const double scale = std::max({1.0, std::abs(h[0]), std::abs(h[1])});
      if (h[0] + h[1] < -1e-6 * scale) {
        ck.passed = false;
        ck.detail = "species " + std::to_string(i) + " curvatures " + fmt(h[0]) + " + " + fmt(h[1]) + " < 0";
      }
    }
    out.push_back(ck);
  }
  return out;
}

RegimeReport classify_regime(const MassPair& M, const GammaMatrix& gamma, const SearchBudget& budget) {
  validate(M);
  gamma.validate();
  RegimeReport r;
  r.th = thresholds(gamma);
  const auto& th = r.th;
  r.M_bar[0] = (1.0 + th.M_star[1] / th.m_star[1]) * th.M_star[0] + th.M_star[0];
  r.M_bar[1] = (1.0 + th.M_star[0] / th.m_star[0]) * th.M_star[1] + th.M_star[1];
  const bool no_cross = gamma.g12 == 0.0;
  r.coexistence_hypothesis = no_cross && M.m1 > r.M_bar[0] && M.m2 > r.M_bar[1];
  r.coexistence_case_condition =
      no_cross && M.m1 > 0.0 && M.m2 > 0.0 &&
      (M.m2 > (1.0 + M.m1 / th.m_star[0]) * th.M_star[1] || M.m1 > (1.0 + M.m2 / th.m_star[1]) * th.M_star[0]);
  r.all_singles_hypothesis = M.m1 > 4.0 * th.M_star[0] && M.m2 > 4.0 * th.M_star[1] &&
                             gamma.g12 > std::max(th.gamma12_star, th.gamma12_star_singles);
  bool small = M.m1 > 0.0 && M.m2 > 0.0;
  for (int i = 1; i <= 2 && small; ++i) small = M[i] < std::min(th.m_star[i - 1], th.inflection[i - 1]);
  if (small) {
    const double lhs = gamma.g12 / (2.0 * kPi) * M.m1 * M.m2 + perimeter(M);
    r.one_double_hypothesis = gamma.g12 > 0.0 && lhs < 2.0 * std::sqrt(kPi) * (std::sqrt(M.m1) + std::sqrt(M.m2));
  }

  const PartitionResult res = ebar(M, gamma, budget);
  r.energy = res.energy;
  r.config = res.config;
  r.doubles = res.config.count(ClusterKind::double_bubble);
  r.singles1 = res.config.count(ClusterKind::single_type1);
  r.singles2 = res.config.count(ClusterKind::single_type2);

  std::vector<std::string> g;
  if (r.one_double_hypothesis) {
    g.push_back("one double bubble");
    r.consistent = r.consistent && r.doubles == 1 && r.singles1 == 0 && r.singles2 == 0;
  }
  if (r.all_singles_hypothesis) {
    g.push_back("no double bubbles, equal singles");
    r.consistent = r.consistent && r.doubles == 0;
  }
  if (r.coexistence_case_condition) {
    g.push_back("at least one double and one single");
    r.consistent = r.consistent && r.doubles >= 1 && r.singles1 + r.singles2 >= 1;
  } else if (r.coexistence_hypothesis) {
    g.push_back("at least one double and one single (stated bounds only)");
  }
  if (g.empty()) {
    r.guarantee = "no guarantee";
  } else {
    for (std::size_t k = 0; k < g.size(); ++k) r.guarantee += (k ? "; " : "") + g[k];
  }
  return r;
}

}  // namespace triblock
