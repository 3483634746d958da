// Acceptance checks, one line per criterion.
// usage: acceptance [--cli PATH] [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "triblock/compare.hpp"
#include "triblock/error.hpp"
#include "triblock/geometry.hpp"
#include "triblock/io.hpp"
#include "triblock/partition.hpp"
#include "triblock/phasefield.hpp"
#include "triblock/placement.hpp"
#include "triblock/torus_green.hpp"

using namespace triblock;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

GammaMatrix G(double g11, double g22, double g12) {
  GammaMatrix g;
  g.g11 = g11;
  g.g22 = g22;
  g.g12 = g12;
  return g;
}

std::string cli_path;

void c1(Verdict& v) {
  Timer t;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> L(std::log(1e-4), 0.0), S(std::log(1e-2), std::log(1e2));
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double big = std::exp(S(rng)), ratio = std::exp(L(rng));
    const MassPair m = k % 2 ? MassPair{big * ratio, big} : MassPair{big, big * ratio};
    for (double r : geometry_residuals(solve_geometry(m), m)) worst = std::max(worst, std::abs(r));
  }
  const double s = t.seconds();
  v.require(worst < 1e-12, "residual");
  v.require(s < 5.0, "runtime");
  v.detail << "max residual " << worst << ", " << s << " s";
}

void c2(Verdict& v) {
  const double d1 = std::abs(perimeter({1.0, 0.0}) - 2.0 * std::sqrt(kPi));
  const double d2 = std::abs(perimeter({1.0, 1.0}) - 2.0 * std::sqrt(2.0) * std::sqrt(4.0 * kPi / 3.0 + std::sqrt(3.0) / 2.0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.01, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const MassPair m{U(rng), k % 5 == 0 ? 0.0 : U(rng)};
    const double p = perimeter(m);
    for (double lam : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      worst = std::max(worst, std::abs(perimeter({lam * lam * m.m1, lam * lam * m.m2}) / (lam * p) - 1.0));
    }
  }
  v.require(d1 < 1e-12 && d2 < 1e-12, "closed forms");
  v.require(worst < 1e-12, "scaling");
  v.detail << "single " << d1 << ", equal " << d2 << ", scaling " << worst;
}

void c3(Verdict& v) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(std::log(1e-2), std::log(10.0));
  double worst = 0.0, law = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const MassPair m{std::exp(U(rng)), std::exp(U(rng))};
    const BubbleGeometry g = solve_geometry(m);
    const auto grad = perimeter_gradient(m);
    law = std::max({law, std::abs(grad[0] * g.r1 - 1.0), std::abs(grad[1] * g.r2 - 1.0)});
    const double h1 = 1e-6 * m.m1, h2 = 1e-6 * m.m2;
    const double f1 = (perimeter({m.m1 + h1, m.m2}) - perimeter({m.m1 - h1, m.m2})) / (2 * h1);
    const double f2 = (perimeter({m.m1, m.m2 + h2}) - perimeter({m.m1, m.m2 - h2})) / (2 * h2);
    worst = std::max({worst, std::abs(grad[0] / f1 - 1.0), std::abs(grad[1] / f2 - 1.0)});
  }
  v.require(worst < 1e-6, "finite differences");
  v.require(law < 1e-12, "1/r law");
  v.detail << "max FD rel error " << worst << ", max |r_i dp/dm_i - 1| " << law;
}

void c4(Verdict& v) {
  int cases = 0;
  for (double gam : {0.5, 1.0, 8.0}) {
    for (int i : {1, 2}) {
      for (double probe : {0.1, 1.0, 10.0}) {
        const GammaMatrix g = i == 1 ? G(gam, 1.0, 0.0) : G(1.0, gam, 0.0);
        const double ms = concavity_threshold(gam, i, probe);
        auto at = [&](double mi) { return i == 1 ? MassPair{mi, probe} : MassPair{probe, mi}; };
        bool ok = ms > 0.0;
        for (double f : {0.99, 0.9, 0.5, 0.1}) ok = ok && e0_hessian_diag(at(f * ms), g, i) < 0.0;
        double prev = e0_hessian_diag(at(1e-2 * probe), g, i);
        for (double f : {1e-3, 1e-4}) {
          const double h = e0_hessian_diag(at(f * probe), g, i);
          ok = ok && h < prev;
          prev = h;
        }
        ok = ok && prev < 0.0;
        v.require(ok, "gamma " + std::to_string(gam) + " species " + std::to_string(i) + " probe " + std::to_string(probe));
        ++cases;
      }
    }
  }
  v.detail << cases << " (gamma, species, probe) cases";
}

void c5(Verdict& v) {
  const std::vector<MassPair> Ms = {{0.5, 1.0}, {1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}, {3.0, 2.0}};
  const std::vector<GammaMatrix> Gs = {G(1, 1, 0), G(8, 8, 1), G(30, 30, 5), G(100, 1, 3), G(20, 5, 10)};
  const double delta = 1.0 / 64.0;
  double worst_time = 0.0, worst_excess = -1e300;
  int n = 0;
  for (const MassPair& M : Ms)
    for (const GammaMatrix& g : Gs) {
      Timer t;
      SearchBudget b;
      b.restarts = 8;
      const PartitionResult r = ebar(M, g, b);
      const OracleResult o = ebar_oracle(M, g, delta, 12);
      const double qb = quantization_bound(r.config, g, delta);
      const double s = t.seconds();
      worst_time = std::max(worst_time, s);
      worst_excess = std::max(worst_excess, (r.energy - o.energy) / qb);
      std::ostringstream tag;
      tag << "M=(" << M.m1 << "," << M.m2 << ") G=(" << g.g11 << "," << g.g22 << "," << g.g12 << ")";
      v.require(r.energy <= o.energy * (1.0 + 1e-12), tag.str() + " above oracle");
      v.require(r.energy >= o.energy - qb, tag.str() + " below quantization bound");
      v.require(s < 120.0, tag.str() + " runtime");
      for (const ConditionCheck& c : check_necessary_conditions(r.config, g, thresholds(g))) {
        v.require(c.passed, tag.str() + " " + c.name);
      }
      ++n;
    }
  v.detail << n << " instances, max (ebar - oracle)/bound " << worst_excess << ", slowest " << worst_time << " s";
}

void c6(Verdict& v) {
  SearchBudget b;
  b.restarts = 2;
  // all singles: equal masses far above 4 M_i*, Γ12 huge
  {
    const RegimeReport r = classify_regime({105.0, 105.0}, G(1, 1, 1e6), b);
    v.require(r.all_singles_hypothesis, "singles hypothesis");
    v.require(r.doubles == 0, "zero doubles");
    bool equal = r.singles1 > 0 && r.singles2 > 0;
    for (const Cluster& c : r.config.clusters)
      for (const Cluster& d : r.config.clusters) {
        const int i = c.kind == ClusterKind::single_type1 ? 1 : 2;
        if (c.kind == d.kind) equal = equal && std::abs(c.mass[i] - d.mass[i]) <= 1e-8 * c.mass[i];
      }
    v.require(equal, "equal-size singles");
    v.detail << "singles: " << r.singles1 << "+" << r.singles2 << "; ";
  }
  // one double bubble
  {
    const MassPair M{1.0, 1.5};
    const RegimeReport r = classify_regime(M, G(1, 1, 0.5), b);
    v.require(r.one_double_hypothesis, "one-double hypothesis");
    const bool one = r.config.clusters.size() == 1 && r.doubles == 1 &&
                     std::abs(r.config.clusters[0].mass.m1 - M.m1) < 1e-12 &&
                     std::abs(r.config.clusters[0].mass.m2 - M.m2) < 1e-12;
    v.require(one, "single double with lobes M");
    v.detail << "one double: " << r.config.clusters.size() << " cluster; ";
  }
  // coexistence with Γ12 = 0
  {
    Timer t;
    const RegimeReport r = classify_regime({330.0, 3650.0}, G(1, 1, 0), b);
    v.require(r.coexistence_hypothesis, "coexistence hypothesis");
    v.require(r.doubles >= 1 && r.singles1 + r.singles2 >= 1, "doubles and singles");
    v.detail << "coexistence: D=" << r.doubles << " S1=" << r.singles1 << " S2=" << r.singles2 << " (" << t.seconds()
             << " s)";
  }
}

// ∫G with the logarithm removed under a smooth cutoff, minus the cutoff's radial integral
double zero_mean_residual() {
  auto bump = [](double r) {
    const double a = 0.15, b = 0.45;
    if (r <= a) return 1.0;
    if (r >= b) return 0.0;
    const double t = (r - a) / (b - a);
    const double f = std::exp(-1.0 / (1.0 - t)), g = std::exp(-1.0 / t);
    return f / (f + g);
  };
  const int n = 256;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const TorusPoint p = TorusPoint::canonical(static_cast<double>(j) / n, static_cast<double>(i) / n);
      const double r = p.norm();
      s += r == 0.0 ? regular_part_origin() : green(p) + std::log(r) * bump(r) / (2.0 * kPi);
    }
  s /= static_cast<double>(n) * n;
  const int m = 20000;
  const double dr = 0.45 / m;
  double radial = 0.0;
  for (int k = 1; k <= m; ++k) {
    const double r = k * dr;
    radial += (k == m ? 1.0 : (k % 2 ? 4.0 : 2.0)) * std::log(r) * bump(r) * r;
  }
  return s - radial * dr / 3.0;
}

void c7(Verdict& v) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const TorusPoint p{U(rng), U(rng)};
    worst = std::max(worst, std::abs(green(p) - green_spectral(p)));
  }
  const double zm = std::abs(zero_mean_residual());
  const double r0 = std::abs(regular_part_origin() - regular_part_origin_product());
  v.require(worst <= 1e-10, "Ewald vs spectral");
  v.require(zm <= 1e-8, "zero mean");
  v.require(r0 <= 1e-10, "regular part");
  v.detail << "max |Ewald - spectral| " << worst << ", mean residual " << zm << ", R0 difference " << r0;
}

void c8(Verdict& v) {
  const GammaMatrix g = G(1, 1, 0.5);
  const std::vector<MassPair> pair = {{1.0, 0.5}, {1.0, 0.5}};
  const PlacementResult r = minimize_FK(pair, g);
  const TorusPoint d = r.layout.points[1] - r.layout.points[0];
  // grid oracle over the offset of the second point
  const int n = 256;
  double best = std::numeric_limits<double>::infinity();
  TorusPoint arg{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == 0 && j == 0) continue;
      const TorusPoint q = TorusPoint::canonical(static_cast<double>(j) / n, static_cast<double>(i) / n);
      Layout l;
      l.points = {{0.0, 0.0}, q};
      l.masses = pair;
      const double e = FK(l, g);
      if (e < best) {
        best = e;
        arg = q;
      }
    }
  const double off = (d - arg).norm();
  v.require(off <= 1.0 / n + 1e-12, "K=2 grid oracle");
  v.require(r.energy <= best + 1e-12, "K=2 energy");
  // translation invariance
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.5, 0.5), W(0.2, 2.0);
  double inv = 0.0;
  for (int k = 0; k < 100; ++k) {
    Layout l;
    for (int p = 0; p < 5; ++p) {
      l.points.push_back({U(rng), U(rng)});
      l.masses.push_back({W(rng), p % 2 ? 0.0 : W(rng)});
    }
    const double e = FK(l, g);
    const TorusPoint s{U(rng), U(rng)};
    for (TorusPoint& p : l.points) p = p + s;
    inv = std::max(inv, std::abs(FK(l, g) - e));
  }
  v.require(inv <= 1e-12, "translation invariance");
  // converged gradients
  double gmax = r.gradient_norm;
  for (int K = 3; K <= 6; ++K) {
    std::vector<MassPair> ms;
    for (int p = 0; p < K; ++p) ms.push_back({0.5 + 0.25 * p, p % 3 == 0 ? 0.0 : 1.0});
    gmax = std::max(gmax, minimize_FK(ms, g).gradient_norm);
  }
  v.require(gmax <= 1e-10, "gradient norms");
  v.detail << "K=2 offset (" << d.x << "," << d.y << ") vs grid (" << arg.x << "," << arg.y << "), invariance " << inv
           << ", max gradient " << gmax;
}

void c9(Verdict& v) {
  // relaxation properties at desk size
  double drift = 0.0, rise = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Field f = uniform_noise({0.3, 0.25}, 64, 2.0 / 64, 2e-2, seed);
    RelaxOptions o;
    o.steps = 1000;
    const RelaxResult r = relax(f, G(200, 150, 40), o);
    drift = std::max(drift, r.max_mass_drift);
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      rise = std::max(rise, r.trace[k].energy.total() - r.trace[k - 1].energy.total());
    }
  }
  v.require(drift <= 1e-12, "mass drift");
  v.require(rise <= 1e-10, "energy increase");
  v.detail << "mass drift " << drift << ", max energy rise " << rise;
  struct Scenario {
    const char* name;
    MassPair M;
    GammaMatrix g;
  };
  for (const Scenario& s : {Scenario{"all-double", {20, 20}, G(0.02, 0.02, 0)},
                            Scenario{"all-single", {20, 20}, G(0.02, 0.02, 0.1)},
                            Scenario{"coexistence", {40, 30}, G(0.005, 0.25, 0)}}) {
    Timer t;
    const CompareReport r = compare(s.M, s.g);
    const double sec = t.seconds();
    v.require(std::abs(r.relative_gap) <= 0.15, std::string(s.name) + " energy");
    v.require(r.structure_matches, std::string(s.name) + " structure");
    v.require(sec < 600.0, std::string(s.name) + " runtime");
    v.detail << "; " << s.name << ": gap " << r.relative_gap << ", D/S1/S2 " << r.components.config.count(ClusterKind::double_bubble)
             << "/" << r.components.config.count(ClusterKind::single_type1) << "/"
             << r.components.config.count(ClusterKind::single_type2) << " vs " << r.regime.doubles << "/"
             << r.regime.singles1 << "/" << r.regime.singles2 << ", " << sec << " s";
  }
}

void c10(Verdict& v) {
  if (cli_path.empty()) {
    v.require(false, "no --cli path");
    return;
  }
  const fs::path root = fs::temp_directory_path() / "triblock_acceptance";
  const std::vector<std::pair<std::string, std::string>> pipelines = {
      {"bubble", "--m1 1 --m2 2.5 --gamma 2,3,1"},
      {"partition", "--M1 2 --M2 2 --gamma 30,30,5 --restarts 4 --oracle_delta 0.0625"},
      {"green", "--x 0.3 --y 0.2 --grid 32"},
      {"place", "--masses 1,0,0,1,0.5,0.5,2,0 --gamma 5,5,1 --restarts 4 --qmc_log2 9"},
      {"relax", "--n 64 --steps 100 --M1 0.5 --M2 0.5 --eta 0.1 --trace_every 5"},
      {"compare", "--M1 4 --M2 4 --gamma 0.5,0.5,0 --n 128 --eta 0.08 --steps 200 --qmc_log2 8"},
      {"regime-sweep", "--M1 1,4 --M2 1,2 --g12 0,0.5"},
  };
  int runs = 0;
  for (const auto& [cmd, args] : pipelines) {
    const fs::path dir = root / cmd;
    Json first;
    for (int k = 0; k < 3; ++k) {
      fs::remove_all(dir);
      const std::string line = "\"" + cli_path + "\" " + cmd + " " + args + " --out \"" + dir.string() + "\" > \"" +
                               (root / (cmd + ".log")).string() + "\" 2>&1";
      fs::create_directories(root);
      const int code = std::system(line.c_str());
      if (code != 0) {
        v.require(false, cmd + " exit " + std::to_string(code));
        break;
      }
      const Json m = Json::parse(read_text((dir / "manifest.json").string()));
      bool files = !m["artifacts"].empty();
      for (const Json& a : m["artifacts"]) {
        files = files && a["sha256"] == sha256_file((dir / a["path"].get<std::string>()).string());
      }
      v.require(files, cmd + " manifest hashes");
      Json key{{"artifacts", m["artifacts"]}, {"config_hash", m["config_hash"]},
               {"manifest", sha256_file((dir / "manifest.json").string())}};
      if (k == 0) first = key;
      else v.require(key == first, cmd + " rerun " + std::to_string(k));
      ++runs;
    }
  }
  fs::remove_all(root);
  v.detail << runs << " runs over " << pipelines.size() << " pipelines";
}

const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> kCriteria = {
    {"geometry residuals", c1},  {"closed forms and scaling", c2}, {"gradient law", c3},
    {"concavity", c4},           {"partition optimality", c5},     {"regime instances", c6},
    {"torus Green function", c7}, {"placement", c8},               {"phase field", c9},
    {"determinism", c10},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--cli" && k + 1 < argc) cli_path = argv[++k];
    else which.push_back(std::atoi(a.c_str()));
  }
  if (which.empty())
    for (int k = 1; k <= static_cast<int>(kCriteria.size()); ++k) which.push_back(k);
  int failed = 0;
  for (int k : which) {
    if (k < 1 || k > static_cast<int>(kCriteria.size())) {
      std::cerr << "unknown criterion " << k << "\n";
      return 2;
    }
    const auto& [name, check] = kCriteria[k - 1];
    Verdict v;
    v.detail.precision(4);
    Timer t;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << k << " (" << name << "): " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail.str()
              << "  [" << t.seconds() << " s]" << std::endl;
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
