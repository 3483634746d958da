#include "triblock/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "triblock/error.hpp"

namespace triblock {

namespace {

std::vector<Droplet> make_seeds(const PlacementResult& pl, const MassPair& M, const CompareOptions& o) {
  std::vector<Droplet> seeds;
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> U(-o.position_jitter, o.position_jitter);
  MassPair sum;
  for (std::size_t k = 0; k < pl.layout.size(); ++k) {
    const double f = 1.0 + o.mass_perturbation * (k % 2 ? 1.0 : -1.0);
    MassPair m{pl.layout.masses[k].m1 * f, pl.layout.masses[k].m2 * f};
    sum.m1 += m.m1;
    sum.m2 += m.m2;
    const double dx = U(rng), dy = U(rng);
    seeds.push_back({pl.layout.points[k] + TorusPoint{dx, dy}, m});
  }
  for (Droplet& d : seeds) {
    if (sum.m1 > 0.0) d.mass.m1 *= M.m1 / sum.m1;
    if (sum.m2 > 0.0) d.mass.m2 *= M.m2 / sum.m2;
  }
  return seeds;
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) { return (a - b).norm(); }

}  // namespace

CompareReport compare(const MassPair& M, const GammaMatrix& gamma, const CompareOptions& o) {
  if (o.n < 16) fail(ErrorKind::invalid_input, "grid size must be at least 16");
  if (!(o.epsilon_cells > 0.0) || !(o.dt_factor > 0.0) || o.steps < 0) {
    fail(ErrorKind::invalid_input, "epsilon_cells, dt_factor must be positive and steps nonnegative");
  }
  if (!(o.mass_perturbation >= 0.0 && o.mass_perturbation < 1.0)) {
    fail(ErrorKind::invalid_input, "mass_perturbation must lie in [0, 1)");
  }
  CompareReport r;
  r.regime = classify_regime(M, gamma, o.budget);
  std::vector<MassPair> masses;
  for (const Cluster& c : r.regime.config.clusters) masses.push_back(c.mass);
  r.placement = minimize_FK(masses, gamma, o.placement);
  if (o.with_F0) {
    r.f0 = F0(r.placement.layout, gamma, o.quadrature);
    r.prediction = r.regime.energy + r.f0.value / std::abs(std::log(o.eta));
  }

  r.seeds = make_seeds(r.placement, M, o);
  const double eps = o.epsilon_cells / o.n;
  Field init = seed_droplets(r.seeds, o.n, o.eta, eps, SeedShape::disks);
  // painting is exact only up to the supersampling, so match the totals
  const double a1 = init.u1.mean(), a2 = init.u2.mean();
  const double e2 = o.eta * o.eta;
  for (double& v : init.u1.v) v *= a1 > 0.0 ? M.m1 * e2 / a1 : 1.0;
  for (double& v : init.u2.v) v *= a2 > 0.0 ? M.m2 * e2 / a2 : 1.0;

  RelaxOptions ro;
  ro.dt = o.dt_factor * eps / o.n;
  ro.steps = o.steps;
  ro.trace_every = std::max(1, o.trace_every);
  RelaxResult rel = relax(init, diffuse_gamma(gamma, o.eta), ro);
  r.trace = std::move(rel.trace);
  r.max_mass_drift = rel.max_mass_drift;

  ThresholdResult th = threshold(rel.field, 0.5, o.eta);
  r.overlap_fraction = th.overlap_fraction;
  r.components = extract_components(th.config);
  r.sharp = sharp_energy(th.config, gamma);
  r.relative_gap = (r.sharp.total() - r.regime.energy) / r.regime.energy;

  const Configuration& got = r.components.config;
  r.structure_matches = got.count(ClusterKind::double_bubble) == r.regime.doubles &&
                        got.count(ClusterKind::single_type1) == r.regime.singles1 &&
                        got.count(ClusterKind::single_type2) == r.regime.singles2;

  if (got.clusters.size() >= 2) {
    Layout ex;
    for (std::size_t k = 0; k < got.clusters.size(); ++k) {
      ex.points.push_back(r.components.centers[k]);
      ex.masses.push_back(got.clusters[k].mass);
    }
    r.fk_extracted = FK(ex, gamma);
  }
  if (!got.clusters.empty()) {
    // align the heaviest component with the predicted center of closest mass
    std::size_t big = 0;
    for (std::size_t k = 1; k < got.clusters.size(); ++k)
      if (got.clusters[k].mass.total() > got.clusters[big].mass.total()) big = k;
    const Layout& L = r.placement.layout;
    std::size_t match = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < L.size(); ++k) {
      const double d = std::abs(L.masses[k].m1 - got.clusters[big].mass.m1) +
                       std::abs(L.masses[k].m2 - got.clusters[big].mass.m2);
      if (d < best) {
        best = d;
        match = k;
      }
    }
    const TorusPoint shift = L.points[match] - r.components.centers[big];
    for (const TorusPoint& c : r.components.centers) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const TorusPoint& p : L.points) nearest = std::min(nearest, torus_distance(c + shift, p));
      r.center_offset = std::max(r.center_offset, nearest);
    }
  }
  r.final_field = std::move(rel.field);
  return r;
}

}  // namespace triblock
