#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "triblock/geometry.hpp"
#include "triblock/grid.hpp"
#include "triblock/partition.hpp"
#include "triblock/placement.hpp"

namespace triblock {

enum class WellKind {
  standard,  ///< u²(1 − u)²
  printed,   ///< u²(1 − u²); not coercive below 0, exploration only
};

/// Double-well potential, continued as its second-order Taylor polynomial outside [−0.1, 1.1].
double well(double u, WellKind kind = WellKind::standard);
double well_derivative(double u, WellKind kind = WellKind::standard);
/// Interface tension 2∫₀¹ √W of the standard well.
constexpr double kSurfaceTension = 1.0 / 3.0;

struct Field {
  Grid u1, u2;
  double epsilon = 0.0;
  WellKind well = WellKind::standard;

  int n() const { return u1.n; }
  void validate() const;
};

/// Nonlocal coefficients of the diffuse model that reproduce the sharp problem with Γ at scale η.
GammaMatrix diffuse_gamma(const GammaMatrix& gamma, double eta);

struct EnergyParts {
  double gradient = 0.0;
  double well = 0.0;
  double nonlocal = 0.0;
  double total() const { return gradient + well + nonlocal; }
};

EnergyParts diffuse_energy(const Field& f, const GammaMatrix& gamma_scaled);

struct RelaxOptions {
  double dt = 0.0;  ///< 0 selects ε/N
  int steps = 1000;
  int trace_every = 1;
  double stabilization = 0.0;  ///< 0 selects 2/ε
};

struct TraceRow {
  int step = 0;
  EnergyParts energy;
  double mass1 = 0.0, mass2 = 0.0;
};

struct RelaxResult {
  Field field;
  std::vector<TraceRow> trace;
  double max_mass_drift = 0.0;  ///< largest per-step change of a species mean
  double max_sum = 0.0;         ///< max of u1 + u2 at the end
};

/// Semi-implicit Fourier spectral L² gradient flow with the species means held fixed.
RelaxResult relax(const Field& init, const GammaMatrix& gamma_scaled, const RelaxOptions& options = {});

struct SharpConfig {
  int n = 0;
  double eta = 0.0;
  std::vector<std::uint8_t> v1, v2;  ///< indicator grids, row-major as Grid

  std::uint8_t label(int i, int j) const;
};

/// (1/η)·interface length + Σ Γ_ij/(2|log η|) η⁻⁴ ⟨G χ_i, χ_j⟩ on the grid.
struct SharpEnergy {
  double perimeter = 0.0;
  double nonlocal = 0.0;
  double total() const { return perimeter + nonlocal; }
};
SharpEnergy sharp_energy(const SharpConfig& c, const GammaMatrix& gamma);
/// Length of the interfaces: crossing edges × h × π/4.
double grid_interface_length(const SharpConfig& c);

struct ThresholdResult {
  SharpConfig config;
  double overlap_fraction = 0.0;
};
/// Cells with u1 + u2 > level, labelled by the larger species.
ThresholdResult threshold(const Field& f, double level, double eta);

struct Components {
  Configuration config;  ///< clusters in scan order
  std::vector<TorusPoint> centers;
};
/// Periodic 4-connected components of the union support.
Components extract_components(const SharpConfig& c);

// initial data
struct Droplet {
  TorusPoint center;
  MassPair mass;  ///< scaled masses; the droplet covers η²·m
};
enum class SeedShape {
  optimal,  ///< exact double-bubble or disk shape
  disks,    ///< two tangent disks for a double, one disk for a single
};
Field seed_droplets(const std::vector<Droplet>& droplets, int n, double eta, double epsilon,
                    SeedShape shape = SeedShape::disks);
Field uniform_noise(const MassPair& means, int n, double epsilon, double amplitude, std::uint64_t seed);
Field from_sharp(const SharpConfig& c, double epsilon);

/// 16-bit binary PGM of a field mapped linearly from [lo, hi]; a non-empty comment goes into the header.
void write_pgm(const std::string& path, const Grid& g, double lo = 0.0, double hi = 1.0,
               const std::string& comment = {});

}  // namespace triblock
