#pragma once

#include <cstdint>
#include <vector>

#include "triblock/partition.hpp"
#include "triblock/phasefield.hpp"
#include "triblock/placement.hpp"

namespace triblock {

struct CompareOptions {
  int n = 512;
  double eta = 0.04;
  double epsilon_cells = 0.5;  ///< ε = epsilon_cells / N
  double dt_factor = 32.0;     ///< dt = dt_factor · ε / N
  int steps = 8000;
  int trace_every = 100;
  double mass_perturbation = 0.15;  ///< alternating relative change of seeded cluster masses
  double position_jitter = 0.03;    ///< max offset of each seed from its optimal center
  std::uint64_t seed = 1;
  SearchBudget budget = [] {
    SearchBudget b;
    b.restarts = 2;
    return b;
  }();
  PlacementOptions placement{};
  bool with_F0 = true;
  QuadratureOptions quadrature{.log2_points = 12, .replicates = 4};
};

struct CompareReport {
  RegimeReport regime;
  PlacementResult placement;
  F0Result f0;
  double prediction = 0.0;  ///< ebar + F0/|log η|, when F0 was computed
  std::vector<Droplet> seeds;
  std::vector<TraceRow> trace;
  double max_mass_drift = 0.0;
  Components components;
  SharpEnergy sharp;
  double overlap_fraction = 0.0;
  double relative_gap = 0.0;  ///< (sharp − ebar) / ebar
  bool structure_matches = false;
  double fk_extracted = 0.0;  ///< FK at the extracted centers and masses
  double center_offset = 0.0; ///< largest distance of a component to its predicted center after alignment
  Field final_field;
};

/// Partition, placement, seeded relaxation, thresholding and sharp evaluation for one (M, Γ).
CompareReport compare(const MassPair& M, const GammaMatrix& gamma, const CompareOptions& options = {});

}  // namespace triblock
