#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "triblock/geometry.hpp"
#include "triblock/torus_green.hpp"

namespace triblock {

struct Layout {
  std::vector<TorusPoint> points;
  std::vector<MassPair> masses;

  std::size_t size() const { return points.size(); }
  /// K ≥ 1, matching lengths, valid masses, pairwise distinct points.
  void validate() const;
};

/// Σ_{k≠l} Σ_ij (Γ_ij/2) m_i^k m_j^l G(y^k − y^l).
double FK(const Layout& layout, const GammaMatrix& gamma);
/// Gradient of FK with respect to each point.
std::vector<std::array<double, 2>> FK_gradient(const Layout& layout, const GammaMatrix& gamma);

struct DescentStep {
  int restart = 0;
  int iteration = 0;
  double energy = 0.0;
  double gradient_norm = 0.0;
};

struct PlacementOptions {
  int restarts = 8;
  std::uint64_t seed = 1;
  int max_iterations = 5000;
  double gradient_tolerance = 1e-10;
  bool record_trace = false;
};

struct PlacementResult {
  Layout layout;
  double energy = 0.0;
  double gradient_norm = 0.0;
  int best_restart = 0;
  std::vector<DescentStep> trace;
};

/// Multi-start quasi-Newton descent of FK with point 0 pinned at the origin.
PlacementResult minimize_FK(const std::vector<MassPair>& masses, const GammaMatrix& gamma,
                            const PlacementOptions& options = {});

struct QuadratureOptions {
  int log2_points = 14;  ///< Sobol points per replicate
  int replicates = 8;    ///< independent random digital shifts
  std::uint64_t seed = 7;
  int panels = 4;        ///< 16-node Gauss-Legendre panels per boundary piece
};

struct QuadratureResult {
  double value = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

/// (1/2π) ∫_{A_i} ∫_{A_j} log(1/|x − y|) dx dy over the lobes of the optimal cluster of mass m.
/// Zero when species i or j is absent; closed form for single disks.
QuadratureResult self_interaction(const MassPair& m, int i, int j, const QuadratureOptions& options = {});

struct F0Result {
  double value = 0.0;
  double std_error = 0.0;
  double fk = 0.0;
  double self = 0.0;        ///< point-independent part
  double R0 = 0.0;
  bool masses_pass_conditions = false;
};

F0Result F0(const Layout& layout, const GammaMatrix& gamma, const QuadratureOptions& options = {});

/// Boundary pieces of one lobe. Every circle passes through the junctions (0, ±h),
/// so arc points are (r(cos φ − cos α), r sin φ) with the junction at angle α.
struct Arc {
  double r = 0.0;
  double alpha = 0.0;
  double phi0 = 0.0, phi1 = 0.0;
  bool inward = false;  ///< lobe normal points toward the circle center
};
struct LobeShape {
  std::vector<Arc> arcs;
  bool has_chord = false;  ///< straight middle interface x = 0, |y| ≤ h
  double chord_normal = 0.0;
  double h = 0.0;
  std::array<double, 4> box{};  ///< xmin, xmax, ymin, ymax
  double area = 0.0;

  // containment rule: own disk on x ≤ 0 (or x ≥ 0), and the middle disk on the other side
  int rule = 0;  ///< 0 disk, 1 small lobe, 2 large lobe, 3 symmetric left, 4 symmetric right
  double own_r = 0.0, own_cos = 0.0, mid_r = 0.0, mid_cos = 0.0;
  bool contains(double x, double y) const;
};
/// Shape of lobe i (1 or 2) of the optimal cluster of mass m, in a frame with the
/// junction chord on the y-axis.
LobeShape lobe_shape(const MassPair& m, int i);

}  // namespace triblock
