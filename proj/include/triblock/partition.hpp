#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "triblock/geometry.hpp"

namespace triblock {

enum class ClusterKind { single_type1, single_type2, double_bubble };

const char* to_string(ClusterKind kind);
ClusterKind cluster_kind_from_string(const std::string& s);

struct Cluster {
  ClusterKind kind = ClusterKind::double_bubble;
  MassPair mass;

  /// Kind implied by which masses are positive.
  static Cluster from_mass(const MassPair& m);
};

struct Configuration {
  std::vector<Cluster> clusters;
  MassPair total;

  double energy(const GammaMatrix& gamma) const;
  int count(ClusterKind kind) const;
  /// Sort clusters (doubles, then type-1 singles, then type-2 singles; larger masses first)
  /// and recompute the total.
  void canonicalize();
  /// Throws unless cluster masses match kinds and sum to total within tol (relative).
  void validate(double tol = 1e-12) const;
};

struct Thresholds {
  std::array<double, 2> M_star{};       ///< maximal lobe or single mass
  std::array<double, 2> m_s_bar{};      ///< at most one smaller single per species
  std::array<double, 2> m_star{};       ///< concavity threshold (per probe, or infimum)
  std::array<double, 2> inflection{};   ///< π Γ_ii^(−2/3), concave/convex split of F_i
  std::array<double, 2> m_d_bar{};      ///< lower bound on double-bubble lobes under the all-singles argument
  double gamma12_star = 0.0;            ///< at most two doubles above this Γ12
  double gamma12_star_singles = 0.0;    ///< no doubles above this Γ12 when M_i > 4 M_i*
};

/// Closed-form thresholds. Without a probe, m_star is the infimum of the
/// concavity threshold over a probe grid.
Thresholds thresholds(const GammaMatrix& gamma, std::optional<double> probe = std::nullopt);

struct SearchBudget {
  int restarts = 16;
  /// Upper bound on double bubbles searched; negative selects the finiteness bound.
  int max_doubles = -1;
  int max_iterations = 4000;
  std::uint64_t seed = 20240607;
  /// Extra starting configurations; each is also kept as a candidate as given.
  std::vector<Configuration> seeds;
};

struct PartitionResult {
  double energy = 0.0;
  Configuration config;
  int cells_searched = 0;
  int max_doubles_searched = 0;
};

PartitionResult ebar(const MassPair& M, const GammaMatrix& gamma, const SearchBudget& budget = {});

/// Best split of mass S into single bubbles of one species: n equal bubbles, or
/// one bubble in the concave range plus n−1 equal ones.
struct SinglesSplit {
  double energy = 0.0;
  double derivative = 0.0;
  int count = 0;
  double odd = 0.0;   ///< mass of the distinguished bubble, 0 if all equal
  double equal = 0.0; ///< mass of each of the remaining bubbles
};
SinglesSplit best_singles(double S, double gamma_ii);

struct OracleResult {
  double energy = 0.0;
  Configuration config;
  long long states = 0;
};

/// Exhaustive dynamic program over cluster masses quantized to multiples of delta
/// with at most max_parts clusters. max_parts ≤ 0 picks the default cap.
OracleResult ebar_oracle(const MassPair& M, const GammaMatrix& gamma, double delta, int max_parts = 0,
                         double work_budget = 4e10);

/// Upper bound on the energy increase caused by moving every cluster mass of c
/// onto the delta grid while keeping the totals.
double quantization_bound(const Configuration& c, const GammaMatrix& gamma, double delta);

struct ConditionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Structural properties every minimizer must have.
std::vector<ConditionCheck> check_necessary_conditions(const Configuration& c, const GammaMatrix& gamma,
                                                       const Thresholds& th, double balance_tol = 1e-6);

struct RegimeReport {
  Thresholds th;
  // coexistence with Γ12 = 0 and K1 = K2 = 1
  std::array<double, 2> M_bar{};
  bool coexistence_hypothesis = false;        ///< M_i > M̄_i and Γ12 = 0
  bool coexistence_case_condition = false;    ///< Γ12 = 0 and one species exceeds (1 + M_j/m_j*) M_i*
  bool all_singles_hypothesis = false;
  bool one_double_hypothesis = false;
  std::string guarantee;
  int doubles = 0;
  int singles1 = 0;
  int singles2 = 0;
  bool consistent = true;
  double energy = 0.0;
  Configuration config;
};

RegimeReport classify_regime(const MassPair& M, const GammaMatrix& gamma, const SearchBudget& budget = {});

/// Σ_k ebar(m^k); +inf for an empty or invalid list.
double E0(const std::vector<MassPair>& measure, const GammaMatrix& gamma, const SearchBudget& budget = {});

}  // namespace triblock
