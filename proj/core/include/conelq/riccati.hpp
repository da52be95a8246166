#pragma once

#include "conelq/cone.hpp"
#include "conelq/hamiltonian.hpp"
#include "conelq/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conelq {

struct RiccatiOptions {
  double delta_lower = kDefaultDeltaLower;
  SaddleOptions saddle;
  bool warm_start = true;
};

/// Backward solution on the grid nodes 0..n. Lambda and Gamma are carried
/// for uniformity with the lattice solver and are exactly zero here.
struct RiccatiSolution {
  TimeGrid grid{1.0, 1};
  std::vector<double> P1, P2, L1, L2;
  std::vector<std::vector<double>> G1, G2;  // [node][mark]
  std::vector<SaddleResult> saddle1, saddle2;
  std::string method;
  std::optional<Truncation> truncation;
  double guard = 0.0;
  long long saddle_solves = 0;
  AssumptionReport report;

  int n_nodes() const noexcept { return static_cast<int>(P1.size()); }
  Snapshot snapshot(int node) const;
};

/// Deterministic coefficients only. Classic RK4 backward in time with the
/// saddle value evaluated at every stage.
RiccatiSolution solve_ode(const CoefficientSet& coeffs, const TimeGrid& grid,
                          const JumpMeasure& jumps, const Cone& cone1,
                          const Cone& cone2, const RiccatiOptions& opts = {});

/// Same scheme with the min side restricted to |v1| <= n and the max side to
/// |v2| <= n_bar. Needs the decoupled structure (F2, S, R12, D1 D2^T all 0).
RiccatiSolution solve_truncated(const Truncation& trunc,
                                const CoefficientSet& coeffs,
                                const TimeGrid& grid, const JumpMeasure& jumps,
                                const Cone& cone1, const Cone& cone2,
                                const RiccatiOptions& opts = {});

struct LadderComparison {
  int from = 0;
  int to = 0;
  bool along_n = true;  // false: along n_bar
  // Signed differences P(to) - P(from) per node for each k.
  std::vector<double> diff1, diff2;
  // Along n the differences should be <= tol (worst = max); along n_bar they
  // should be >= -tol (worst = min).
  double worst = 0.0;
  bool ok = true;
};

struct LadderReport {
  std::vector<Truncation> levels;
  std::vector<double> P1_at_0, P2_at_0;
  std::vector<LadderComparison> comparisons;
  int finest = -1;
  double tol = 1e-8;
  bool monotone = true;
};

std::pair<RiccatiSolution, LadderReport> monotone_ladder(
    const CoefficientSet& coeffs, const TimeGrid& grid, const JumpMeasure& jumps,
    const Cone& cone1, const Cone& cone2, const std::vector<Truncation>& levels,
    double tol = 1e-8, const RiccatiOptions& opts = {});

struct BoundsEnvelope {
  std::vector<double> lower, upper;
  double delta_lower = 0.0;
  double c_lower1 = 0.0;
  double c_bar = 0.0;
  double delta_bar = 0.0;
  double K = 0.0;
};

BoundsEnvelope bounds_envelope(const AssumptionReport& report, const TimeGrid& grid);

}  // namespace conelq
