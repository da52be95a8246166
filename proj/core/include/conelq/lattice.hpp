#pragma once

#include "conelq/cone.hpp"
#include "conelq/hamiltonian.hpp"
#include "conelq/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace conelq {

inline constexpr int kDefaultJumpCap = 3;

/// Recombining tree for (W, N): each step branches into {up, down} x
/// {no jump, mark 1, ..., mark J}. Nodes recombine on the Brownian level and
/// on the per-mark jump counts, which saturate at jump_cap.
class Lattice {
 public:
  Lattice(TimeGrid grid, JumpMeasure jumps, int jump_cap = kDefaultJumpCap);

  const TimeGrid& grid() const noexcept { return grid_; }
  const JumpMeasure& jumps() const noexcept { return jumps_; }
  int jump_cap() const noexcept { return cap_; }
  int n_steps() const noexcept { return grid_.n_steps(); }
  int marks() const noexcept { return jumps_.size(); }

  int layer_size(int step) const;
  NodeKey key(int step, int idx) const;
  int index(const NodeKey& key) const;
  /// Child index in layer step+1; mark = -1 is the no-jump branch.
  int child(int step, int idx, bool up, int mark) const;
  std::string node_id(int step, int idx) const;

  double p_brownian() const noexcept { return 0.5; }
  double p_no_jump() const noexcept { return p_none_; }
  double p_mark(int j) const { return p_mark_[j]; }
  double dW(bool up) const noexcept { return up ? sq_ : -sq_; }
  long long total_nodes() const;

 private:
  int count_span(int step) const { return std::min(step, cap_) + 1; }

  TimeGrid grid_;
  JumpMeasure jumps_;
  int cap_;
  double p_none_;
  std::vector<double> p_mark_;
  double sq_;
};

/// Throws ArgumentError when sum_j nu_j dt > 0.5.
Lattice build_lattice(const TimeGrid& grid, const JumpMeasure& jumps,
                      int jump_cap = kDefaultJumpCap);

struct LatticeOptions {
  double delta_lower = kDefaultDeltaLower;
  SaddleOptions saddle;
};

/// Per-layer arrays indexed by Lattice node index. Gamma arrays hold J
/// entries per node. The driver and the saddle feedback are stored for every
/// non-terminal node.
struct LatticeSolution {
  std::shared_ptr<const Lattice> lattice;
  int m1 = 0, m2 = 0;
  std::vector<std::vector<double>> P1, P2, L1, L2, G1, G2;
  std::vector<std::vector<double>> driver1, driver2, H1, H2;
  std::vector<Matrix> theta1_plus, theta2_plus, theta1_minus, theta2_minus;
  AssumptionReport report;
  long long saddle_solves = 0;

  Snapshot snapshot(int step, int idx) const;
};

LatticeSolution solve_bsde_on_lattice(const CoefficientSet& coeffs,
                                      const Lattice& lattice, const Cone& cone1,
                                      const Cone& cone2,
                                      const LatticeOptions& opts = {});

}  // namespace conelq
