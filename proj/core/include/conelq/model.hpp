#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <variant>
#include <vector>

namespace conelq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform grid on [0, T]. Node i sits at T*i/n; step i covers [t_i, t_{i+1}).
class TimeGrid {
 public:
  TimeGrid(double horizon, int n_steps);

  double horizon() const noexcept { return horizon_; }
  int n_steps() const noexcept { return n_steps_; }
  double dt() const noexcept { return horizon_ / n_steps_; }
  double time(int node) const noexcept {
    return horizon_ * static_cast<double>(node) / n_steps_;
  }
  /// Time to maturity T - t_i, computed from the integer count.
  double remaining(int node) const noexcept {
    return horizon_ * static_cast<double>(n_steps_ - node) / n_steps_;
  }

 private:
  double horizon_;
  int n_steps_;
};

/// Finite-support jump intensity: mark j fires at rate intensities[j].
struct JumpMeasure {
  std::vector<double> intensities;

  JumpMeasure() = default;
  explicit JumpMeasure(std::vector<double> nu);

  int size() const noexcept { return static_cast<int>(intensities.size()); }
  bool empty() const noexcept { return intensities.empty(); }
  double total() const noexcept;
};

/// Coefficients frozen on one grid step (or one lattice node).
struct StepCoefficients {
  double A = 0.0;
  double C = 0.0;
  double Q = 0.0;
  Vector B1, B2, D1, D2, S1, S2;
  Matrix R11, R12, R22;
  std::vector<double> E;       // one per mark
  std::vector<Vector> F1, F2;  // one per mark

  /// All-zero block with the given dimensions and mark count.
  static StepCoefficients zeros(int m1, int m2, int marks);

  int m1() const noexcept { return static_cast<int>(B1.size()); }
  int m2() const noexcept { return static_cast<int>(B2.size()); }
  int marks() const noexcept { return static_cast<int>(E.size()); }
};

/// Lattice node identity: step, Brownian level (number of up moves) and
/// per-mark jump counts (capped).
struct NodeKey {
  int step = 0;
  int level = 0;
  std::vector<int> jumps;

  auto operator<=>(const NodeKey&) const = default;
  bool operator==(const NodeKey&) const = default;
};

/// Coefficients on the time grid, optionally refined per lattice node.
///
/// The deterministic part is one StepCoefficients per grid step plus a scalar
/// terminal weight G. Node overrides (keyed by NodeKey) turn the set into a
/// lattice-adapted one; lookups for nodes without an override fall back to
/// the step's deterministic block.
class CoefficientSet {
 public:
  CoefficientSet(std::vector<StepCoefficients> steps, double terminal_weight);

  int m1() const noexcept { return m1_; }
  int m2() const noexcept { return m2_; }
  int marks() const noexcept { return marks_; }
  int n_steps() const noexcept { return static_cast<int>(steps_.size()); }

  const StepCoefficients& at(int step) const;
  double terminal() const noexcept { return G_; }

  bool adapted() const noexcept {
    return !node_overrides_.empty() || !terminal_overrides_.empty();
  }
  const StepCoefficients& at(const NodeKey& node) const;
  double terminal(const NodeKey& node) const;

  /// Copy with per-node coefficient and terminal overrides attached.
  CoefficientSet with_overrides(std::map<NodeKey, StepCoefficients> nodes,
                                std::map<NodeKey, double> terminals) const;

  const std::vector<StepCoefficients>& steps() const noexcept { return steps_; }
  const std::map<NodeKey, StepCoefficients>& node_overrides() const noexcept {
    return node_overrides_;
  }
  const std::map<NodeKey, double>& terminal_overrides() const noexcept {
    return terminal_overrides_;
  }

 private:
  void check_block(const StepCoefficients& c, const char* where) const;

  std::vector<StepCoefficients> steps_;
  double G_;
  int m1_ = 0, m2_ = 0, marks_ = 0;
  std::map<NodeKey, StepCoefficients> node_overrides_;
  std::map<NodeKey, double> terminal_overrides_;
};

/// Law of the initial state: a point mass or a seeded scalar distribution.
class InitialLaw {
 public:
  struct Point {
    double x0 = 0.0;
  };
  struct Normal {
    double mean = 0.0;
    double stddev = 1.0;
  };
  struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
  };

  InitialLaw() = default;
  InitialLaw(Point p) : law_(p) {}
  InitialLaw(Normal n);
  InitialLaw(Uniform u);

  bool is_point() const noexcept {
    return std::holds_alternative<Point>(law_);
  }
  double point() const;
  double sample(std::mt19937_64& rng) const;
  const std::variant<Point, Normal, Uniform>& law() const noexcept {
    return law_;
  }

 private:
  std::variant<Point, Normal, Uniform> law_{Point{}};
};

/// Outcome of validate_coefficients: the bound constants and one flag per
/// standing-assumption inequality and per structural restriction.
struct AssumptionReport {
  double c_bar = 0.0;
  double delta_lower = 0.0;
  double delta_bar = 0.0;
  double K = 0.0;
  double c_lower1 = 0.0;

  bool r11_above_delta = false;
  bool r22_below_bound = false;
  bool q_nonnegative = false;
  bool g_above_delta = false;
  bool diffusion1_nondegenerate = false;
  bool diffusion2_nondegenerate = false;

  bool f2_zero = false;
  bool s1_zero = false;
  bool s2_zero = false;
  bool r12_zero = false;
  bool d1d2_zero = false;

  bool standing_assumptions_hold() const noexcept {
    return r11_above_delta && r22_below_bound && q_nonnegative &&
           g_above_delta && diffusion1_nondegenerate &&
           diffusion2_nondegenerate;
  }
  bool decoupled_structure() const noexcept {
    return f2_zero && s1_zero && s2_zero && r12_zero && d1d2_zero;
  }
  bool operator==(const AssumptionReport&) const = default;
};

inline constexpr double kDefaultDeltaLower = 1e-3;

/// Upper bound K = (c+1) e^{2cT} on the Riccati solution.
double bound_K(double c_bar, double horizon);
/// Concavity margin (c+1)^2 e^{4cT} (e^{2cT} - 1).
double bound_delta_bar(double c_bar, double horizon);

AssumptionReport validate_coefficients(const CoefficientSet& coeffs,
                                       const TimeGrid& grid,
                                       const JumpMeasure& jumps,
                                       double delta_lower = kDefaultDeltaLower);

/// Structural decoupling at one block: F2 = 0, R12 = 0, D1 D2^T = 0.
bool block_decouples(const StepCoefficients& c);

/// Throws ArgumentError unless coeffs, grid and jumps agree on sizes.
void check_compatible(const CoefficientSet& coeffs, const TimeGrid& grid,
                      const JumpMeasure& jumps);

}  // namespace conelq
