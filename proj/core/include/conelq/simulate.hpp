#pragma once

#include "conelq/cone.hpp"
#include "conelq/lattice.hpp"
#include "conelq/model.hpp"
#include "conelq/riccati.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace conelq {

/// Saddle directions per grid node: u = theta_plus X+ + theta_minus X-.
struct FeedbackLaw {
  TimeGrid grid{1.0, 1};
  std::vector<Vector> theta1_plus, theta2_plus, theta1_minus, theta2_minus;

  int m1() const { return theta1_plus.empty() ? 0 : static_cast<int>(theta1_plus[0].size()); }
  int m2() const { return theta2_plus.empty() ? 0 : static_cast<int>(theta2_plus[0].size()); }
  double max_norm() const;
};

FeedbackLaw extract_feedback(const RiccatiSolution& sol);
/// Only for lattice solutions whose feedback is the same at every node of a
/// layer; otherwise there is no grid law and ArgumentError is thrown.
FeedbackLaw extract_feedback(const LatticeSolution& sol, double tol = 1e-12);

/// A control rule for one player, evaluated at (step, X, X_ref). X_ref is the
/// shadow state driven by the reference law (see SimOptions::reference);
/// rules built with reference = true replay the saddle control process.
class Policy {
 public:
  static Policy zero(int dim);
  static Policy feedback(std::shared_ptr<const FeedbackLaw> law, int player,
                         double scale = 1.0, bool reference = false);
  static Policy schedule(std::vector<Vector> per_step);
  static Policy constant(const Vector& v, int n_steps);
  /// base + h (dir - base), so h = 0 and dir = base both give base exactly.
  static Policy perturbed(const Policy& base, const Policy& dir, double h);
  /// Sum of weighted rules. Weights may be negative (no cone guarantee).
  static Policy linear(std::vector<std::pair<double, Policy>> terms);

  int dim() const;
  bool uses_reference() const;
  void eval(int step, double x, double x_ref, double* out) const;
  Vector eval(int step, double x, double x_ref) const;
  /// Static check that every value the rule can produce lies in the cone.
  bool cone_valued(const Cone& cone, double tol = 1e-9) const;
  /// Throws ArgumentError if the rule cannot serve a grid with n_steps steps.
  void check_grid(int n_steps) const;

  std::string label;

  struct Node;

 private:
  std::shared_ptr<const Node> node_;
};

inline constexpr int kMaxSimDim = 16;

struct SimOptions {
  int n_paths = 1000;
  std::uint64_t seed = 42;
  int stride = 1;
  bool store_paths = false;
  const Cone* cone1 = nullptr;
  const Cone* cone2 = nullptr;
  double cone_tol = 1e-9;
  std::shared_ptr<const FeedbackLaw> reference;
};

struct PathRecord {
  std::vector<double> X;       // node values (coarse grid)
  std::vector<double> u1, u2;  // step-major, m entries per step
  std::vector<std::pair<int, int>> jumps;  // (fine step, mark)
};

struct SimulationResult {
  int n_paths = 0;
  std::uint64_t seed = 0;
  int stride = 1;
  double dt = 0.0;
  int m1 = 0, m2 = 0;
  std::vector<double> cost, u1_energy, u2_energy, xi;
  double mean = 0.0;
  double std_error = 0.0;
  long long jump_events = 0;
  std::vector<PathRecord> paths;
};

std::uint64_t splitmix64(std::uint64_t x);

SimulationResult simulate_paths(const CoefficientSet& coeffs, const TimeGrid& grid,
                                const JumpMeasure& jumps, const Policy& p1,
                                const Policy& p2, const InitialLaw& init,
                                const SimOptions& opts);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample mean and standard error (infinite for a single sample).
Estimate estimate(const std::vector<double>& x);

/// Recomputes the left Riemann cost from stored paths when present, else
/// uses the per-path costs accumulated during simulation.
Estimate evaluate_cost(const SimulationResult& result, const CoefficientSet& coeffs,
                       const TimeGrid& grid);

struct ValueFormulaReport {
  double mc_mean = 0.0, mc_std_error = 0.0;
  double expected = 0.0;
  double diff_mean = 0.0, diff_std_error = 0.0;
  double bias = 0.0;  // J(dt) - J(2 dt) on the same noise
  double z = 0.0;
  bool statistical = true;  // false when n_paths < 2: excluded, not judged
  bool pass = false;
  int n_paths = 0;
};

ValueFormulaReport verify_value_formula(const CoefficientSet& coeffs,
                                        const TimeGrid& grid, const JumpMeasure& jumps,
                                        double P1_0, double P2_0,
                                        std::shared_ptr<const FeedbackLaw> law,
                                        const InitialLaw& init, const SimOptions& opts);

struct SaddleArm {
  std::string name;
  int player = 1;
  Policy policy;
};

struct ArmResult {
  std::string name;
  int player = 1;
  double diff_mean = 0.0;
  double diff_std_error = 0.0;
  bool pass = false;
};

struct SaddleReport {
  double baseline_mean = 0.0, baseline_std_error = 0.0;
  std::vector<ArmResult> arms;
  bool statistical = true;
  bool all_pass = true;
};

/// Perturbation corpus per player: scaled saddle laws (0, 0.5, 2), two
/// constant cone rays and two random piecewise-constant cone schedules.
std::vector<SaddleArm> perturbation_corpus(std::shared_ptr<const FeedbackLaw> law,
                                           const Cone& cone1, const Cone& cone2,
                                           std::uint64_t seed);

/// Deviations run against the replayed saddle control of the other player
/// (common random numbers). Player-1 arms must not lower J, player-2 arms
/// must not raise it, up to 3 standard errors.
SaddleReport verify_saddle(const CoefficientSet& coeffs, const TimeGrid& grid,
                           const JumpMeasure& jumps,
                           std::shared_ptr<const FeedbackLaw> law,
                           const std::vector<SaddleArm>& arms, const InitialLaw& init,
                           const Cone& cone1, const Cone& cone2, SimOptions opts);

/// Node values psi needs: the Riccati unknowns and both saddle values.
struct PsiNode {
  Snapshot snapshot;
  double H1 = 0.0;
  double H2 = 0.0;
};

double psi_eval(double X, const Vector& u1, const Vector& u2, const PsiNode& node,
                const StepCoefficients& c, const JumpMeasure& jumps);
double psi_eval(int t_idx, double X, const Vector& u1, const Vector& u2,
                const RiccatiSolution& sol, const CoefficientSet& coeffs,
                const JumpMeasure& jumps);

struct ConvexityReport {
  double residual_mean = 0.0, residual_std_error = 0.0;
  double J_mix = 0.0, J_u1 = 0.0, J_u1p = 0.0, J_tilde = 0.0;
  double energy = 0.0;     // E int |u1 - u1'|^2 dt
  double delta_hat = 0.0;  // J_tilde / energy (0 when energy is 0)
  bool statistical = true;
  bool pass = false;
};

ConvexityReport verify_convexity_identity(const CoefficientSet& coeffs,
                                          const TimeGrid& grid, const JumpMeasure& jumps,
                                          const Policy& u1, const Policy& u1_prime,
                                          const Policy& u2, double lambda,
                                          const InitialLaw& init, const SimOptions& opts);

struct StationarityReport {
  double q1 = 0.0, q1_std_error = 0.0;
  double q2 = 0.0, q2_std_error = 0.0;
  bool pass1 = false, pass2 = false;
  bool statistical = true;
};

/// One-sided difference quotients [J(u* + h(v - u*)) - J(u*)] / h per slot,
/// u* being the replayed saddle control process.
StationarityReport directional_stationarity(const CoefficientSet& coeffs,
                                            const TimeGrid& grid, const JumpMeasure& jumps,
                                            std::shared_ptr<const FeedbackLaw> law,
                                            const Policy& v1, const Policy& v2, double h,
                                            const InitialLaw& init, SimOptions opts);

}  // namespace conelq
