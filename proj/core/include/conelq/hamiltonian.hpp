#pragma once

#include "conelq/cone.hpp"
#include "conelq/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace conelq {

/// Values of the Riccati unknowns at one time (or lattice node). Empty jump
/// vectors mean Gamma = 0 for every mark.
struct Snapshot {
  int t_idx = 0;
  double P1 = 0.0;
  double P2 = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  std::vector<double> G1;
  std::vector<double> G2;

  double gamma1(int j) const { return G1.empty() ? 0.0 : G1[j]; }
  double gamma2(int j) const { return G2.empty() ? 0.0 : G2[j]; }
};

/// The M and N blocks. N_kk' are row vectors in the math; stored here as
/// column vectors. X1, X2 are the cross blocks P_k' D1 D2^T + R12.
struct HamiltonianTerms {
  int t_idx = 0;
  Snapshot snapshot;
  Matrix M11, M12, M21, M22;
  Vector N11, N12, N21, N22;
  Matrix X1, X2;
};

HamiltonianTerms build_terms(const StepCoefficients& c, const Snapshot& s);
HamiltonianTerms build_terms(int t_idx, const CoefficientSet& coeffs, double P1,
                             double P2, double L1, double L2);

double eval_H_under(int k, const Vector& v1, const Vector& v2,
                    const HamiltonianTerms& terms, const StepCoefficients& c,
                    const JumpMeasure& jumps);
double eval_H_bar(int k, const Vector& v2, const HamiltonianTerms& terms);

/// q(z) = z'Hz + 2g'z + const + sum_j nu_j phi_j(a_j + f_j'z) with
/// phi(y) = wp (y+)^2 + wm (y-)^2 + slope y + offset.
///
/// z stacks a minimizing block (first n1 entries) and a maximizing block
/// (last n2 entries). Every H_k, every truncated piece and every inner
/// problem is of this form.
struct PiecewiseQuadratic {
  struct Kink {
    double nu = 0.0;
    double a = 0.0;
    double wp = 0.0;
    double wm = 0.0;
    double slope = 0.0;
    double offset = 0.0;
    Vector f;
  };

  int n1 = 0;
  int n2 = 0;
  Matrix H;
  Vector g;
  double constant = 0.0;
  std::vector<Kink> kinks;

  int size() const noexcept { return n1 + n2; }
  double value(const Vector& z) const;
  Vector gradient(const Vector& z) const;
  /// Hessian of the quadratic piece active at z (y >= 0 counts as positive).
  Matrix piece_hessian(const Vector& z) const;
  /// Gradient offset b of the piece active at z: gradient = piece_hessian z + b.
  Vector piece_offset(const Vector& z) const;
  /// Smallest eigenvalue of the min-block curvature over all pieces (lower
  /// bound) and largest of the max-block curvature (upper bound).
  double min_block_curvature() const;
  double max_block_curvature() const;
  /// Lipschitz bound of the gradient over all pieces.
  double lipschitz() const;
};

/// H_k(v1, v2) = H_under_k + H_bar_k as a PiecewiseQuadratic over (v1, v2).
PiecewiseQuadratic hamiltonian_objective(int k, const StepCoefficients& c,
                                         const JumpMeasure& jumps,
                                         const Snapshot& s);

enum class SaddleMethod { analytic, extragradient, grid_oracle };
std::string to_string(SaddleMethod m);

struct SaddleResult {
  Vector v1;
  Vector v2;
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  SaddleMethod method = SaddleMethod::analytic;
};

/// Truncation radii (n on the minimizing side, n_bar on the maximizing side).
struct Truncation {
  double n = 0.0;
  double n_bar = 0.0;
};

struct SaddleOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  std::optional<Truncation> trunc;
  bool check_curvature = true;
};

struct InnerResult {
  Vector v1;
  double value = 0.0;
  double residual = 0.0;
};

/// min over v1 in cone1 (and |v1| <= radius if given) of H_under_k(v1, v2).
InnerResult inner_min(int k, const Vector& v2, const StepCoefficients& c,
                      const JumpMeasure& jumps, const Snapshot& s,
                      const Cone& cone1, std::optional<double> radius = {},
                      double tol = 1e-10);

/// Cone-constrained saddle point of H_k. `warm` seeds the iteration.
SaddleResult saddle(int k, const StepCoefficients& c, const JumpMeasure& jumps,
                    const Snapshot& s, const Cone& cone1, const Cone& cone2,
                    const SaddleOptions& opts = {},
                    const SaddleResult* warm = nullptr);

struct GridOracleResult {
  SaddleResult max_min;  // argmax over v2 of argmin over v1, and its value
  double min_max = 0.0;
  long long evaluations = 0;
};

/// Exhaustive scan of cone ∩ ball(radius) on a step-spaced grid.
GridOracleResult grid_oracle_saddle(int k, const StepCoefficients& c,
                                    const JumpMeasure& jumps, const Snapshot& s,
                                    const Cone& cone1, const Cone& cone2,
                                    double radius, double step);

/// Generic solver: saddle of q over (cone1 ∩ ball r1) x (cone2 ∩ ball r2).
SaddleResult solve_piecewise_saddle(const PiecewiseQuadratic& q,
                                    const Cone& cone1, const Cone& cone2,
                                    double r1, double r2, double tol,
                                    int max_iter, const Vector* warm);

}  // namespace conelq
