#include "conelq/errors.hpp"
#include "conelq/hamiltonian.hpp"

#include "instances.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace conelq;
using namespace conelq::testing;

namespace {

struct Case {
  StepCoefficients c = StepCoefficients::zeros(1, 1, 1);
  JumpMeasure jumps{{0.7}};
  Snapshot s;
};

Case scalar_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Case k;
  k.c.A = 0.2 * U(rng);
  k.c.C = 0.2 * U(rng);
  k.c.Q = 0.5;
  k.c.B1 << U(rng);
  k.c.B2 << U(rng);
  k.c.D1 << 0.3 * U(rng);
  k.c.D2 << 0.3 * U(rng);
  k.c.S1 << 0.1 * U(rng);
  k.c.S2 << 0.1 * U(rng);
  k.c.R11 << 1.5;
  k.c.R12 << 0.1 * U(rng);
  k.c.R22 << -2.0;
  k.c.E[0] = 0.3 * U(rng);
  k.c.F1[0] << 0.4 * U(rng);
  k.c.F2[0] << 0.2 * U(rng);
  k.s.P1 = 1.0 + 0.5 * U(rng);
  k.s.P2 = 1.0 + 0.5 * U(rng);
  k.s.L1 = 0.2 * U(rng);
  k.s.L2 = 0.2 * U(rng);
  k.s.G1 = {0.05 * U(rng)};
  k.s.G2 = {0.05 * U(rng)};
  return k;
}

Vector one(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(Hamiltonian, ObjectiveMatchesDirectEvaluation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    const Case k = scalar_case(rng);
    const HamiltonianTerms terms = build_terms(k.c, k.s);
    for (int p : {1, 2}) {
      const PiecewiseQuadratic q = hamiltonian_objective(p, k.c, k.jumps, k.s);
      for (int i = 0; i < 10; ++i) {
        const double a = U(rng), b = U(rng);
        Vector z(2);
        z << a, b;
        const double direct = eval_H_under(p, one(a), one(b), terms, k.c, k.jumps) +
                              eval_H_bar(p, one(b), terms);
        EXPECT_NEAR(q.value(z), direct, 1e-12 * (1.0 + std::abs(direct)));
      }
    }
  }
}

TEST(Hamiltonian, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Case k = scalar_case(rng);
  const PiecewiseQuadratic q = hamiltonian_objective(1, k.c, k.jumps, k.s);
  Vector z(2);
  z << 0.31, -0.17;
  const Vector g = q.gradient(z);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vector zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    EXPECT_NEAR(g[i], (q.value(zp) - q.value(zm)) / (2 * h), 1e-6);
  }
  EXPECT_GT(q.min_block_curvature(), 0.0);
  EXPECT_LT(q.max_block_curvature(), 0.0);
}

TEST(Saddle, FullConesGiveStationaryPoint) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Case k = scalar_case(rng);
    for (int p : {1, 2}) {
      const SaddleResult r = saddle(p, k.c, k.jumps, k.s, Cone::full(1), Cone::full(1));
      const PiecewiseQuadratic q = hamiltonian_objective(p, k.c, k.jumps, k.s);
      Vector z(2);
      z << r.v1[0], r.v2[0];
      EXPECT_LT(q.gradient(z).norm(), 1e-8);
      EXPECT_NEAR(q.value(z), r.value, 1e-12);
    }
  }
}

TEST(Saddle, InnerMinAtSaddleGivesSaddleValue) {
  std::mt19937_64 rng(4);
  const Case k = scalar_case(rng);
  const Cone c1 = Cone::orthant(1), c2 = Cone::full(1);
  const SaddleResult r = saddle(1, k.c, k.jumps, k.s, c1, c2);
  const InnerResult in = inner_min(1, r.v2, k.c, k.jumps, k.s, c1);
  // inner_min reports the player-1 part only.
  const double bar = eval_H_bar(1, r.v2, build_terms(k.c, k.s));
  EXPECT_NEAR(in.value + bar, r.value, 1e-9);
  EXPECT_NEAR(in.v1[0], r.v1[0], 1e-7);
}

TEST(Saddle, AgreesWithGridOracle) {
  std::mt19937_64 rng(5);
  const std::vector<Cone> cones{Cone::full(1), Cone::orthant(1),
                                Cone::generated(Matrix::Constant(1, 1, -1.0))};
  for (int t = 0; t < 9; ++t) {
    const Case k = scalar_case(rng);
    const Cone& c1 = cones[t % 3];
    const Cone& c2 = cones[t / 3];
    const SaddleResult r = saddle(1 + t % 2, k.c, k.jumps, k.s, c1, c2);
    const double R = std::max(std::abs(r.v1[0]), std::abs(r.v2[0])) + 0.2;
    const double step = 2e-3;
    const GridOracleResult g = grid_oracle_saddle(1 + t % 2, k.c, k.jumps, k.s, c1, c2, R, step);
    const double L = local_lipschitz(1 + t % 2, g.max_min.v1[0], g.max_min.v2[0],
                                     build_terms(k.c, k.s), k.c, k.jumps, step, 5);
    EXPECT_LE(std::abs(r.value - g.max_min.value), 2 * L * step) << t;
    EXPECT_LE(std::abs(g.min_max - g.max_min.value), 2 * L * step) << t;
  }
}

TEST(Saddle, TruncationRespectsRadii) {
  std::mt19937_64 rng(6);
  const Instance in = assumption_valid(0, 1, 1);
  Snapshot s;
  s.P1 = 2.0;
  s.P2 = 2.0;
  SaddleOptions o;
  o.trunc = Truncation{0.01, 0.002};
  for (int p : {1, 2}) {
    const SaddleResult free = saddle(p, in.coeffs.at(0), in.jumps, s, in.cone1, in.cone2);
    const SaddleResult r = saddle(p, in.coeffs.at(0), in.jumps, s, in.cone1, in.cone2, o);
    EXPECT_LE(r.v1.norm(), 0.01 + 1e-12);
    EXPECT_LE(r.v2.norm(), 0.002 + 1e-12);
    EXPECT_GT(free.v1.norm(), 0.01);
  }
}

TEST(Saddle, CurvatureViolationIsReported) {
  std::mt19937_64 rng(7);
  Case k = scalar_case(rng);
  k.c.R22 << 1.0;
  EXPECT_THROW(saddle(1, k.c, k.jumps, k.s, Cone::full(1), Cone::full(1)), CurvatureError);
  k = scalar_case(rng);
  k.c.R11 << -1.0;
  EXPECT_THROW(saddle(2, k.c, k.jumps, k.s, Cone::full(1), Cone::full(1)), CurvatureError);
}

TEST(Saddle, ArgumentChecks) {
  std::mt19937_64 rng(8);
  const Case k = scalar_case(rng);
  EXPECT_THROW(saddle(3, k.c, k.jumps, k.s, Cone::full(1), Cone::full(1)), ArgumentError);
  EXPECT_THROW(saddle(1, k.c, k.jumps, k.s, Cone::full(2), Cone::full(1)), ArgumentError);
  Snapshot bad = k.s;
  bad.G1 = {0.1, 0.2};
  EXPECT_THROW(saddle(1, k.c, k.jumps, bad, Cone::full(1), Cone::full(1)), ArgumentError);
  EXPECT_THROW(grid_oracle_saddle(1, k.c, k.jumps, k.s, Cone::full(1), Cone::full(1), 1.0, 0.0),
               ArgumentError);
}

TEST(Saddle, TwoDimensionalGeneratedCones) {
  StepCoefficients c = StepCoefficients::zeros(2, 2, 0);
  c.B1 << 0.8, -0.4;
  c.B2 << 0.5, 0.3;
  c.D1 << 0.2, 0.1;
  c.R11 = Matrix::Identity(2, 2);
  c.R22 = -2.0 * Matrix::Identity(2, 2);
  Matrix G(2, 2);
  G << 1.0, 1.0, 0.0, 1.0;
  const Cone cone = Cone::generated(G);
  Snapshot s;
  s.P1 = s.P2 = 1.0;
  const SaddleResult r = saddle(1, c, JumpMeasure(), s, cone, Cone::orthant(2));
  EXPECT_TRUE(cone.contains(r.v1, 1e-9));
  EXPECT_GE(r.v2.minCoeff(), -1e-12);
  // No feasible unilateral deviation improves either player.
  std::mt19937_64 rng(12);
  const PiecewiseQuadratic q = hamiltonian_objective(1, c, JumpMeasure(), s);
  Vector z(4);
  z << r.v1, r.v2;
  for (int i = 0; i < 200; ++i) {
    Vector w = z;
    w.head(2) = cone.random_member(rng, 2.0);
    EXPECT_GE(q.value(w), r.value - 1e-9);
    w = z;
    w.tail(2) = Cone::orthant(2).random_member(rng, 2.0);
    EXPECT_LE(q.value(w), r.value + 1e-9);
  }
}
