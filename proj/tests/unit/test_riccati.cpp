#include "conelq/errors.hpp"
#include "conelq/riccati.hpp"

#include "instances.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conelq;
using namespace conelq::testing;

TEST(SolveOde, ClosedFormOracle) {
  const Instance in = riccati_oracle(1000);
  const RiccatiSolution sol = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
  ASSERT_EQ(sol.n_nodes(), 1001);
  for (int i = 0; i <= 1000; i += 50)
    EXPECT_NEAR(sol.P1[i], closed_form_P(in.grid.time(i)), 1e-10);
  EXPECT_EQ(sol.method, "rk4");
  EXPECT_FALSE(sol.truncation.has_value());
}

TEST(SolveOde, FourthOrderConvergence) {
  std::vector<double> err;
  for (int n : {10, 20, 40}) {
    const Instance in = riccati_oracle(n);
    const RiccatiSolution sol = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
    err.push_back(std::abs(sol.P1[0] - 0.5));
  }
  EXPECT_GT(std::log2(err[0] / err[1]), 3.7);
  EXPECT_GT(std::log2(err[1] / err[2]), 3.7);
}

TEST(SolveOde, FullConesCollapse) {
  std::mt19937_64 rng(3);
  for (int r = 0; r < 3; ++r) {
    const Instance in = random_bounded(rng, 100, 2, 1, 1);
    const RiccatiSolution sol = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
    for (int i = 0; i < sol.n_nodes(); ++i) EXPECT_NEAR(sol.P1[i], sol.P2[i], 1e-12);
  }
}

TEST(SolveOde, ConesBreakTheSymmetry) {
  const Instance in = assumption_valid(1, 100, 1);  // player 1 restricted to v >= 0
  const RiccatiSolution sol = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
  EXPECT_GT(std::abs(sol.P1[0] - sol.P2[0]), 1e-6);
}

TEST(SolveOde, SaddleCacheAtEveryNode) {
  const Instance in = coupled(50, true);
  const RiccatiSolution sol = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
  ASSERT_EQ(sol.saddle1.size(), 51u);
  ASSERT_EQ(sol.saddle2.size(), 51u);
  EXPECT_GT(sol.saddle_solves, 4 * 50);
  const Snapshot s = sol.snapshot(10);
  EXPECT_EQ(s.P1, sol.P1[10]);
  EXPECT_THROW(sol.snapshot(51), ArgumentError);
}

TEST(SolveOde, BlowUpIsDetected) {
  // Player 2 alone: dP/dt = -P^2 backward, P(T) = 2 explodes at T - t = 1/2.
  Instance in;
  in.grid = TimeGrid(1.0, 200);
  in.coeffs = constant_set(200, 1, 1, 0, 2.0, [](StepCoefficients& c) {
    c.B2 << 1.0;
    c.R11 << 1.0;
    c.R22 << -1.0;
  });
  try {
    solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
    FAIL() << "expected BlowUpError";
  } catch (const BlowUpError& e) {
    EXPECT_GT(e.node(), 50);
  }
}

TEST(SolveOde, RejectsAdaptedCoefficients) {
  const Instance in = assumption_valid(0, 4, 1);
  const auto a = in.coeffs.with_overrides({}, {{NodeKey{4, 0, {0}}, 0.2}});
  EXPECT_THROW(solve_ode(a, in.grid, in.jumps, in.cone1, in.cone2), ArgumentError);
  EXPECT_THROW(solve_ode(in.coeffs, in.grid, in.jumps, Cone::full(2), in.cone2), ArgumentError);
}

TEST(Truncated, NeedsDecoupledStructure) {
  const Instance in = coupled(20, true);
  EXPECT_THROW(solve_truncated({1.0, 1.0}, in.coeffs, in.grid, in.jumps, in.cone1, in.cone2),
               ArgumentError);
  const Instance ok = assumption_valid(0, 20, 1);
  EXPECT_THROW(solve_truncated({-1.0, 1.0}, ok.coeffs, ok.grid, ok.jumps, ok.cone1, ok.cone2),
               ArgumentError);
}

TEST(Truncated, LargeRadiiReproduceDirectSolve) {
  const Instance in = assumption_valid(2, 100, 2);
  const RiccatiSolution a = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
  const RiccatiSolution b =
      solve_truncated({1e3, 1e3}, in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
  for (int i = 0; i < a.n_nodes(); ++i) EXPECT_NEAR(a.P1[i], b.P1[i], 1e-10);
  EXPECT_EQ(b.method, "rk4-truncated");
}

TEST(Ladder, MonotoneInBothRadii) {
  const Instance in = assumption_valid(0, 100, 1);
  std::vector<Truncation> levels;
  for (double n : {0.02, 0.1, 50.0})
    for (double nb : {0.005, 50.0}) levels.push_back({n, nb});
  const auto [fine, rep] =
      monotone_ladder(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2, levels);
  EXPECT_TRUE(rep.monotone);
  EXPECT_EQ(rep.finest, 5);
  EXPECT_EQ(rep.comparisons.size(), 7u);
  for (const auto& c : rep.comparisons) {
    for (std::size_t t = 0; t < c.diff1.size(); ++t) {
      if (c.along_n) {
        EXPECT_LE(c.diff1[t], 1e-8);
        EXPECT_LE(c.diff2[t], 1e-8);
      } else {
        EXPECT_GE(c.diff1[t], -1e-8);
        EXPECT_GE(c.diff2[t], -1e-8);
      }
    }
  }
  EXPECT_THROW(monotone_ladder(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2, {}),
               ArgumentError);
}

TEST(Envelope, BracketsSolutionAndTopsOutAtK) {
  const Instance in = assumption_valid(4, 100, 1);
  const RiccatiSolution sol = solve_ode(in.coeffs, in.grid, in.jumps, in.cone1, in.cone2);
  const BoundsEnvelope env = bounds_envelope(sol.report, in.grid);
  for (int i = 0; i < sol.n_nodes(); ++i) {
    EXPECT_GE(sol.P1[i], env.lower[i] - 1e-12);
    EXPECT_LE(sol.P1[i], env.upper[i] + 1e-12);
    EXPECT_LE(env.upper[i], env.K + 1e-12);
  }
  EXPECT_NEAR(env.upper[0], env.K, 1e-12);
  EXPECT_NEAR(env.upper.back(), env.c_bar, 1e-15);
  AssumptionReport bad = sol.report;
  bad.delta_bar = 0.0;
  EXPECT_THROW(bounds_envelope(bad, in.grid), ArgumentError);
}
