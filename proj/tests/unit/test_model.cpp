#include "conelq/errors.hpp"
#include "conelq/model.hpp"

#include "instances.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace conelq;
using namespace conelq::testing;

TEST(TimeGrid, NodesAndRemaining) {
  TimeGrid g(2.0, 8);
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
  EXPECT_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(8), 2.0);
  EXPECT_EQ(g.remaining(8), 0.0);
  EXPECT_DOUBLE_EQ(g.remaining(2), 1.5);
}

TEST(TimeGrid, RejectsBadInput) {
  EXPECT_THROW(TimeGrid(0.0, 10), ArgumentError);
  EXPECT_THROW(TimeGrid(std::numeric_limits<double>::infinity(), 10), ArgumentError);
  EXPECT_THROW(TimeGrid(1.0, 0), ArgumentError);
}

TEST(JumpMeasure, TotalAndValidation) {
  JumpMeasure m({0.5, 1.5});
  EXPECT_EQ(m.size(), 2);
  EXPECT_DOUBLE_EQ(m.total(), 2.0);
  EXPECT_THROW(JumpMeasure({0.0}), ArgumentError);
  EXPECT_THROW(JumpMeasure({-1.0}), ArgumentError);
}

TEST(CoefficientSet, DimensionMismatchIsValidationError) {
  StepCoefficients a = StepCoefficients::zeros(1, 1, 0);
  StepCoefficients b = StepCoefficients::zeros(2, 1, 0);
  EXPECT_THROW(CoefficientSet({a, b}, 1.0), ValidationError);
  EXPECT_THROW(CoefficientSet({}, 1.0), ValidationError);
}

TEST(CoefficientSet, NonFiniteAndAsymmetricRejected) {
  StepCoefficients a = StepCoefficients::zeros(2, 1, 0);
  a.A = std::nan("");
  EXPECT_THROW(CoefficientSet({a}, 1.0), ValidationError);
  a.A = 0.0;
  a.R11 << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(CoefficientSet({a}, 1.0), ValidationError);
  EXPECT_THROW(CoefficientSet({StepCoefficients::zeros(1, 1, 0)}, INFINITY), ValidationError);
}

TEST(CoefficientSet, OverridesFallBack) {
  const Instance in = assumption_valid(0, 4, 1);
  StepCoefficients c = in.coeffs.at(1);
  c.Q = 0.25;
  const NodeKey k{1, 1, {0}};
  const CoefficientSet a = in.coeffs.with_overrides({{k, c}}, {{NodeKey{4, 0, {1}}, 0.2}});
  EXPECT_TRUE(a.adapted());
  EXPECT_EQ(a.at(k).Q, 0.25);
  EXPECT_EQ(a.at(NodeKey{1, 0, {0}}).Q, in.coeffs.at(1).Q);
  EXPECT_EQ(a.terminal(NodeKey{4, 0, {1}}), 0.2);
  EXPECT_EQ(a.terminal(NodeKey{4, 1, {1}}), in.coeffs.terminal());
  EXPECT_THROW(in.coeffs.with_overrides({{NodeKey{9, 0, {0}}, c}}, {}), ArgumentError);
  EXPECT_THROW(in.coeffs.with_overrides({}, {{NodeKey{2, 0, {0}}, 0.1}}), ArgumentError);
}

TEST(InitialLaw, PointAndSamplers) {
  InitialLaw p(InitialLaw::Point{1.5});
  EXPECT_TRUE(p.is_point());
  EXPECT_EQ(p.point(), 1.5);
  InitialLaw u(InitialLaw::Uniform{-1.0, 2.0});
  EXPECT_THROW(u.point(), ArgumentError);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const double x = u.sample(rng);
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 2.0);
  }
  EXPECT_THROW(InitialLaw(InitialLaw::Normal{0.0, -1.0}), ArgumentError);
  EXPECT_THROW(InitialLaw(InitialLaw::Uniform{1.0, 0.0}), ArgumentError);
}

TEST(Bounds, ConstantsFollowDefinitions) {
  for (double c : {0.1, 0.3, 1.0, 2.5})
    for (double T : {0.5, 1.0, 2.0}) {
      EXPECT_DOUBLE_EQ(bound_K(c, T), expected_K(c, T));
      EXPECT_DOUBLE_EQ(bound_delta_bar(c, T), expected_delta_bar(c, T));
    }
  EXPECT_NEAR(bound_K(1.0, 1.0), 2.0 * std::exp(2.0), 1e-12);
}

TEST(Validate, AssumptionValidInstancePassesEveryFlag) {
  for (int v = 0; v < 5; ++v)
    for (int marks : {1, 2}) {
      const Instance in = assumption_valid(v, 20, marks);
      const AssumptionReport r = validate_coefficients(in.coeffs, in.grid, in.jumps);
      EXPECT_EQ(r.c_bar, 0.3) << v;
      EXPECT_TRUE(r.standing_assumptions_hold()) << v << " " << marks;
      EXPECT_TRUE(r.decoupled_structure()) << v << " " << marks;
      EXPECT_GT(r.c_lower1, 0.0);
    }
}

TEST(Validate, FlagsTrackIndividualInequalities) {
  Instance in = assumption_valid(0, 10, 1);
  auto steps = in.coeffs.steps();
  for (auto& c : steps) c.R11 << 1e-4;
  AssumptionReport r =
      validate_coefficients(CoefficientSet(steps, 0.3), in.grid, in.jumps);
  EXPECT_FALSE(r.r11_above_delta);
  EXPECT_TRUE(r.r22_below_bound);

  steps = in.coeffs.steps();
  for (auto& c : steps) c.R22 << -1.0;
  r = validate_coefficients(CoefficientSet(steps, 0.3), in.grid, in.jumps);
  EXPECT_FALSE(r.r22_below_bound);

  steps = in.coeffs.steps();
  for (auto& c : steps) c.Q = -0.1;
  r = validate_coefficients(CoefficientSet(steps, 0.3), in.grid, in.jumps);
  EXPECT_FALSE(r.q_nonnegative);

  r = validate_coefficients(CoefficientSet(in.coeffs.steps(), 1e-6), in.grid, in.jumps);
  EXPECT_FALSE(r.g_above_delta);

  steps = in.coeffs.steps();
  for (auto& c : steps) c.F1[0] << 0.0;
  r = validate_coefficients(CoefficientSet(steps, 0.3), in.grid, in.jumps);
  EXPECT_FALSE(r.diffusion1_nondegenerate);
}

TEST(Validate, StructuralFlags) {
  const Instance in = coupled(10, true);
  const AssumptionReport r = validate_coefficients(in.coeffs, in.grid, in.jumps);
  EXPECT_FALSE(r.f2_zero);
  EXPECT_FALSE(r.s1_zero);
  EXPECT_FALSE(r.s2_zero);
  EXPECT_FALSE(r.r12_zero);
  EXPECT_FALSE(r.d1d2_zero);
  EXPECT_FALSE(r.decoupled_structure());
  EXPECT_FALSE(block_decouples(in.coeffs.at(0)));
  EXPECT_TRUE(block_decouples(assumption_valid(0, 1).coeffs.at(0)));
}

TEST(Validate, IsDeterministic) {
  const Instance in = coupled(50, true);
  EXPECT_EQ(validate_coefficients(in.coeffs, in.grid, in.jumps),
            validate_coefficients(in.coeffs, in.grid, in.jumps));
  EXPECT_THROW(validate_coefficients(in.coeffs, in.grid, in.jumps, 0.0), ArgumentError);
}

TEST(Validate, CompatibilityChecks) {
  const Instance in = coupled(10, true);
  EXPECT_THROW(check_compatible(in.coeffs, TimeGrid(1.0, 11), in.jumps), ArgumentError);
  EXPECT_THROW(check_compatible(in.coeffs, in.grid, JumpMeasure()), ArgumentError);
}
