#pragma once

#include "conelq/cone.hpp"
#include "conelq/hamiltonian.hpp"
#include "conelq/model.hpp"

#include <vector>

namespace conelq::testing {

/// dP/dt = P^2 with P(1) = 1.
inline double closed_form_P(double t) { return 1.0 / (2.0 - t); }

/// Bound constants written straight from their definitions.
double expected_K(double c_bar, double T);
double expected_delta_bar(double c_bar, double T);

/// Sub/super-solution envelopes at time t, independent of the library code.
double envelope_lower(double delta_lower, double c_lower1, double T, double t);
double envelope_upper(double c_bar, double delta_bar, double K, double T, double t);

/// Projection onto a generated cone by brute force: best least-squares fit
/// over every generator subset with a nonnegative solution.
Vector brute_force_cone_projection(const Matrix& gens, const Vector& x);

/// Dykstra alternating projections onto cone ∩ ball(radius).
Vector dykstra_cone_ball(const Cone& cone, const Vector& x, double radius,
                         int iterations = 20000);

/// Largest |dH| / step between grid neighbours within `window` steps of
/// (v1, v2), scalar controls only. Used as the local Lipschitz constant for
/// grid-oracle tolerances.
double local_lipschitz(int k, double v1, double v2, const HamiltonianTerms& terms,
                       const StepCoefficients& c, const JumpMeasure& jumps,
                       double step, int window);

}  // namespace conelq::testing
