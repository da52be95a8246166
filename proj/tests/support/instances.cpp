#include "instances.hpp"

namespace conelq::testing {

CoefficientSet constant_set(int n_steps, int m1, int m2, int marks, double G,
                            const std::function<void(StepCoefficients&)>& edit) {
  StepCoefficients c = StepCoefficients::zeros(m1, m2, marks);
  edit(c);
  return CoefficientSet(std::vector<StepCoefficients>(n_steps, c), G);
}

Instance riccati_oracle(int n_steps) {
  Instance in;
  in.grid = TimeGrid(1.0, n_steps);
  in.coeffs = constant_set(n_steps, 1, 1, 0, 1.0, [](StepCoefficients& c) {
    c.B1 << 1.0;
    c.R11 << 1.0;
    c.R22 << -1.0;
  });
  return in;
}

Instance random_bounded(std::mt19937_64& rng, int n_steps, int m1, int m2, int marks) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Instance in;
  in.grid = TimeGrid(1.0, n_steps);
  std::vector<double> nu;
  for (int j = 0; j < marks; ++j) nu.push_back(0.5 + 0.5 * (u(rng) + 1.0));
  in.jumps = JumpMeasure(nu);
  const double G = 0.5 + 0.5 * (u(rng) + 1.0);
  in.coeffs = constant_set(n_steps, m1, m2, marks, G, [&](StepCoefficients& c) {
    c.A = 0.3 * u(rng);
    c.C = 0.3 * u(rng);
    c.Q = 0.5 * (u(rng) + 1.0);
    for (int a = 0; a < m1; ++a) {
      c.B1[a] = 0.5 * u(rng);
      c.D1[a] = 0.2 * u(rng);
      c.S1[a] = 0.1 * u(rng);
    }
    for (int b = 0; b < m2; ++b) {
      c.B2[b] = 0.5 * u(rng);
      c.D2[b] = 0.2 * u(rng);
      c.S2[b] = 0.1 * u(rng);
    }
    c.R11 = Matrix::Identity(m1, m1) * 1.5;
    c.R22 = -Matrix::Identity(m2, m2) * 4.0;
    for (int a = 0; a < m1; ++a)
      for (int b = 0; b < m2; ++b) c.R12(a, b) = 0.1 * u(rng);
    for (int j = 0; j < marks; ++j) {
      c.E[j] = 0.2 * u(rng);
      for (int a = 0; a < m1; ++a) c.F1[j][a] = 0.2 * u(rng);
      for (int b = 0; b < m2; ++b) c.F2[j][b] = 0.1 * u(rng);
    }
  });
  in.cone1 = Cone::full(m1);
  in.cone2 = Cone::full(m2);
  return in;
}

Instance assumption_valid(int variant, int n_steps, int marks) {
  static const double kB1[] = {0.4, 0.5, -0.45, 0.3, 0.54};
  static const double kB2[] = {0.3, -0.25, 0.2, 0.3, -0.4};
  static const double kC[] = {0.2, -0.1, 0.0, 0.3, 0.15};
  Instance in;
  in.grid = TimeGrid(1.0, n_steps);
  std::vector<double> nu{1.0, 0.5};
  nu.resize(marks);
  in.jumps = JumpMeasure(nu);
  const int v = variant % 5;
  in.coeffs = constant_set(n_steps, 1, 1, marks, 0.3, [&](StepCoefficients& c) {
    c.A = 0.05;
    c.C = kC[v];
    c.Q = 0.1;
    c.B1 << kB1[v];
    c.B2 << kB2[v];
    c.D2 << 0.5;
    c.R11 << 1.0;
    c.R22 << -6.0;
    if (marks > 0) {
      c.E[0] = 0.2;
      c.F1[0] << 0.5;
    }
    if (marks > 1) {
      c.E[1] = -0.1;
      c.F1[1] << 0.3;
    }
  });
  // Without jumps player 1 needs a Brownian exposure for nondegeneracy.
  if (marks == 0) {
    std::vector<StepCoefficients> steps = in.coeffs.steps();
    for (auto& c : steps) {
      c.D1 << 0.5;
      c.D2 << 0.0;
    }
    in.coeffs = CoefficientSet(steps, 0.3);
  }
  in.cone1 = v % 2 == 0 ? Cone::full(1) : Cone::orthant(1);
  in.cone2 = v == 2 || v == 3 ? Cone::orthant(1) : Cone::full(1);
  return in;
}

Instance coupled(int n_steps, bool with_jumps) {
  Instance in;
  in.grid = TimeGrid(1.0, n_steps);
  const int marks = with_jumps ? 1 : 0;
  if (with_jumps) in.jumps = JumpMeasure({0.8});
  in.coeffs = constant_set(n_steps, 1, 1, marks, 1.0, [&](StepCoefficients& c) {
    c.A = 0.1;
    c.C = 0.3;
    c.Q = 0.5;
    c.B1 << 0.6;
    c.B2 << 0.4;
    c.D1 << 0.3;
    c.D2 << 0.2;
    c.S1 << 0.1;
    c.S2 << -0.1;
    c.R11 << 1.0;
    c.R12 << 0.1;
    c.R22 << -3.0;
    if (with_jumps) {
      c.E[0] = -0.2;
      c.F1[0] << 0.3;
      c.F2[0] << 0.1;
    }
  });
  return in;
}

}  // namespace conelq::testing
