#include "conelq/cone.hpp"
#include "conelq/hamiltonian.hpp"
#include "conelq/lattice.hpp"
#include "conelq/riccati.hpp"
#include "conelq/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace conelq;

namespace {

StepCoefficients block(int marks) {
  StepCoefficients c = StepCoefficients::zeros(1, 1, marks);
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
  for (int j = 0; j < marks; ++j) {
    c.E[j] = -0.2;
    c.F1[j] << 0.3;
    c.F2[j] << 0.1;
  }
  return c;
}

JumpMeasure jumps_for(int marks) { return marks ? JumpMeasure({0.8}) : JumpMeasure(); }

Cone cone_for(int kind) {
  switch (kind) {
    case 0: return Cone::full(1);
    case 1: return Cone::orthant(1);
    default: return Cone::generated(Matrix::Constant(1, 1, -1.0));
  }
}

void BM_Saddle(benchmark::State& state) {
  const int marks = static_cast<int>(state.range(0));
  const Cone cone = cone_for(static_cast<int>(state.range(1)));
  const StepCoefficients c = block(marks);
  const JumpMeasure jumps = jumps_for(marks);
  Snapshot s;
  s.P1 = 1.2;
  s.P2 = 0.9;
  s.G1.assign(marks, 0.05);
  s.G2.assign(marks, -0.02);
  for (auto _ : state) benchmark::DoNotOptimize(saddle(1, c, jumps, s, cone, Cone::full(1)));
}
BENCHMARK(BM_Saddle)->ArgsProduct({{0, 1}, {0, 1, 2}});

void BM_SolveOde(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoefficientSet coeffs(std::vector<StepCoefficients>(n, block(1)), 1.0);
  const TimeGrid grid(1.0, n);
  const JumpMeasure jumps = jumps_for(1);
  const Cone orth = Cone::orthant(1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ode(coeffs, grid, jumps, orth, orth));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SolveOde)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Lattice(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoefficientSet coeffs(std::vector<StepCoefficients>(n, block(1)), 1.0);
  const TimeGrid grid(1.0, n);
  const Lattice lat = build_lattice(grid, jumps_for(1));
  const Cone full = Cone::full(1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_bsde_on_lattice(coeffs, lat, full, full));
  state.SetItemsProcessed(state.iterations() * lat.total_nodes());
}
BENCHMARK(BM_Lattice)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const int n = 1000;
  const CoefficientSet coeffs(std::vector<StepCoefficients>(n, block(1)), 1.0);
  const TimeGrid grid(1.0, n);
  const JumpMeasure jumps = jumps_for(1);
  const Cone full = Cone::full(1);
  const auto law = std::make_shared<const FeedbackLaw>(
      extract_feedback(solve_ode(coeffs, grid, jumps, full, full)));
  SimOptions o;
  o.n_paths = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_paths(coeffs, grid, jumps, Policy::feedback(law, 1),
                                            Policy::feedback(law, 2),
                                            InitialLaw(InitialLaw::Normal{0.0, 1.0}), o));
  state.SetItemsProcessed(state.iterations() * o.n_paths * n);
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
