#include "conelq/riccati.hpp"

#include "conelq/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace conelq {

namespace {

// Re-throw a solver error with a location prefix, keeping its type.
[[noreturn]] void rethrow_at(const std::string& where) {
  try {
    throw;
  } catch (const CurvatureError& e) {
    throw CurvatureError(where + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + ": " + e.what(), e.residual());
  } catch (const BlowUpError& e) {
    throw BlowUpError(where + ": " + e.what(), e.node());
  } catch (const NumericError& e) {
    throw NumericError(where + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ArgumentError(where + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

struct WarmState {
  SaddleResult s1, s2;
  bool have = false;
};

struct Driver {
  const StepCoefficients& c;
  const JumpMeasure& jumps;
  const Cone& cone1;
  const Cone& cone2;
  const SaddleOptions& opts;
  bool warm_start;
  WarmState& warm;
  long long solves = 0;

  std::pair<SaddleResult, SaddleResult> saddles(double P1, double P2, int node) {
    Snapshot s;
    s.t_idx = node;
    s.P1 = P1;
    s.P2 = P2;
    const bool w = warm_start && warm.have;
    SaddleResult a = saddle(1, c, jumps, s, cone1, cone2, opts, w ? &warm.s1 : nullptr);
    SaddleResult b = saddle(2, c, jumps, s, cone1, cone2, opts, w ? &warm.s2 : nullptr);
    solves += 2;
    warm.s1 = a;
    warm.s2 = b;
    warm.have = true;
    return {std::move(a), std::move(b)};
  }

  std::pair<double, double> eval(double P1, double P2, int node) {
    const auto [a, b] = saddles(P1, P2, node);
    const double lin = 2.0 * c.A + c.C * c.C;
    return {lin * P1 + c.Q + a.value, lin * P2 + c.Q + b.value};
  }
};

double guard_threshold(const AssumptionReport& r, double G, double T) {
  if (r.standing_assumptions_hold()) return 10.0 * r.K;
  return 10.0 * std::max(std::abs(G), 1.0) * std::exp(10.0 * r.c_bar * T);
}

RiccatiSolution integrate(const CoefficientSet& coeffs, const TimeGrid& grid,
                          const JumpMeasure& jumps, const Cone& cone1,
                          const Cone& cone2, const RiccatiOptions& opts,
                          const std::string& method) {
  check_compatible(coeffs, grid, jumps);
  if (coeffs.adapted())
    throw ArgumentError("riccati: lattice-adapted coefficients need the lattice solver");
  if (cone1.dim() != coeffs.m1() || cone2.dim() != coeffs.m2())
    throw ArgumentError("riccati: cone dimensions do not match the controls");

  RiccatiSolution sol;
  sol.grid = grid;
  sol.method = method;
  sol.truncation = opts.saddle.trunc;
  sol.report = validate_coefficients(coeffs, grid, jumps, opts.delta_lower);
  const int n = grid.n_steps();
  const int J = jumps.size();
  const double h = grid.dt();
  const double G = coeffs.terminal();
  sol.guard = guard_threshold(sol.report, G, grid.horizon());

  sol.P1.assign(n + 1, 0.0);
  sol.P2.assign(n + 1, 0.0);
  sol.L1.assign(n + 1, 0.0);
  sol.L2.assign(n + 1, 0.0);
  sol.G1.assign(n + 1, std::vector<double>(J, 0.0));
  sol.G2.assign(n + 1, std::vector<double>(J, 0.0));
  sol.P1[n] = sol.P2[n] = G;

  WarmState warm;
  for (int i = n - 1; i >= 0; --i) {
    Driver d{coeffs.at(i), jumps, cone1, cone2, opts.saddle, opts.warm_start, warm, 0};
    const double p1 = sol.P1[i + 1], p2 = sol.P2[i + 1];
    try {
      const auto [k11, k12] = d.eval(p1, p2, i + 1);
      const auto [k21, k22] = d.eval(p1 + 0.5 * h * k11, p2 + 0.5 * h * k12, i);
      const auto [k31, k32] = d.eval(p1 + 0.5 * h * k21, p2 + 0.5 * h * k22, i);
      const auto [k41, k42] = d.eval(p1 + h * k31, p2 + h * k32, i);
      sol.P1[i] = p1 + h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41);
      sol.P2[i] = p2 + h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42);
    } catch (const Error&) {
      rethrow_at("node " + std::to_string(i));
    }
    sol.saddle_solves += d.solves;
    for (double v : {sol.P1[i], sol.P2[i]})
      if (!std::isfinite(v) || std::abs(v) > sol.guard) {
        std::ostringstream os;
        os << "riccati: |P| left the guard band " << sol.guard << " at node " << i;
        throw BlowUpError(os.str(), i);
      }
  }

  // Per-node saddle cache; node i uses the coefficients of step min(i, n-1).
  sol.saddle1.resize(n + 1);
  sol.saddle2.resize(n + 1);
  WarmState cache;
  for (int i = n; i >= 0; --i) {
    Driver d{coeffs.at(std::min(i, n - 1)), jumps, cone1, cone2, opts.saddle,
             opts.warm_start, cache, 0};
    try {
      auto [a, b] = d.saddles(sol.P1[i], sol.P2[i], i);
      sol.saddle1[i] = std::move(a);
      sol.saddle2[i] = std::move(b);
    } catch (const Error&) {
      rethrow_at("node " + std::to_string(i));
    }
    sol.saddle_solves += d.solves;
  }
  return sol;
}

}  // namespace

Snapshot RiccatiSolution::snapshot(int node) const {
  if (node < 0 || node >= n_nodes()) throw ArgumentError("solution: node out of range");
  Snapshot s;
  s.t_idx = node;
  s.P1 = P1[node];
  s.P2 = P2[node];
  s.L1 = L1[node];
  s.L2 = L2[node];
  s.G1 = G1[node];
  s.G2 = G2[node];
  return s;
}

RiccatiSolution solve_ode(const CoefficientSet& coeffs, const TimeGrid& grid,
                          const JumpMeasure& jumps, const Cone& cone1,
                          const Cone& cone2, const RiccatiOptions& opts) {
  RiccatiOptions o = opts;
  o.saddle.trunc.reset();
  return integrate(coeffs, grid, jumps, cone1, cone2, o, "rk4");
}

RiccatiSolution solve_truncated(const Truncation& trunc,
                                const CoefficientSet& coeffs,
                                const TimeGrid& grid, const JumpMeasure& jumps,
                                const Cone& cone1, const Cone& cone2,
                                const RiccatiOptions& opts) {
  if (!(trunc.n >= 0.0) || !(trunc.n_bar >= 0.0))
    throw ArgumentError("solve_truncated: radii must be nonnegative");
  check_compatible(coeffs, grid, jumps);
  const AssumptionReport r = validate_coefficients(coeffs, grid, jumps, opts.delta_lower);
  if (!r.decoupled_structure())
    throw ArgumentError(
        "solve_truncated: needs F2 = 0, S1 = S2 = 0, R12 = 0 and D1 D2^T = 0");
  RiccatiOptions o = opts;
  o.saddle.trunc = trunc;
  return integrate(coeffs, grid, jumps, cone1, cone2, o, "rk4-truncated");
}

std::pair<RiccatiSolution, LadderReport> monotone_ladder(
    const CoefficientSet& coeffs, const TimeGrid& grid, const JumpMeasure& jumps,
    const Cone& cone1, const Cone& cone2, const std::vector<Truncation>& levels,
    double tol, const RiccatiOptions& opts) {
  if (levels.empty()) throw ArgumentError("monotone_ladder: no levels given");
  if (!(tol >= 0.0)) throw ArgumentError("monotone_ladder: tol must be >= 0");

  LadderReport rep;
  rep.levels = levels;
  rep.tol = tol;
  std::vector<RiccatiSolution> sols;
  sols.reserve(levels.size());
  for (const Truncation& t : levels) {
    try {
      sols.push_back(solve_truncated(t, coeffs, grid, jumps, cone1, cone2, opts));
    } catch (const Error&) {
      std::ostringstream os;
      os << "ladder level (" << t.n << ", " << t.n_bar << ")";
      rethrow_at(os.str());
    }
    rep.P1_at_0.push_back(sols.back().P1[0]);
    rep.P2_at_0.push_back(sols.back().P2[0]);
  }

  const int L = static_cast<int>(levels.size());
  auto next_along = [&](int i, bool along_n) {
    int best = -1;
    for (int j = 0; j < L; ++j) {
      const bool same = along_n ? levels[j].n_bar == levels[i].n_bar
                                : levels[j].n == levels[i].n;
      const double vj = along_n ? levels[j].n : levels[j].n_bar;
      const double vi = along_n ? levels[i].n : levels[i].n_bar;
      if (!same || !(vj > vi)) continue;
      const double vb = best < 0 ? 0.0 : (along_n ? levels[best].n : levels[best].n_bar);
      if (best < 0 || vj < vb) best = j;
    }
    return best;
  };

  for (int i = 0; i < L; ++i) {
    for (bool along_n : {true, false}) {
      const int j = next_along(i, along_n);
      if (j < 0) continue;
      LadderComparison c;
      c.from = i;
      c.to = j;
      c.along_n = along_n;
      const auto& a = sols[i];
      const auto& b = sols[j];
      c.worst = along_n ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < a.P1.size(); ++t) {
        c.diff1.push_back(b.P1[t] - a.P1[t]);
        c.diff2.push_back(b.P2[t] - a.P2[t]);
        for (double d : {c.diff1.back(), c.diff2.back()})
          c.worst = along_n ? std::max(c.worst, d) : std::min(c.worst, d);
      }
      c.ok = along_n ? c.worst <= tol : c.worst >= -tol;
      rep.monotone = rep.monotone && c.ok;
      rep.comparisons.push_back(std::move(c));
    }
  }

  int fin = 0;
  for (int i = 1; i < L; ++i) {
    if (levels[i].n > levels[fin].n ||
        (levels[i].n == levels[fin].n && levels[i].n_bar > levels[fin].n_bar))
      fin = i;
  }
  rep.finest = fin;
  return {std::move(sols[fin]), std::move(rep)};
}

BoundsEnvelope bounds_envelope(const AssumptionReport& report, const TimeGrid& grid) {
  for (double v : {report.delta_lower, report.c_lower1, report.c_bar, report.delta_bar, report.K})
    if (!std::isfinite(v) || !(v > 0.0))
      throw ArgumentError("bounds_envelope: report constants must be positive and finite");
  BoundsEnvelope env;
  env.delta_lower = report.delta_lower;
  env.c_lower1 = report.c_lower1;
  env.c_bar = report.c_bar;
  env.delta_bar = report.delta_bar;
  env.K = report.K;
  const double a = (report.delta_bar + report.K * report.K) / report.delta_bar;
  const int n = grid.n_steps();
  env.lower.resize(n + 1);
  env.upper.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = grid.remaining(i);
    env.lower[i] = report.delta_lower * std::exp(-report.c_lower1 * s);
    env.upper[i] = (report.c_bar + a) * std::exp(2.0 * report.c_bar * s) - a;
  }
  return env;
}

}  // namespace conelq
