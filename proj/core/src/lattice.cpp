#include "conelq/lattice.hpp"

#include "conelq/errors.hpp"
#include "conelq/parallel.hpp"

#include <cmath>
#include <sstream>

namespace conelq {

Lattice::Lattice(TimeGrid grid, JumpMeasure jumps, int jump_cap)
    : grid_(grid), jumps_(std::move(jumps)), cap_(jump_cap) {
  if (jump_cap < 0) throw ArgumentError("lattice: jump cap must be >= 0");
  const double dt = grid_.dt();
  double total = 0.0;
  for (double nu : jumps_.intensities) {
    p_mark_.push_back(nu * dt);
    total += nu * dt;
  }
  if (total > 0.5) {
    std::ostringstream os;
    os << "lattice: total jump probability per step " << total
       << " exceeds 0.5; use a finer grid (more steps)";
    throw ArgumentError(os.str());
  }
  p_none_ = 1.0 - total;
  sq_ = std::sqrt(dt);
}

int Lattice::layer_size(int step) const {
  if (step < 0 || step > n_steps()) throw ArgumentError("lattice: step out of range");
  long long size = step + 1;
  for (int j = 0; j < marks(); ++j) size *= count_span(step);
  if (size > 200'000'000LL) throw ArgumentError("lattice: layer too large");
  return static_cast<int>(size);
}

long long Lattice::total_nodes() const {
  long long t = 0;
  for (int s = 0; s <= n_steps(); ++s) t += layer_size(s);
  return t;
}

NodeKey Lattice::key(int step, int idx) const {
  NodeKey k;
  k.step = step;
  k.level = idx % (step + 1);
  int rest = idx / (step + 1);
  const int span = count_span(step);
  k.jumps.resize(marks());
  for (int j = 0; j < marks(); ++j) {
    k.jumps[j] = rest % span;
    rest /= span;
  }
  return k;
}

int Lattice::index(const NodeKey& k) const {
  if (k.step < 0 || k.step > n_steps() || k.level < 0 || k.level > k.step ||
      static_cast<int>(k.jumps.size()) != marks())
    throw ArgumentError("lattice: node key out of range");
  const int span = count_span(k.step);
  int rest = 0;
  for (int j = marks() - 1; j >= 0; --j) {
    if (k.jumps[j] < 0 || k.jumps[j] >= span)
      throw ArgumentError("lattice: jump count out of range");
    rest = rest * span + k.jumps[j];
  }
  return k.level + (k.step + 1) * rest;
}

int Lattice::child(int step, int idx, bool up, int mark) const {
  NodeKey k = key(step, idx);
  k.step = step + 1;
  if (up) ++k.level;
  if (mark >= 0) k.jumps[mark] = std::min(k.jumps[mark] + 1, cap_);
  return index(k);
}

std::string Lattice::node_id(int step, int idx) const {
  const NodeKey k = key(step, idx);
  std::ostringstream os;
  os << k.step << ':' << k.level << ':';
  for (std::size_t j = 0; j < k.jumps.size(); ++j) os << (j ? "," : "") << k.jumps[j];
  return os.str();
}

Lattice build_lattice(const TimeGrid& grid, const JumpMeasure& jumps, int jump_cap) {
  return Lattice(grid, jumps, jump_cap);
}

Snapshot LatticeSolution::snapshot(int step, int idx) const {
  const int J = lattice->marks();
  Snapshot s;
  s.t_idx = step;
  s.P1 = P1[step][idx];
  s.P2 = P2[step][idx];
  s.L1 = L1[step][idx];
  s.L2 = L2[step][idx];
  s.G1.assign(G1[step].begin() + idx * J, G1[step].begin() + (idx + 1) * J);
  s.G2.assign(G2[step].begin() + idx * J, G2[step].begin() + (idx + 1) * J);
  return s;
}

LatticeSolution solve_bsde_on_lattice(const CoefficientSet& coeffs,
                                      const Lattice& lattice, const Cone& cone1,
                                      const Cone& cone2, const LatticeOptions& opts) {
  check_compatible(coeffs, lattice.grid(), lattice.jumps());
  if (cone1.dim() != coeffs.m1() || cone2.dim() != coeffs.m2())
    throw ArgumentError("lattice: cone dimensions do not match the controls");

  LatticeSolution sol;
  sol.lattice = std::make_shared<const Lattice>(lattice);
  sol.m1 = coeffs.m1();
  sol.m2 = coeffs.m2();
  sol.report = validate_coefficients(coeffs, lattice.grid(), lattice.jumps(), opts.delta_lower);

  const int n = lattice.n_steps();
  const int J = lattice.marks();
  const double dt = lattice.grid().dt();
  const JumpMeasure& jumps = lattice.jumps();

  auto alloc = [&](std::vector<std::vector<double>>& v, int per) {
    v.resize(n + 1);
    for (int s = 0; s <= n; ++s) v[s].assign(static_cast<std::size_t>(lattice.layer_size(s)) * per, 0.0);
  };
  alloc(sol.P1, 1);
  alloc(sol.P2, 1);
  alloc(sol.L1, 1);
  alloc(sol.L2, 1);
  alloc(sol.G1, J);
  alloc(sol.G2, J);
  alloc(sol.driver1, 1);
  alloc(sol.driver2, 1);
  alloc(sol.H1, 1);
  alloc(sol.H2, 1);
  for (auto* th : {&sol.theta1_plus, &sol.theta1_minus}) {
    th->resize(n + 1);
    for (int s = 0; s <= n; ++s) (*th)[s] = Matrix::Zero(sol.m1, lattice.layer_size(s));
  }
  for (auto* th : {&sol.theta2_plus, &sol.theta2_minus}) {
    th->resize(n + 1);
    for (int s = 0; s <= n; ++s) (*th)[s] = Matrix::Zero(sol.m2, lattice.layer_size(s));
  }

  for (int i = 0; i < lattice.layer_size(n); ++i) {
    const double g = coeffs.terminal(lattice.key(n, i));
    sol.P1[n][i] = g;
    sol.P2[n][i] = g;
  }

  const double inv_sq = 0.5 / std::sqrt(dt);  // 0.5 * sqrt(dt) / dt
  for (int s = n - 1; s >= 0; --s) {
    const int size = lattice.layer_size(s);
    const auto& N1 = sol.P1[s + 1];
    const auto& N2 = sol.P2[s + 1];
    parallel_for(size, [&](int begin, int end) {
      for (int idx = begin; idx < end; ++idx) {
        const NodeKey key = lattice.key(s, idx);
        const StepCoefficients& c = coeffs.at(key);
        Snapshot snap;
        snap.t_idx = s;
        snap.G1.assign(J, 0.0);
        snap.G2.assign(J, 0.0);
        double hat[2], lam[2];
        for (int k = 0; k < 2; ++k) {
          const auto& child = k == 0 ? N1 : N2;
          const double up0 = child[lattice.child(s, idx, true, -1)];
          const double dn0 = child[lattice.child(s, idx, false, -1)];
          const double avg0 = 0.5 * (up0 + dn0);
          double h = avg0;
          double l = lattice.p_no_jump() * (up0 - dn0);
          for (int j = 0; j < J; ++j) {
            const double upj = child[lattice.child(s, idx, true, j)];
            const double dnj = child[lattice.child(s, idx, false, j)];
            const double gam = 0.5 * (upj + dnj) - avg0;
            (k == 0 ? snap.G1 : snap.G2)[j] = gam;
            h += lattice.p_mark(j) * gam;
            l += lattice.p_mark(j) * (upj - dnj);
          }
          hat[k] = h;
          lam[k] = l * inv_sq;
        }
        snap.P1 = hat[0];
        snap.P2 = hat[1];
        snap.L1 = lam[0];
        snap.L2 = lam[1];

        SaddleResult a, b;
        try {
          a = saddle(1, c, jumps, snap, cone1, cone2, opts.saddle);
          b = saddle(2, c, jumps, snap, cone1, cone2, opts.saddle);
        } catch (const CurvatureError& e) {
          throw CurvatureError("lattice node " + lattice.node_id(s, idx) + ": " + e.what());
        } catch (const ConvergenceError& e) {
          throw ConvergenceError("lattice node " + lattice.node_id(s, idx) + ": " + e.what(),
                                 e.residual());
        }
        const double lin = 2.0 * c.A + c.C * c.C;
        const double d1 = lin * hat[0] + 2.0 * c.C * lam[0] + c.Q + a.value;
        const double d2 = lin * hat[1] + 2.0 * c.C * lam[1] + c.Q + b.value;
        const double p1 = hat[0] + dt * d1;
        const double p2 = hat[1] + dt * d2;
        if (!std::isfinite(p1) || !std::isfinite(p2))
          throw NumericError("lattice node " + lattice.node_id(s, idx) + ": non-finite value");
        sol.P1[s][idx] = p1;
        sol.P2[s][idx] = p2;
        sol.L1[s][idx] = lam[0];
        sol.L2[s][idx] = lam[1];
        for (int j = 0; j < J; ++j) {
          sol.G1[s][idx * J + j] = snap.G1[j];
          sol.G2[s][idx * J + j] = snap.G2[j];
        }
        sol.driver1[s][idx] = d1;
        sol.driver2[s][idx] = d2;
        sol.H1[s][idx] = a.value;
        sol.H2[s][idx] = b.value;
        sol.theta1_plus[s].col(idx) = a.v1;
        sol.theta2_plus[s].col(idx) = a.v2;
        sol.theta1_minus[s].col(idx) = b.v1;
        sol.theta2_minus[s].col(idx) = b.v2;
      }
    });
    sol.saddle_solves += 2LL * size;
  }
  return sol;
}

}  // namespace conelq
