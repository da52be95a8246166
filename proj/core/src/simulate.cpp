#include "conelq/simulate.hpp"

#include "conelq/errors.hpp"
#include "conelq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace conelq {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

double pos(double x) { return x > 0.0 ? x : 0.0; }
double neg(double x) { return x < 0.0 ? -x : 0.0; }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------- feedback

double FeedbackLaw::max_norm() const {
  double m = 0.0;
  for (const auto* v : {&theta1_plus, &theta2_plus, &theta1_minus, &theta2_minus})
    for (const Vector& t : *v) m = std::max(m, t.norm());
  return m;
}

FeedbackLaw extract_feedback(const RiccatiSolution& sol) {
  const int n = sol.n_nodes();
  if (static_cast<int>(sol.saddle1.size()) != n || static_cast<int>(sol.saddle2.size()) != n)
    throw ArgumentError("extract_feedback: solution has no saddle cache");
  FeedbackLaw law;
  law.grid = sol.grid;
  for (int i = 0; i < n; ++i) {
    law.theta1_plus.push_back(sol.saddle1[i].v1);
    law.theta2_plus.push_back(sol.saddle1[i].v2);
    law.theta1_minus.push_back(sol.saddle2[i].v1);
    law.theta2_minus.push_back(sol.saddle2[i].v2);
  }
  return law;
}

FeedbackLaw extract_feedback(const LatticeSolution& sol, double tol) {
  if (!sol.lattice || sol.theta1_plus.empty())
    throw ArgumentError("extract_feedback: lattice solution has no saddle cache");
  const Lattice& lat = *sol.lattice;
  const int n = lat.n_steps();
  FeedbackLaw law;
  law.grid = lat.grid();
  auto layer_value = [&](const std::vector<Matrix>& th, int s) -> Vector {
    const Matrix& m = th[s];
    for (Eigen::Index c = 1; c < m.cols(); ++c)
      if ((m.col(c) - m.col(0)).norm() > tol)
        throw ArgumentError(
            "extract_feedback: lattice feedback differs across nodes of step " +
            std::to_string(s) + "; no grid law exists");
    return m.col(0);
  };
  for (int s = 0; s < n; ++s) {
    law.theta1_plus.push_back(layer_value(sol.theta1_plus, s));
    law.theta2_plus.push_back(layer_value(sol.theta2_plus, s));
    law.theta1_minus.push_back(layer_value(sol.theta1_minus, s));
    law.theta2_minus.push_back(layer_value(sol.theta2_minus, s));
  }
  // The terminal node carries no control; repeat the last step's law.
  law.theta1_plus.push_back(law.theta1_plus.back());
  law.theta2_plus.push_back(law.theta2_plus.back());
  law.theta1_minus.push_back(law.theta1_minus.back());
  law.theta2_minus.push_back(law.theta2_minus.back());
  return law;
}

// ---------------------------------------------------------------- policies

struct Policy::Node {
  enum class Kind { zero, feedback, schedule, perturbed, linear };
  Kind kind = Kind::zero;
  int dim = 0;
  std::shared_ptr<const FeedbackLaw> law;
  int player = 1;
  double scale = 1.0;
  bool reference = false;
  std::vector<double> plus, minus;  // feedback, node-major
  std::vector<Vector> values;       // schedule
  std::vector<double> flat;         // schedule, step-major
  double h = 0.0;
  std::vector<std::pair<double, Policy>> terms;
};

Policy Policy::zero(int dim) {
  if (dim < 0 || dim > kMaxSimDim) throw ArgumentError("policy: bad dimension");
  auto n = std::make_shared<Node>();
  n->dim = dim;
  Policy p;
  p.node_ = n;
  p.label = "zero";
  return p;
}

Policy Policy::feedback(std::shared_ptr<const FeedbackLaw> law, int player, double scale,
                        bool reference) {
  if (!law) throw ArgumentError("policy: null feedback law");
  if (player != 1 && player != 2) throw ArgumentError("policy: player must be 1 or 2");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::feedback;
  n->law = law;
  n->player = player;
  n->scale = scale;
  n->reference = reference;
  n->dim = player == 1 ? law->m1() : law->m2();
  if (n->dim > kMaxSimDim) throw ArgumentError("policy: control dimension too large");
  const auto& tp = player == 1 ? law->theta1_plus : law->theta2_plus;
  const auto& tm = player == 1 ? law->theta1_minus : law->theta2_minus;
  for (std::size_t i = 0; i < tp.size(); ++i)
    for (int d = 0; d < n->dim; ++d) {
      n->plus.push_back(tp[i][d]);
      n->minus.push_back(tm[i][d]);
    }
  Policy p;
  p.node_ = n;
  p.label = std::string(reference ? "saddle-replay" : "feedback") + "-p" +
            std::to_string(player) + (scale == 1.0 ? "" : "x" + std::to_string(scale));
  return p;
}

Policy Policy::schedule(std::vector<Vector> per_step) {
  if (per_step.empty()) throw ArgumentError("policy: empty schedule");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::schedule;
  n->dim = static_cast<int>(per_step[0].size());
  if (n->dim > kMaxSimDim) throw ArgumentError("policy: control dimension too large");
  for (const Vector& v : per_step) {
    if (v.size() != n->dim) throw ArgumentError("policy: schedule dimensions differ");
    if (!v.allFinite()) throw ArgumentError("policy: schedule has non-finite entries");
    for (int d = 0; d < n->dim; ++d) n->flat.push_back(v[d]);
  }
  n->values = std::move(per_step);
  Policy p;
  p.node_ = n;
  p.label = "schedule";
  return p;
}

Policy Policy::constant(const Vector& v, int n_steps) {
  if (n_steps < 1) throw ArgumentError("policy: n_steps must be >= 1");
  Policy p = schedule(std::vector<Vector>(n_steps, v));
  p.label = "constant";
  return p;
}

Policy Policy::perturbed(const Policy& base, const Policy& dir, double h) {
  if (base.dim() != dir.dim()) throw ArgumentError("policy: perturbation dimension mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::perturbed;
  n->dim = base.dim();
  n->h = h;
  n->terms = {{1.0, base}, {1.0, dir}};
  Policy p;
  p.node_ = n;
  p.label = base.label + "+h(" + dir.label + ")";
  return p;
}

Policy Policy::linear(std::vector<std::pair<double, Policy>> terms) {
  if (terms.empty()) throw ArgumentError("policy: empty combination");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::linear;
  n->dim = terms[0].second.dim();
  for (const auto& t : terms)
    if (t.second.dim() != n->dim) throw ArgumentError("policy: combination dimension mismatch");
  n->terms = std::move(terms);
  Policy p;
  p.node_ = n;
  p.label = "linear";
  return p;
}

int Policy::dim() const { return node_ ? node_->dim : 0; }

bool Policy::uses_reference() const {
  if (!node_) return false;
  if (node_->kind == Node::Kind::feedback) return node_->reference;
  for (const auto& t : node_->terms)
    if (t.second.uses_reference()) return true;
  return false;
}

void Policy::eval(int step, double x, double x_ref, double* out) const {
  const Node& n = *node_;
  const int m = n.dim;
  switch (n.kind) {
    case Node::Kind::zero:
      for (int d = 0; d < m; ++d) out[d] = 0.0;
      return;
    case Node::Kind::feedback: {
      const double xv = n.reference ? x_ref : x;
      const double xp = pos(xv), xm = neg(xv);
      const double* tp = n.plus.data() + static_cast<std::size_t>(step) * m;
      const double* tm = n.minus.data() + static_cast<std::size_t>(step) * m;
      if (n.scale == 1.0) {
        for (int d = 0; d < m; ++d) out[d] = tp[d] * xp + tm[d] * xm;
      } else {
        for (int d = 0; d < m; ++d) out[d] = n.scale * (tp[d] * xp + tm[d] * xm);
      }
      return;
    }
    case Node::Kind::schedule: {
      const double* v = n.flat.data() + static_cast<std::size_t>(step) * m;
      for (int d = 0; d < m; ++d) out[d] = v[d];
      return;
    }
    case Node::Kind::perturbed: {
      double b[kMaxSimDim], dir[kMaxSimDim];
      n.terms[0].second.eval(step, x, x_ref, b);
      n.terms[1].second.eval(step, x, x_ref, dir);
      for (int d = 0; d < m; ++d) out[d] = b[d] + n.h * (dir[d] - b[d]);
      return;
    }
    case Node::Kind::linear: {
      double t[kMaxSimDim];
      for (int d = 0; d < m; ++d) out[d] = 0.0;
      for (const auto& [w, pol] : n.terms) {
        pol.eval(step, x, x_ref, t);
        for (int d = 0; d < m; ++d) out[d] += w * t[d];
      }
      return;
    }
  }
}

Vector Policy::eval(int step, double x, double x_ref) const {
  Vector v(dim());
  eval(step, x, x_ref, v.data());
  return v;
}

bool Policy::cone_valued(const Cone& cone, double tol) const {
  const Node& n = *node_;
  if (cone.dim() != n.dim) return false;
  switch (n.kind) {
    case Node::Kind::zero:
      return true;
    case Node::Kind::feedback: {
      if (n.scale < 0.0) return false;
      const auto& tp = n.player == 1 ? n.law->theta1_plus : n.law->theta2_plus;
      const auto& tm = n.player == 1 ? n.law->theta1_minus : n.law->theta2_minus;
      for (std::size_t i = 0; i < tp.size(); ++i)
        if (!cone.contains(tp[i], tol) || !cone.contains(tm[i], tol)) return false;
      return true;
    }
    case Node::Kind::schedule:
      for (const Vector& v : n.values)
        if (!cone.contains(v, tol)) return false;
      return true;
    case Node::Kind::perturbed:
      return n.h >= 0.0 && n.h <= 1.0 && n.terms[0].second.cone_valued(cone, tol) &&
             n.terms[1].second.cone_valued(cone, tol);
    case Node::Kind::linear:
      for (const auto& [w, pol] : n.terms)
        if (w < 0.0 || !pol.cone_valued(cone, tol)) return false;
      return true;
  }
  return false;
}

void Policy::check_grid(int n_steps) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Node::Kind::zero:
      return;
    case Node::Kind::feedback:
      if (n.law->grid.n_steps() != n_steps)
        throw ArgumentError("policy: feedback law grid has " +
                            std::to_string(n.law->grid.n_steps()) + " steps, simulation has " +
                            std::to_string(n_steps));
      return;
    case Node::Kind::schedule:
      if (static_cast<int>(n.values.size()) < n_steps)
        throw ArgumentError("policy: schedule has " + std::to_string(n.values.size()) +
                            " entries, grid has " + std::to_string(n_steps) + " steps");
      return;
    case Node::Kind::perturbed:
    case Node::Kind::linear:
      for (const auto& t : n.terms) t.second.check_grid(n_steps);
      return;
  }
}

// -------------------------------------------------------------- simulation

namespace {

// All step blocks packed into one array so the path loop reads contiguous
// memory. Offsets are shared by every step.
struct StepTable {
  int width = 0;
  int B1, B2, D1, D2, S1, S2, R11, R12, R22, E, F1, F2;
  std::vector<double> data;

  StepTable(const CoefficientSet& coeffs) {
    const int m1 = coeffs.m1(), m2 = coeffs.m2(), J = coeffs.marks();
    int at = 3;  // A, C, Q
    auto take = [&](int size) {
      const int o = at;
      at += size;
      return o;
    };
    B1 = take(m1);
    B2 = take(m2);
    D1 = take(m1);
    D2 = take(m2);
    S1 = take(m1);
    S2 = take(m2);
    R11 = take(m1 * m1);
    R12 = take(m1 * m2);
    R22 = take(m2 * m2);
    E = take(J);
    F1 = take(J * m1);
    F2 = take(J * m2);
    width = at;
    data.assign(static_cast<std::size_t>(width) * coeffs.n_steps(), 0.0);
    for (int i = 0; i < coeffs.n_steps(); ++i) {
      const StepCoefficients& c = coeffs.at(i);
      double* w = data.data() + static_cast<std::size_t>(i) * width;
      w[0] = c.A;
      w[1] = c.C;
      w[2] = c.Q;
      auto put = [&](int off, const Vector& v) {
        for (Eigen::Index d = 0; d < v.size(); ++d) w[off + d] = v[d];
      };
      auto put_m = [&](int off, const Matrix& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
          for (Eigen::Index q = 0; q < m.cols(); ++q) w[off + r * m.cols() + q] = m(r, q);
      };
      put(B1, c.B1);
      put(B2, c.B2);
      put(D1, c.D1);
      put(D2, c.D2);
      put(S1, c.S1);
      put(S2, c.S2);
      put_m(R11, c.R11);
      put_m(R12, c.R12);
      put_m(R22, c.R22);
      for (int j = 0; j < J; ++j) {
        w[E + j] = c.E[j];
        put(F1 + j * m1, c.F1[j]);
        put(F2 + j * m2, c.F2[j]);
      }
    }
  }
  const double* step(int i) const { return data.data() + static_cast<std::size_t>(i) * width; }
};

inline double dot(const double* a, const double* b, int m) {
  double s = 0.0;
  for (int d = 0; d < m; ++d) s += a[d] * b[d];
  return s;
}

}  // namespace

Estimate estimate(const std::vector<double>& x) {
  Estimate e;
  const std::size_t n = x.size();
  if (n == 0) return e;
  double s = 0.0;
  for (double v : x) s += v;
  e.mean = s / static_cast<double>(n);
  if (n < 2) {
    e.std_error = std::numeric_limits<double>::infinity();
    return e;
  }
  double ss = 0.0;
  for (double v : x) ss += (v - e.mean) * (v - e.mean);
  e.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return e;
}

SimulationResult simulate_paths(const CoefficientSet& coeffs, const TimeGrid& grid,
                                const JumpMeasure& jumps, const Policy& p1,
                                const Policy& p2, const InitialLaw& init,
                                const SimOptions& opts) {
  check_compatible(coeffs, grid, jumps);
  if (coeffs.adapted())
    throw ArgumentError("simulate: lattice-adapted coefficients cannot be simulated on the grid");
  if (opts.n_paths < 1) throw ArgumentError("simulate: n_paths must be >= 1");
  const int n = grid.n_steps();
  const int s = opts.stride;
  if (s < 1 || n % s != 0)
    throw ArgumentError("simulate: stride must divide the number of steps");
  const int m1 = coeffs.m1(), m2 = coeffs.m2();
  if (p1.dim() != m1 || p2.dim() != m2)
    throw ArgumentError("simulate: policy dimensions do not match the controls");
  if (m1 > kMaxSimDim || m2 > kMaxSimDim)
    throw ArgumentError("simulate: control dimension too large");
  p1.check_grid(n);
  p2.check_grid(n);
  const bool need_ref = p1.uses_reference() || p2.uses_reference();
  if (need_ref && !opts.reference)
    throw ArgumentError("simulate: replay policies need a reference law");
  std::optional<Policy> r1, r2;
  if (need_ref) {
    r1 = Policy::feedback(opts.reference, 1);
    r2 = Policy::feedback(opts.reference, 2);
    r1->check_grid(n);
    r2->check_grid(n);
  }

  const StepTable tab(coeffs);
  std::vector<double> t_end(n);
  for (int i = 0; i < n; ++i) t_end[i] = grid.time(i + 1);
  // Rules that are cone-valued by construction need no per-step check.
  auto needs_check = [&](const Cone* cone, const Policy& p) -> const Cone* {
    if (!cone || cone->kind() == Cone::Kind::full || p.cone_valued(*cone, opts.cone_tol))
      return nullptr;
    return cone;
  };
  const Cone* check1 = needs_check(opts.cone1, p1);
  const Cone* check2 = needs_check(opts.cone2, p2);
  const double G = coeffs.terminal();
  const int J = jumps.size();
  const double dt = grid.dt();
  const double sq = std::sqrt(dt);
  const double dtc = dt * s;
  const int nc = n / s;

  SimulationResult res;
  res.n_paths = opts.n_paths;
  res.seed = opts.seed;
  res.stride = s;
  res.dt = dtc;
  res.m1 = m1;
  res.m2 = m2;
  res.cost.assign(opts.n_paths, 0.0);
  res.u1_energy.assign(opts.n_paths, 0.0);
  res.u2_energy.assign(opts.n_paths, 0.0);
  res.xi.assign(opts.n_paths, 0.0);
  if (opts.store_paths) res.paths.resize(opts.n_paths);
  std::vector<long long> jump_counts(opts.n_paths, 0);

  const std::uint64_t noise_base = splitmix64(opts.seed);
  const std::uint64_t xi_base = splitmix64(opts.seed ^ 0x5DEECE66DULL);

  parallel_for(opts.n_paths, [&](int begin, int end) {
    double u1[kMaxSimDim], u2[kMaxSimDim], v1[kMaxSimDim], v2[kMaxSimDim];
    std::vector<int> counts(J);
    std::vector<double> next(J);
    Vector uv1(m1), uv2(m2);
    for (int path = begin; path < end; ++path) {
      const std::uint64_t p = static_cast<std::uint64_t>(path);
      std::mt19937_64 rng(splitmix64(noise_base + p * kGolden));
      std::mt19937_64 rng_xi(splitmix64(xi_base + p * kGolden));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<std::exponential_distribution<double>> clocks;
      for (int j = 0; j < J; ++j) clocks.emplace_back(jumps.intensities[j]);

      const double xi = init.sample(rng_xi);
      if (!std::isfinite(xi)) throw NumericError("simulate: non-finite initial state");
      for (int j = 0; j < J; ++j) next[j] = clocks[j](rng);
      double X = xi, Xr = xi;
      double cost = 0.0, e1 = 0.0, e2 = 0.0;
      PathRecord* rec = opts.store_paths ? &res.paths[path] : nullptr;
      if (rec) {
        rec->X.reserve(nc + 1);
        rec->X.push_back(X);
      }

      auto advance = [&](double x, const double* a1, const double* a2, double dW,
                         const double* c) {
        double drift = c[0] * x + dot(c + tab.B1, a1, m1) + dot(c + tab.B2, a2, m2);
        const double diff = c[1] * x + dot(c + tab.D1, a1, m1) + dot(c + tab.D2, a2, m2);
        double jump = 0.0;
        for (int j = 0; j < J; ++j) {
          const double amt = c[tab.E + j] * x + dot(c + tab.F1 + j * m1, a1, m1) +
                             dot(c + tab.F2 + j * m2, a2, m2);
          drift -= jumps.intensities[j] * amt;
          jump += counts[j] * amt;
        }
        return x + drift * dtc + diff * dW + jump;
      };

      for (int k = 0; k < nc; ++k) {
        const int i0 = k * s;
        double dW = 0.0;
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = i0; i < i0 + s; ++i) {
          dW += sq * normal(rng);
          for (int j = 0; j < J; ++j)
            while (next[j] <= t_end[i]) {
              ++counts[j];
              ++jump_counts[path];
              if (rec) rec->jumps.emplace_back(i, j);
              next[j] += clocks[j](rng);
            }
        }
        const double* c = tab.step(i0);
        p1.eval(i0, X, Xr, u1);
        p2.eval(i0, X, Xr, u2);

        if (check1 || check2) {
          for (int d = 0; d < m1; ++d) uv1[d] = u1[d];
          for (int d = 0; d < m2; ++d) uv2[d] = u2[d];
          if ((check1 && !check1->contains(uv1, opts.cone_tol)) ||
              (check2 && !check2->contains(uv2, opts.cone_tol)))
            throw ArgumentError("simulate: control left its cone on path " +
                                std::to_string(path) + " at step " + std::to_string(i0));
        }

        double run = c[2] * X * X + 2.0 * X * (dot(c + tab.S1, u1, m1) + dot(c + tab.S2, u2, m2));
        double n1 = 0.0, n2 = 0.0;
        for (int a = 0; a < m1; ++a) {
          run += u1[a] * dot(c + tab.R11 + a * m1, u1, m1);
          run += 2.0 * u1[a] * dot(c + tab.R12 + a * m2, u2, m2);
          n1 += u1[a] * u1[a];
        }
        for (int b = 0; b < m2; ++b) {
          run += u2[b] * dot(c + tab.R22 + b * m2, u2, m2);
          n2 += u2[b] * u2[b];
        }
        cost += run * dtc;
        e1 += n1 * dtc;
        e2 += n2 * dtc;
        if (rec) {
          rec->u1.insert(rec->u1.end(), u1, u1 + m1);
          rec->u2.insert(rec->u2.end(), u2, u2 + m2);
        }

        const double Xn = advance(X, u1, u2, dW, c);
        if (need_ref) {
          r1->eval(i0, Xr, Xr, v1);
          r2->eval(i0, Xr, Xr, v2);
          Xr = advance(Xr, v1, v2, dW, c);
        }
        X = Xn;
        if (!std::isfinite(X))
          throw NumericError("simulate: non-finite state on path " + std::to_string(path));
        if (rec) rec->X.push_back(X);
      }
      cost += G * X * X;
      res.cost[path] = cost;
      res.u1_energy[path] = e1;
      res.u2_energy[path] = e2;
      res.xi[path] = xi;
    }
  });

  for (long long c : jump_counts) res.jump_events += c;
  const Estimate e = estimate(res.cost);
  res.mean = e.mean;
  res.std_error = e.std_error;
  return res;
}

Estimate evaluate_cost(const SimulationResult& result, const CoefficientSet& coeffs,
                       const TimeGrid& grid) {
  if (result.paths.empty()) {
    for (double c : result.cost)
      if (!std::isfinite(c)) throw NumericError("evaluate_cost: non-finite path cost");
    return estimate(result.cost);
  }
  const int s = result.stride;
  const int nc = grid.n_steps() / s;
  const int m1 = result.m1, m2 = result.m2;
  std::vector<double> costs;
  costs.reserve(result.paths.size());
  for (const PathRecord& p : result.paths) {
    if (static_cast<int>(p.X.size()) != nc + 1)
      throw ArgumentError("evaluate_cost: stored path does not match the grid");
    double J = 0.0;
    for (int k = 0; k < nc; ++k) {
      const StepCoefficients& c = coeffs.at(k * s);
      const double x = p.X[k];
      const Eigen::Map<const Vector> u1(p.u1.data() + static_cast<std::size_t>(k) * m1, m1);
      const Eigen::Map<const Vector> u2(p.u2.data() + static_cast<std::size_t>(k) * m2, m2);
      J += result.dt * (c.Q * x * x + 2.0 * x * (c.S1.dot(u1) + c.S2.dot(u2)) +
                        u1.dot(c.R11 * u1) + 2.0 * u1.dot(c.R12 * u2) + u2.dot(c.R22 * u2));
    }
    J += coeffs.terminal() * p.X.back() * p.X.back();
    if (!std::isfinite(J)) throw NumericError("evaluate_cost: non-finite path cost");
    costs.push_back(J);
  }
  return estimate(costs);
}

// ----------------------------------------------------------- verification

namespace {

std::vector<double> minus(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

ValueFormulaReport verify_value_formula(const CoefficientSet& coeffs,
                                        const TimeGrid& grid, const JumpMeasure& jumps,
                                        double P1_0, double P2_0,
                                        std::shared_ptr<const FeedbackLaw> law,
                                        const InitialLaw& init, const SimOptions& opts) {
  SimOptions o = opts;
  o.reference.reset();
  const Policy a1 = Policy::feedback(law, 1), a2 = Policy::feedback(law, 2);
  const SimulationResult fine = simulate_paths(coeffs, grid, jumps, a1, a2, init, o);

  ValueFormulaReport r;
  r.n_paths = fine.n_paths;
  r.statistical = fine.n_paths >= 2;
  const Estimate mc = estimate(fine.cost);
  r.mc_mean = mc.mean;
  r.mc_std_error = mc.std_error;

  std::vector<double> target(fine.n_paths);
  for (int p = 0; p < fine.n_paths; ++p) {
    const double x = fine.xi[p];
    target[p] = P1_0 * pos(x) * pos(x) + P2_0 * neg(x) * neg(x);
  }
  r.expected = estimate(target).mean;
  const Estimate d = estimate(minus(fine.cost, target));
  r.diff_mean = d.mean;
  r.diff_std_error = d.std_error;

  if (grid.n_steps() % (2 * o.stride) == 0) {
    SimOptions oc = o;
    oc.stride = 2 * o.stride;
    const SimulationResult coarse = simulate_paths(coeffs, grid, jumps, a1, a2, init, oc);
    r.bias = estimate(minus(fine.cost, coarse.cost)).mean;
  }
  // Rounding floor keeps z finite on noise-free instances.
  const double floor = 1e-12 * (1.0 + std::abs(r.expected));
  const double se = r.statistical ? d.std_error : 0.0;
  const double denom = std::sqrt(se * se + r.bias * r.bias + floor * floor);
  r.z = r.statistical ? r.diff_mean / denom : 0.0;
  r.pass = std::abs(r.z) <= 3.0;
  return r;
}

std::vector<SaddleArm> perturbation_corpus(std::shared_ptr<const FeedbackLaw> law,
                                           const Cone& cone1, const Cone& cone2,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  const int n = law->grid.n_steps();
  std::vector<SaddleArm> arms;
  for (int player : {1, 2}) {
    const Cone& cone = player == 1 ? cone1 : cone2;
    const std::string tag = "p" + std::to_string(player) + "-";
    for (double lam : {0.0, 0.5, 2.0})
      arms.push_back({tag + "scaled-" + std::to_string(lam).substr(0, 3), player,
                      Policy::feedback(law, player, lam)});
    for (double mag : {0.5, 1.0}) {
      Vector r = cone.random_member(rng, 1.0);
      if (r.norm() > 0.0) r *= mag / r.norm();
      arms.push_back({tag + "ray-" + std::to_string(mag).substr(0, 3), player,
                      Policy::constant(r, n)});
    }
    for (int a = 0; a < 2; ++a) {
      std::vector<Vector> pieces;
      for (int k = 0; k < 4; ++k) pieces.push_back(cone.random_member(rng, 1.0));
      std::vector<Vector> sched(n);
      for (int i = 0; i < n; ++i) sched[i] = pieces[std::min(3, 4 * i / n)];
      arms.push_back({tag + "piecewise-" + std::to_string(a), player, Policy::schedule(sched)});
    }
  }
  return arms;
}

SaddleReport verify_saddle(const CoefficientSet& coeffs, const TimeGrid& grid,
                           const JumpMeasure& jumps,
                           std::shared_ptr<const FeedbackLaw> law,
                           const std::vector<SaddleArm>& arms, const InitialLaw& init,
                           const Cone& cone1, const Cone& cone2, SimOptions opts) {
  for (const SaddleArm& a : arms) {
    if (a.player != 1 && a.player != 2)
      throw ArgumentError("verify_saddle: arm " + a.name + " has a bad player index");
    if (!a.policy.cone_valued(a.player == 1 ? cone1 : cone2))
      throw ArgumentError("verify_saddle: arm " + a.name + " is not cone-valued");
  }
  opts.reference.reset();
  const SimulationResult base = simulate_paths(
      coeffs, grid, jumps, Policy::feedback(law, 1), Policy::feedback(law, 2), init, opts);
  SaddleReport rep;
  rep.statistical = base.n_paths >= 2;
  rep.baseline_mean = base.mean;
  rep.baseline_std_error = base.std_error;
  const double floor = 1e-12 * (1.0 + std::abs(base.mean));

  opts.reference = law;
  const Policy replay1 = Policy::feedback(law, 1, 1.0, true);
  const Policy replay2 = Policy::feedback(law, 2, 1.0, true);
  for (const SaddleArm& a : arms) {
    const SimulationResult r =
        a.player == 1 ? simulate_paths(coeffs, grid, jumps, a.policy, replay2, init, opts)
                      : simulate_paths(coeffs, grid, jumps, replay1, a.policy, init, opts);
    const Estimate d = estimate(minus(r.cost, base.cost));
    ArmResult ar;
    ar.name = a.name;
    ar.player = a.player;
    ar.diff_mean = d.mean;
    ar.diff_std_error = d.std_error;
    const double slack = (rep.statistical ? 3.0 * d.std_error : 0.0) + floor;
    ar.pass = !rep.statistical || (a.player == 1 ? d.mean >= -slack : d.mean <= slack);
    rep.all_pass = rep.all_pass && ar.pass;
    rep.arms.push_back(std::move(ar));
  }
  return rep;
}

double psi_eval(double X, const Vector& u1, const Vector& u2, const PsiNode& node,
                const StepCoefficients& c, const JumpMeasure& jumps) {
  if (u1.size() != c.m1() || u2.size() != c.m2())
    throw ArgumentError("psi_eval: control dimension mismatch");
  if (c.marks() != jumps.size()) throw ArgumentError("psi_eval: mark count mismatch");
  const Snapshot& s = node.snapshot;
  const double ip = X > 0.0 ? 1.0 : 0.0;
  const double im = X <= 0.0 ? 1.0 : 0.0;
  const double Xp = pos(X), Xm = neg(X);
  const double Pw = ip * s.P1 + im * s.P2;
  const Matrix DD1 = c.D1 * c.D1.transpose();
  const Matrix DD2 = c.D2 * c.D2.transpose();
  const Matrix D12 = c.D1 * c.D2.transpose();

  double psi = u1.dot((c.R11 + ip * s.P1 * DD1 + im * s.P2 * DD1) * u1);
  psi += u2.dot((c.R22 + ip * s.P1 * DD2 + im * s.P2 * DD2) * u2);
  psi += 2.0 * u1.dot((Pw * D12 + c.R12) * u2);
  psi += 2.0 * ip * u1.dot(c.S1 + s.P1 * c.B1 + s.P1 * c.C * c.D1 + s.L1 * c.D1) * Xp;
  psi -= 2.0 * im * u1.dot(c.S1 + s.P2 * c.B1 + s.P2 * c.C * c.D1 + s.L2 * c.D1) * Xm;
  psi += 2.0 * ip * u2.dot(c.S2 + s.P1 * c.B2 + s.P1 * c.C * c.D2 + s.L1 * c.D2) * Xp;
  psi -= 2.0 * im * u2.dot(c.S2 + s.P2 * c.B2 + s.P2 * c.C * c.D2 + s.L2 * c.D2) * Xm;
  double comp = 0.0, up = 0.0, down = 0.0;
  for (int j = 0; j < jumps.size(); ++j) {
    const double nu = jumps.intensities[j];
    const double amt = c.E[j] * X + c.F1[j].dot(u1) + c.F2[j].dot(u2);
    comp += amt * nu;
    const double y = X + amt;
    up += (s.P1 + s.gamma1(j)) * (pos(y) * pos(y) - Xp * Xp) * nu;
    down += (s.P2 + s.gamma2(j)) * (neg(y) * neg(y) - Xm * Xm) * nu;
  }
  psi += (2.0 * s.P2 * im * Xm - 2.0 * s.P1 * ip * Xp) * comp;
  psi += up + down;
  psi -= node.H1 * Xp * Xp + node.H2 * Xm * Xm;
  return psi;
}

double psi_eval(int t_idx, double X, const Vector& u1, const Vector& u2,
                const RiccatiSolution& sol, const CoefficientSet& coeffs,
                const JumpMeasure& jumps) {
  if (t_idx < 0 || t_idx >= sol.n_nodes()) throw ArgumentError("psi_eval: node out of range");
  if (static_cast<int>(sol.saddle1.size()) != sol.n_nodes())
    throw ArgumentError("psi_eval: solution has no saddle cache");
  PsiNode node;
  node.snapshot = sol.snapshot(t_idx);
  node.H1 = sol.saddle1[t_idx].value;
  node.H2 = sol.saddle2[t_idx].value;
  return psi_eval(X, u1, u2, node, coeffs.at(std::min(t_idx, coeffs.n_steps() - 1)), jumps);
}

ConvexityReport verify_convexity_identity(const CoefficientSet& coeffs,
                                          const TimeGrid& grid, const JumpMeasure& jumps,
                                          const Policy& u1, const Policy& u1_prime,
                                          const Policy& u2, double lambda,
                                          const InitialLaw& init, const SimOptions& opts) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ArgumentError("verify_convexity_identity: lambda must lie in [0, 1]");
  if (opts.cone1 && (!u1.cone_valued(*opts.cone1) || !u1_prime.cone_valued(*opts.cone1)))
    throw ArgumentError("verify_convexity_identity: player-1 schedules must be cone-valued");
  if (opts.cone2 && !u2.cone_valued(*opts.cone2))
    throw ArgumentError("verify_convexity_identity: player-2 schedule must be cone-valued");
  SimOptions o = opts;
  o.cone1 = o.cone2 = nullptr;

  const Policy mix = lambda == 1.0   ? u1
                     : lambda == 0.0 ? u1_prime
                                     : Policy::perturbed(u1_prime, u1, lambda);
  const Policy diff = Policy::linear({{1.0, u1}, {-1.0, u1_prime}});
  const SimulationResult A = simulate_paths(coeffs, grid, jumps, mix, u2, init, o);
  const SimulationResult B = simulate_paths(coeffs, grid, jumps, u1, u2, init, o);
  const SimulationResult C = simulate_paths(coeffs, grid, jumps, u1_prime, u2, init, o);
  const SimulationResult D = simulate_paths(coeffs, grid, jumps, diff,
                                            Policy::zero(coeffs.m2()),
                                            InitialLaw(InitialLaw::Point{0.0}), o);
  std::vector<double> r(A.cost.size());
  const double w = lambda * (1.0 - lambda);
  for (std::size_t p = 0; p < r.size(); ++p)
    r[p] = (A.cost[p] - C.cost[p]) - lambda * (B.cost[p] - C.cost[p]) + w * D.cost[p];

  ConvexityReport rep;
  rep.statistical = A.n_paths >= 2;
  const Estimate e = estimate(r);
  rep.residual_mean = e.mean;
  rep.residual_std_error = e.std_error;
  rep.J_mix = A.mean;
  rep.J_u1 = B.mean;
  rep.J_u1p = C.mean;
  rep.J_tilde = D.mean;
  rep.energy = estimate(D.u1_energy).mean;
  rep.delta_hat = rep.energy > 0.0 ? rep.J_tilde / rep.energy : 0.0;
  const double floor =
      1e-10 * (1.0 + std::abs(A.mean) + std::abs(B.mean) + std::abs(C.mean) + std::abs(D.mean));
  const double se = rep.statistical ? e.std_error : 0.0;
  rep.pass = std::abs(e.mean) <= 3.0 * se + floor;
  return rep;
}

StationarityReport directional_stationarity(const CoefficientSet& coeffs,
                                            const TimeGrid& grid, const JumpMeasure& jumps,
                                            std::shared_ptr<const FeedbackLaw> law,
                                            const Policy& v1, const Policy& v2, double h,
                                            const InitialLaw& init, SimOptions opts) {
  if (!(h > 0.0 && h <= 1.0))
    throw ArgumentError("directional_stationarity: h must lie in (0, 1]");
  if (opts.cone1 && !v1.cone_valued(*opts.cone1))
    throw ArgumentError("directional_stationarity: v1 is not cone-valued");
  if (opts.cone2 && !v2.cone_valued(*opts.cone2))
    throw ArgumentError("directional_stationarity: v2 is not cone-valued");
  opts.reference = law;
  const Policy b1 = Policy::feedback(law, 1, 1.0, true);
  const Policy b2 = Policy::feedback(law, 2, 1.0, true);
  const SimulationResult base = simulate_paths(coeffs, grid, jumps, b1, b2, init, opts);
  const SimulationResult a1 =
      simulate_paths(coeffs, grid, jumps, Policy::perturbed(b1, v1, h), b2, init, opts);
  const SimulationResult a2 =
      simulate_paths(coeffs, grid, jumps, b1, Policy::perturbed(b2, v2, h), init, opts);
  const Estimate d1 = estimate(minus(a1.cost, base.cost));
  const Estimate d2 = estimate(minus(a2.cost, base.cost));
  StationarityReport r;
  r.statistical = base.n_paths >= 2;
  r.q1 = d1.mean / h;
  r.q1_std_error = d1.std_error / h;
  r.q2 = d2.mean / h;
  r.q2_std_error = d2.std_error / h;
  const double floor = 1e-10 * (1.0 + std::abs(base.mean)) / h;
  const double s1 = r.statistical ? 3.0 * r.q1_std_error : 0.0;
  const double s2 = r.statistical ? 3.0 * r.q2_std_error : 0.0;
  r.pass1 = r.q1 >= -s1 - floor;
  r.pass2 = r.q2 <= s2 + floor;
  return r;
}

}  // namespace conelq
