#include "conelq/hamiltonian.hpp"

#include "conelq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conelq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pos(double x) { return x > 0.0 ? x : 0.0; }
double neg(double x) { return x < 0.0 ? -x : 0.0; }

void check_player(int k) {
  if (k != 1 && k != 2) throw ArgumentError("player index must be 1 or 2");
}

void check_snapshot(const StepCoefficients& c, const Snapshot& s) {
  if (!std::isfinite(s.P1) || !std::isfinite(s.P2) || !std::isfinite(s.L1) ||
      !std::isfinite(s.L2))
    throw ArgumentError("snapshot: P and Lambda must be finite");
  const std::size_t J = c.E.size();
  if ((!s.G1.empty() && s.G1.size() != J) || (!s.G2.empty() && s.G2.size() != J))
    throw ArgumentError("snapshot: Gamma has the wrong number of marks");
  for (double g : s.G1)
    if (!std::isfinite(g)) throw ArgumentError("snapshot: Gamma1 not finite");
  for (double g : s.G2)
    if (!std::isfinite(g)) throw ArgumentError("snapshot: Gamma2 not finite");
}

void check_jumps(const StepCoefficients& c, const JumpMeasure& jumps) {
  if (c.marks() != jumps.size())
    throw ArgumentError("coefficients and jump measure disagree on the mark count");
}

double max_abs_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Block structure of the feasible set: cone ∩ ball per player.
struct Feasible {
  const Cone& c1;
  const Cone& c2;
  double r1, r2;
  int n1, n2;

  Vector project(const Vector& z) const {
    Vector out(n1 + n2);
    out.head(n1) = project_cone_ball(c1, z.head(n1), r1);
    out.tail(n2) = project_cone_ball(c2, z.tail(n2), r2);
    return out;
  }
};

// Monotone operator of the saddle problem: descent for block 1, ascent for 2.
Vector field(const PiecewiseQuadratic& q, const Vector& z) {
  Vector F = q.gradient(z);
  F.tail(q.n2) *= -1.0;
  return F;
}

class SaddleSolver {
 public:
  SaddleSolver(const PiecewiseQuadratic& q, const Feasible& set, double tol)
      : q_(q), set_(set), tol_(tol) {
    L_ = std::max(q.lipschitz(), 1e-12);
  }

  double residual(const Vector& z) const {
    const Vector step = set_.project(z - field(q_, z) / L_);
    return L_ * (z - step).norm() / scale(z);
  }

  bool converged(const Vector& z) const { return residual(z) <= tol_; }

  // Face-restricted Newton: identify the active face, ball activity and
  // kink pattern from a projected gradient step, then solve the piecewise
  // linear stationarity system on that face exactly.
  std::optional<Vector> polish(Vector z, int rounds, int* count) const {
    for (int r = 0; r < rounds; ++r) {
      ++*count;
      const Vector raw = z - field(q_, z) / L_;
      const Vector w = set_.project(raw);
      Vector cand;
      if (!face_solve(raw, w, &cand)) return std::nullopt;
      if (cand.allFinite()) {
        const Vector feas = set_.project(cand);
        if ((feas - cand).norm() <= 1e-12 * (1.0 + cand.norm()) && converged(feas))
          return feas;
        if ((feas - z).norm() <= 1e-15 * (1.0 + z.norm())) return std::nullopt;
        z = feas;
      } else {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  double lipschitz() const { return L_; }

 private:
  double scale(const Vector& z) const {
    return std::max(1.0, L_ * std::max(1.0, z.norm()));
  }

  bool face_solve(const Vector& raw, const Vector& w, Vector* out) const {
    const int n1 = q_.n1, n2 = q_.n2;
    Matrix U1 = basis(set_.c1, raw.head(n1), set_.r1);
    Matrix U2 = basis(set_.c2, raw.tail(n2), set_.r2);
    const bool ball1 = ball_active(set_.c1, raw.head(n1), set_.r1) && U1.cols() > 0;
    const bool ball2 = ball_active(set_.c2, raw.tail(n2), set_.r2) && U2.cols() > 0;

    const Eigen::Index d1 = U1.cols(), d2 = U2.cols();
    Matrix U = Matrix::Zero(n1 + n2, d1 + d2);
    U.topLeftCorner(n1, d1) = U1;
    U.bottomRightCorner(n2, d2) = U2;
    const Matrix Hs = q_.piece_hessian(w);
    const Vector bs = q_.piece_offset(w);
    const Matrix K = U.transpose() * Hs * U;
    const Vector rhs = -(U.transpose() * bs);

    auto solve = [&](double mu1, double mu2) -> Vector {
      Matrix A = K;
      for (Eigen::Index i = 0; i < d1; ++i) A(i, i) += mu1;
      for (Eigen::Index i = 0; i < d2; ++i) A(d1 + i, d1 + i) -= mu2;
      return A.fullPivLu().solve(rhs);
    };
    auto norm1 = [&](const Vector& a) { return a.head(d1).norm(); };
    auto norm2 = [&](const Vector& a) { return a.tail(d2).norm(); };

    // Secular equation |alpha_b(mu)| = r_b, solved by bracketing + bisection.
    auto find_mu = [&](auto&& nrm, double radius, auto&& at) -> double {
      if (nrm(at(0.0)) <= radius) return 0.0;
      double hi = 1.0;
      for (int i = 0; i < 200 && nrm(at(hi)) > radius; ++i) hi *= 2.0;
      double lo = 0.0;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (nrm(at(mid)) > radius) lo = mid; else hi = mid;
        if (hi - lo <= 1e-15 * hi) break;
      }
      return hi;
    };

    Vector alpha;
    if (!ball1 && !ball2) {
      alpha = solve(0.0, 0.0);
    } else if (ball1 && !ball2) {
      const double mu = find_mu(norm1, set_.r1, [&](double m) { return solve(m, 0.0); });
      alpha = solve(mu, 0.0);
    } else if (!ball1 && ball2) {
      const double mu = find_mu(norm2, set_.r2, [&](double m) { return solve(0.0, m); });
      alpha = solve(0.0, mu);
    } else {
      auto inner = [&](double m1) {
        const double m2 = find_mu(norm2, set_.r2, [&](double m) { return solve(m1, m); });
        return solve(m1, m2);
      };
      const double mu1 = find_mu(norm1, set_.r1, inner);
      alpha = inner(mu1);
    }
    *out = U * alpha;
    return true;
  }

  static bool ball_active(const Cone& c, const Vector& raw, double r) {
    if (std::isinf(r)) return false;
    return c.project(raw).norm() >= r * (1.0 - 1e-12);
  }

  static Matrix basis(const Cone& c, const Vector& raw, double r) {
    if (r == 0.0 || raw.size() == 0) return Matrix(raw.size(), 0);
    return c.face_basis(raw);
  }

  const PiecewiseQuadratic& q_;
  const Feasible& set_;
  double tol_;
  double L_;
};

}  // namespace

HamiltonianTerms build_terms(const StepCoefficients& c, const Snapshot& s) {
  check_snapshot(c, s);
  HamiltonianTerms t;
  t.t_idx = s.t_idx;
  t.snapshot = s;
  const Matrix DD1 = c.D1 * c.D1.transpose();
  const Matrix DD2 = c.D2 * c.D2.transpose();
  const Matrix D12 = c.D1 * c.D2.transpose();
  t.M11 = c.R11 + s.P1 * DD1;
  t.M12 = c.R11 + s.P2 * DD1;
  t.M21 = c.R22 + s.P1 * DD2;
  t.M22 = c.R22 + s.P2 * DD2;
  t.N11 = c.S1 + s.P1 * c.B1 + s.P1 * c.C * c.D1 + s.L1 * c.D1;
  t.N12 = c.S1 + s.P2 * c.B1 + s.P2 * c.C * c.D1 + s.L2 * c.D1;
  t.N21 = c.S2 + s.P1 * c.B2 + s.P1 * c.C * c.D2 + s.L1 * c.D2;
  t.N22 = c.S2 + s.P2 * c.B2 + s.P2 * c.C * c.D2 + s.L2 * c.D2;
  t.X1 = s.P1 * D12 + c.R12;
  t.X2 = s.P2 * D12 + c.R12;
  return t;
}

HamiltonianTerms build_terms(int t_idx, const CoefficientSet& coeffs, double P1,
                             double P2, double L1, double L2) {
  if (t_idx < 0 || t_idx > coeffs.n_steps())
    throw ArgumentError("build_terms: time index out of range");
  Snapshot s;
  s.t_idx = t_idx;
  s.P1 = P1;
  s.P2 = P2;
  s.L1 = L1;
  s.L2 = L2;
  return build_terms(coeffs.at(std::min(t_idx, coeffs.n_steps() - 1)), s);
}

double eval_H_under(int k, const Vector& v1, const Vector& v2,
                    const HamiltonianTerms& terms, const StepCoefficients& c,
                    const JumpMeasure& jumps) {
  check_player(k);
  check_jumps(c, jumps);
  if (v1.size() != c.m1() || v2.size() != c.m2())
    throw ArgumentError("eval_H_under: control dimension mismatch");
  const Snapshot& s = terms.snapshot;
  double h = 0.0;
  if (k == 1) {
    h = v1.dot(terms.M11 * v1) + 2.0 * terms.N11.dot(v1) + 2.0 * v1.dot(terms.X1 * v2);
  } else {
    h = v1.dot(terms.M12 * v1) - 2.0 * terms.N12.dot(v1) + 2.0 * v1.dot(terms.X2 * v2);
  }
  for (int j = 0; j < jumps.size(); ++j) {
    const double fv = c.F1[j].dot(v1) + c.F2[j].dot(v2);
    const double w1 = s.P1 + s.gamma1(j);
    const double w2 = s.P2 + s.gamma2(j);
    double term = 0.0;
    if (k == 1) {
      const double y = 1.0 + c.E[j] + fv;
      term = w1 * (pos(y) * pos(y) - 1.0) - 2.0 * s.P1 * (c.E[j] + fv) +
             w2 * neg(y) * neg(y);
    } else {
      const double y = -1.0 - c.E[j] + fv;
      term = w2 * (neg(y) * neg(y) - 1.0) + 2.0 * s.P2 * (-c.E[j] + fv) +
             w1 * pos(y) * pos(y);
    }
    h += jumps.intensities[j] * term;
  }
  return h;
}

double eval_H_bar(int k, const Vector& v2, const HamiltonianTerms& terms) {
  check_player(k);
  if (v2.size() != terms.M21.rows())
    throw ArgumentError("eval_H_bar: control dimension mismatch");
  if (k == 1) return v2.dot(terms.M21 * v2) + 2.0 * terms.N21.dot(v2);
  return v2.dot(terms.M22 * v2) - 2.0 * terms.N22.dot(v2);
}

double PiecewiseQuadratic::value(const Vector& z) const {
  double v = z.dot(H * z) + 2.0 * g.dot(z) + constant;
  for (const Kink& k : kinks) {
    const double y = k.a + k.f.dot(z);
    v += k.nu * (k.wp * pos(y) * pos(y) + k.wm * neg(y) * neg(y) + k.slope * y + k.offset);
  }
  return v;
}

Vector PiecewiseQuadratic::gradient(const Vector& z) const {
  Vector d = 2.0 * (H * z + g);
  for (const Kink& k : kinks) {
    const double y = k.a + k.f.dot(z);
    d += k.nu * (2.0 * k.wp * pos(y) - 2.0 * k.wm * neg(y) + k.slope) * k.f;
  }
  return d;
}

Matrix PiecewiseQuadratic::piece_hessian(const Vector& z) const {
  Matrix h = 2.0 * H;
  for (const Kink& k : kinks) {
    const double y = k.a + k.f.dot(z);
    h += 2.0 * k.nu * (y >= 0.0 ? k.wp : k.wm) * k.f * k.f.transpose();
  }
  return h;
}

Vector PiecewiseQuadratic::piece_offset(const Vector& z) const {
  Vector b = 2.0 * g;
  for (const Kink& k : kinks) {
    const double y = k.a + k.f.dot(z);
    const double w = y >= 0.0 ? k.wp : k.wm;
    b += k.nu * (2.0 * w * k.a + k.slope) * k.f;
  }
  return b;
}

double PiecewiseQuadratic::min_block_curvature() const {
  if (n1 == 0) return kInf;
  Matrix m = H.topLeftCorner(n1, n1);
  for (const Kink& k : kinks)
    m += k.nu * std::min(k.wp, k.wm) * k.f.head(n1) * k.f.head(n1).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double PiecewiseQuadratic::max_block_curvature() const {
  if (n2 == 0) return -kInf;
  Matrix m = H.bottomRightCorner(n2, n2);
  for (const Kink& k : kinks)
    m += k.nu * std::max(k.wp, k.wm) * k.f.tail(n2) * k.f.tail(n2).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double PiecewiseQuadratic::lipschitz() const {
  double l = max_abs_eigenvalue(H);
  for (const Kink& k : kinks)
    l += k.nu * std::max(std::abs(k.wp), std::abs(k.wm)) * k.f.squaredNorm();
  return 2.0 * l;
}

PiecewiseQuadratic hamiltonian_objective(int k, const StepCoefficients& c,
                                         const JumpMeasure& jumps,
                                         const Snapshot& s) {
  check_player(k);
  check_jumps(c, jumps);
  const HamiltonianTerms t = build_terms(c, s);
  const int m1 = c.m1(), m2 = c.m2();
  PiecewiseQuadratic q;
  q.n1 = m1;
  q.n2 = m2;
  q.H.resize(m1 + m2, m1 + m2);
  q.g.resize(m1 + m2);
  if (k == 1) {
    q.H << t.M11, t.X1, t.X1.transpose(), t.M21;
    q.g << t.N11, t.N21;
  } else {
    q.H << t.M12, t.X2, t.X2.transpose(), t.M22;
    q.g << -t.N12, -t.N22;
  }
  for (int j = 0; j < jumps.size(); ++j) {
    PiecewiseQuadratic::Kink kink;
    kink.nu = jumps.intensities[j];
    kink.wp = s.P1 + s.gamma1(j);
    kink.wm = s.P2 + s.gamma2(j);
    kink.f.resize(m1 + m2);
    kink.f << c.F1[j], c.F2[j];
    if (k == 1) {
      kink.a = 1.0 + c.E[j];
      kink.slope = -2.0 * s.P1;
      kink.offset = -kink.wp + 2.0 * s.P1;
    } else {
      kink.a = -1.0 - c.E[j];
      kink.slope = 2.0 * s.P2;
      kink.offset = -kink.wm + 2.0 * s.P2;
    }
    q.kinks.push_back(std::move(kink));
  }
  return q;
}

std::string to_string(SaddleMethod m) {
  switch (m) {
    case SaddleMethod::analytic:
      return "analytic";
    case SaddleMethod::extragradient:
      return "extragradient";
    case SaddleMethod::grid_oracle:
      return "grid-oracle";
  }
  return "unknown";
}

SaddleResult solve_piecewise_saddle(const PiecewiseQuadratic& q,
                                    const Cone& cone1, const Cone& cone2,
                                    double r1, double r2, double tol,
                                    int max_iter, const Vector* warm) {
  if (cone1.dim() != q.n1 || cone2.dim() != q.n2)
    throw ArgumentError("saddle: cone dimension does not match the control dimension");
  const Feasible set{cone1, cone2, r1, r2, q.n1, q.n2};
  SaddleSolver solver(q, set, tol);

  SaddleResult res;
  res.method = SaddleMethod::analytic;
  auto finish = [&](const Vector& z) {
    res.v1 = z.head(q.n1);
    res.v2 = z.tail(q.n2);
    res.value = q.value(z);
    res.residual = solver.residual(z);
    if (!std::isfinite(res.value)) throw NumericError("saddle: non-finite value");
    return res;
  };

  Vector z = Vector::Zero(q.size());
  if (warm && warm->size() == q.size() && warm->allFinite()) z = set.project(*warm);
  if (q.size() == 0) return finish(z);

  int count = 0;
  if (auto p = solver.polish(z, 30, &count)) {
    res.iterations = count;
    return finish(*p);
  }

  // Extragradient fallback with periodic face-Newton polishing.
  res.method = SaddleMethod::extragradient;
  const double eta = 0.5 / solver.lipschitz();
  for (int it = 1; it <= max_iter; ++it) {
    const Vector half = set.project(z - eta * field(q, z));
    z = set.project(z - eta * field(q, half));
    if (it % 25 == 0) {
      int extra = 0;
      if (auto p = solver.polish(z, 5, &extra)) {
        res.iterations = it + count + extra;
        return finish(*p);
      }
      if (solver.converged(z)) {
        res.iterations = it + count;
        return finish(z);
      }
    }
  }
  throw ConvergenceError("saddle: extragradient hit the iteration cap of " +
                             std::to_string(max_iter),
                         solver.residual(z));
}

namespace {

void check_curvature(const PiecewiseQuadratic& q, double r1, double r2) {
  const double eps = 1e-12 * (1.0 + max_abs_eigenvalue(q.H));
  if (r1 > 0.0) {
    const double lo = q.min_block_curvature();
    if (!(lo > eps))
      throw CurvatureError("saddle: convexity in v1 fails (smallest curvature " +
                           std::to_string(lo) + ")");
  }
  if (r2 > 0.0) {
    const double hi = q.max_block_curvature();
    if (!(hi < -eps))
      throw CurvatureError("saddle: concavity in v2 fails (largest curvature " +
                           std::to_string(hi) + ")");
  }
}

// The q restricted to one block with the other block frozen at zero.
PiecewiseQuadratic block_part(const PiecewiseQuadratic& q, bool first) {
  PiecewiseQuadratic b;
  if (first) {
    b.n1 = q.n1;
    b.H = q.H.topLeftCorner(q.n1, q.n1);
    b.g = q.g.head(q.n1);
    b.constant = q.constant;
    for (const auto& k : q.kinks) {
      auto kk = k;
      kk.f = k.f.head(q.n1);
      b.kinks.push_back(std::move(kk));
    }
  } else {
    // The maximizing part is posed as a maximization in the second block.
    b.n2 = q.n2;
    b.H = q.H.bottomRightCorner(q.n2, q.n2);
    b.g = q.g.tail(q.n2);
  }
  return b;
}

}  // namespace

InnerResult inner_min(int k, const Vector& v2, const StepCoefficients& c,
                      const JumpMeasure& jumps, const Snapshot& s,
                      const Cone& cone1, std::optional<double> radius,
                      double tol) {
  check_player(k);
  if (v2.size() != c.m2()) throw ArgumentError("inner_min: v2 dimension mismatch");
  if (radius && !(*radius >= 0.0))
    throw ArgumentError("inner_min: truncation radius must be nonnegative");
  const HamiltonianTerms t = build_terms(c, s);
  const PiecewiseQuadratic full = hamiltonian_objective(k, c, jumps, s);
  PiecewiseQuadratic q;
  const int m1 = c.m1();
  q.n1 = m1;
  q.H = full.H.topLeftCorner(m1, m1);
  q.g = full.g.head(m1) + full.H.topRightCorner(m1, c.m2()) * v2;
  for (const auto& kk : full.kinks) {
    auto kn = kk;
    kn.a = kk.a + kk.f.tail(c.m2()).dot(v2);
    kn.f = kk.f.head(m1);
    q.kinks.push_back(std::move(kn));
  }
  const double r = radius.value_or(kInf);
  check_curvature(q, r, 0.0);
  const Cone none = Cone::full(0);
  const SaddleResult sr = solve_piecewise_saddle(q, cone1, none, r, 0.0, tol, 100000, nullptr);
  InnerResult out;
  out.v1 = sr.v1;
  out.value = eval_H_under(k, sr.v1, v2, t, c, jumps);
  out.residual = sr.residual;
  return out;
}

SaddleResult saddle(int k, const StepCoefficients& c, const JumpMeasure& jumps,
                    const Snapshot& s, const Cone& cone1, const Cone& cone2,
                    const SaddleOptions& opts, const SaddleResult* warm) {
  const PiecewiseQuadratic q = hamiltonian_objective(k, c, jumps, s);
  const double r1 = opts.trunc ? opts.trunc->n : kInf;
  const double r2 = opts.trunc ? opts.trunc->n_bar : kInf;
  if (!(r1 >= 0.0) || !(r2 >= 0.0))
    throw ArgumentError("saddle: truncation radii must be nonnegative");
  if (opts.check_curvature) check_curvature(q, r1, r2);

  Vector w;
  const Vector* wp = nullptr;
  if (warm && warm->v1.size() == c.m1() && warm->v2.size() == c.m2()) {
    w.resize(c.m1() + c.m2());
    w << warm->v1, warm->v2;
    wp = &w;
  }

  if (!block_decouples(c))
    return solve_piecewise_saddle(q, cone1, cone2, r1, r2, opts.tol, opts.max_iter, wp);

  // Decoupled structure: min over v1 and max over v2 separate exactly.
  const Cone none = Cone::full(0);
  const PiecewiseQuadratic q1 = block_part(q, true);
  const PiecewiseQuadratic q2 = block_part(q, false);
  Vector w1, w2;
  if (wp) {
    w1 = warm->v1;
    w2 = warm->v2;
  }
  const SaddleResult a = solve_piecewise_saddle(q1, cone1, none, r1, 0.0, opts.tol,
                                                opts.max_iter, wp ? &w1 : nullptr);
  const SaddleResult b = solve_piecewise_saddle(q2, none, cone2, 0.0, r2, opts.tol,
                                                opts.max_iter, wp ? &w2 : nullptr);
  SaddleResult out;
  out.v1 = a.v1;
  out.v2 = b.v2;
  Vector z(c.m1() + c.m2());
  z << out.v1, out.v2;
  out.value = q.value(z);
  out.iterations = a.iterations + b.iterations;
  out.residual = std::max(a.residual, b.residual);
  out.method = (a.method == SaddleMethod::analytic && b.method == SaddleMethod::analytic)
                   ? SaddleMethod::analytic
                   : SaddleMethod::extragradient;
  return out;
}

GridOracleResult grid_oracle_saddle(int k, const StepCoefficients& c,
                                    const JumpMeasure& jumps, const Snapshot& s,
                                    const Cone& cone1, const Cone& cone2,
                                    double radius, double step) {
  const int m1 = c.m1(), m2 = c.m2();
  if (m1 + m2 > 4) throw ArgumentError("grid oracle: m1 + m2 must be at most 4");
  if (!(step > 0.0) || !(radius >= 0.0) || !std::isfinite(radius))
    throw ArgumentError("grid oracle: need step > 0 and a finite radius >= 0");
  if (cone1.dim() != m1 || cone2.dim() != m2)
    throw ArgumentError("grid oracle: cone dimension mismatch");
  const PiecewiseQuadratic q = hamiltonian_objective(k, c, jumps, s);

  const long long half = static_cast<long long>(std::floor(radius / step + 1e-9));
  auto points = [&](const Cone& cone, int m) {
    std::vector<Vector> pts;
    const long long side = 2 * half + 1;
    long long total = 1;
    for (int d = 0; d < m; ++d) total *= side;
    Vector p(m);
    for (long long idx = 0; idx < total; ++idx) {
      long long r = idx;
      for (int d = 0; d < m; ++d) {
        p[d] = static_cast<double>(r % side - half) * step;
        r /= side;
      }
      if (p.norm() <= radius * (1.0 + 1e-12) && cone.contains(p, 1e-12)) pts.push_back(p);
    }
    return pts;
  };
  const std::vector<Vector> p1 = points(cone1, m1);
  const std::vector<Vector> p2 = points(cone2, m2);
  const long long evals = static_cast<long long>(p1.size()) * static_cast<long long>(p2.size());
  if (evals > 20'000'000'000LL) throw ArgumentError("grid oracle: grid too fine");

  const int J = static_cast<int>(q.kinks.size());
  const Matrix H11 = q.H.topLeftCorner(m1, m1), H22 = q.H.bottomRightCorner(m2, m2);
  const Matrix H12 = q.H.topRightCorner(m1, m2);
  const Vector g1 = q.g.head(m1), g2 = q.g.tail(m2);
  const std::size_t N1 = p1.size(), N2 = p2.size();
  std::vector<double> quad1(N1), quad2(N2), cross(N1 * m2), s1(N1 * J), s2(N2 * J);
  for (std::size_t i = 0; i < N1; ++i) {
    quad1[i] = p1[i].dot(H11 * p1[i]) + 2.0 * g1.dot(p1[i]);
    const Vector cv = H12.transpose() * p1[i];
    for (int d = 0; d < m2; ++d) cross[i * m2 + d] = cv[d];
    for (int j = 0; j < J; ++j) s1[i * J + j] = q.kinks[j].f.head(m1).dot(p1[i]);
  }
  for (std::size_t l = 0; l < N2; ++l) {
    quad2[l] = p2[l].dot(H22 * p2[l]) + 2.0 * g2.dot(p2[l]);
    for (int j = 0; j < J; ++j) s2[l * J + j] = q.kinks[j].f.tail(m2).dot(p2[l]) + q.kinks[j].a;
  }

  std::vector<double> colmax(N1, -kInf);
  double best = -kInf;
  std::size_t best_l = 0, best_i = 0;
  for (std::size_t l = 0; l < N2; ++l) {
    double rowmin = kInf;
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < N1; ++i) {
      double h = quad1[i] + quad2[l];
      for (int d = 0; d < m2; ++d) h += 2.0 * cross[i * m2 + d] * p2[l][d];
      for (int j = 0; j < J; ++j) {
        const auto& kk = q.kinks[j];
        const double y = s1[i * J + j] + s2[l * J + j];
        h += kk.nu * (kk.wp * pos(y) * pos(y) + kk.wm * neg(y) * neg(y) + kk.slope * y + kk.offset);
      }
      if (h < rowmin) {
        rowmin = h;
        argmin = i;
      }
      if (h > colmax[i]) colmax[i] = h;
    }
    if (rowmin > best) {
      best = rowmin;
      best_l = l;
      best_i = argmin;
    }
  }
  GridOracleResult out;
  out.max_min.v1 = p1[best_i];
  out.max_min.v2 = p2[best_l];
  out.max_min.value = best + q.constant;
  out.max_min.method = SaddleMethod::grid_oracle;
  out.max_min.iterations = static_cast<int>(std::min<long long>(evals, std::numeric_limits<int>::max()));
  out.min_max = *std::min_element(colmax.begin(), colmax.end()) + q.constant;
  out.evaluations = evals;
  return out;
}

}  // namespace conelq
