#include "conelq/model.hpp"

#include "conelq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conelq {

namespace {

// Positive floor for constants that must be strictly positive.
constexpr double kPositiveFloor = 1e-12;

bool finite(const Vector& v) { return v.allFinite(); }
bool finite(const Matrix& m) { return m.allFinite(); }

double max_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool symmetric(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <=
         1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
}

Matrix diffusion_gram(const Vector& D, const std::vector<Vector>& F,
                      const JumpMeasure& jumps) {
  Matrix g = D * D.transpose();
  for (int j = 0; j < jumps.size(); ++j)
    g += jumps.intensities[j] * F[j] * F[j].transpose();
  return g;
}

}  // namespace

TimeGrid::TimeGrid(double horizon, int n_steps)
    : horizon_(horizon), n_steps_(n_steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ArgumentError("time grid: horizon must be positive and finite");
  if (n_steps < 1) throw ArgumentError("time grid: n_steps must be >= 1");
}

JumpMeasure::JumpMeasure(std::vector<double> nu) : intensities(std::move(nu)) {
  for (double v : intensities)
    if (!(v > 0.0) || !std::isfinite(v))
      throw ArgumentError("jump measure: intensities must be positive and finite");
}

double JumpMeasure::total() const noexcept {
  double s = 0.0;
  for (double v : intensities) s += v;
  return s;
}

StepCoefficients StepCoefficients::zeros(int m1, int m2, int marks) {
  StepCoefficients c;
  c.B1 = c.D1 = c.S1 = Vector::Zero(m1);
  c.B2 = c.D2 = c.S2 = Vector::Zero(m2);
  c.R11 = Matrix::Zero(m1, m1);
  c.R12 = Matrix::Zero(m1, m2);
  c.R22 = Matrix::Zero(m2, m2);
  c.E.assign(marks, 0.0);
  c.F1.assign(marks, Vector::Zero(m1));
  c.F2.assign(marks, Vector::Zero(m2));
  return c;
}

CoefficientSet::CoefficientSet(std::vector<StepCoefficients> steps,
                               double terminal_weight)
    : steps_(std::move(steps)), G_(terminal_weight) {
  if (steps_.empty())
    throw ValidationError("coefficients: at least one grid step is required");
  m1_ = steps_.front().m1();
  m2_ = steps_.front().m2();
  marks_ = steps_.front().marks();
  for (std::size_t i = 0; i < steps_.size(); ++i)
    check_block(steps_[i], ("step " + std::to_string(i)).c_str());
  if (!std::isfinite(G_)) throw ValidationError("coefficients: G is not finite");
}

void CoefficientSet::check_block(const StepCoefficients& c,
                                 const char* where) const {
  const std::string at = std::string(" at ") + where;
  if (c.m1() != m1_ || c.D1.size() != m1_ || c.S1.size() != m1_)
    throw ValidationError("coefficients: player-1 dimension mismatch" + at);
  if (c.m2() != m2_ || c.D2.size() != m2_ || c.S2.size() != m2_)
    throw ValidationError("coefficients: player-2 dimension mismatch" + at);
  if (c.R11.rows() != m1_ || c.R11.cols() != m1_ || c.R12.rows() != m1_ ||
      c.R12.cols() != m2_ || c.R22.rows() != m2_ || c.R22.cols() != m2_)
    throw ValidationError("coefficients: R block dimension mismatch" + at);
  if (c.marks() != marks_ || static_cast<int>(c.F1.size()) != marks_ ||
      static_cast<int>(c.F2.size()) != marks_)
    throw ValidationError("coefficients: mark count mismatch" + at);
  for (int j = 0; j < marks_; ++j)
    if (c.F1[j].size() != m1_ || c.F2[j].size() != m2_)
      throw ValidationError("coefficients: F dimension mismatch" + at);

  bool ok = std::isfinite(c.A) && std::isfinite(c.C) && std::isfinite(c.Q) &&
            finite(c.B1) && finite(c.B2) && finite(c.D1) && finite(c.D2) &&
            finite(c.S1) && finite(c.S2) && finite(c.R11) && finite(c.R12) &&
            finite(c.R22);
  for (int j = 0; j < marks_; ++j)
    ok = ok && std::isfinite(c.E[j]) && finite(c.F1[j]) && finite(c.F2[j]);
  if (!ok) throw ValidationError("coefficients: non-finite entry" + at);
  if (!symmetric(c.R11) || !symmetric(c.R22))
    throw ValidationError("coefficients: R11 and R22 must be symmetric" + at);
}

const StepCoefficients& CoefficientSet::at(int step) const {
  if (step < 0 || step >= n_steps())
    throw ArgumentError("coefficients: step index out of range");
  return steps_[step];
}

const StepCoefficients& CoefficientSet::at(const NodeKey& node) const {
  if (auto it = node_overrides_.find(node); it != node_overrides_.end())
    return it->second;
  return at(node.step);
}

double CoefficientSet::terminal(const NodeKey& node) const {
  if (auto it = terminal_overrides_.find(node); it != terminal_overrides_.end())
    return it->second;
  return G_;
}

CoefficientSet CoefficientSet::with_overrides(
    std::map<NodeKey, StepCoefficients> nodes,
    std::map<NodeKey, double> terminals) const {
  CoefficientSet out = *this;
  for (const auto& [key, block] : nodes) {
    if (key.step < 0 || key.step >= n_steps())
      throw ArgumentError("coefficients: override step out of range");
    out.check_block(block, ("node override at step " + std::to_string(key.step)).c_str());
  }
  for (const auto& [key, g] : terminals) {
    if (key.step != n_steps())
      throw ArgumentError("coefficients: terminal override must sit on the last layer");
    if (!std::isfinite(g)) throw ValidationError("coefficients: terminal override not finite");
  }
  out.node_overrides_ = std::move(nodes);
  out.terminal_overrides_ = std::move(terminals);
  return out;
}

InitialLaw::InitialLaw(Normal n) : law_(n) {
  if (!(n.stddev >= 0.0) || !std::isfinite(n.mean) || !std::isfinite(n.stddev))
    throw ArgumentError("initial law: normal needs finite mean and stddev >= 0");
}

InitialLaw::InitialLaw(Uniform u) : law_(u) {
  if (!(u.lo <= u.hi) || !std::isfinite(u.lo) || !std::isfinite(u.hi))
    throw ArgumentError("initial law: uniform needs finite lo <= hi");
}

double InitialLaw::point() const {
  if (!is_point()) throw ArgumentError("initial law is not a point mass");
  return std::get<Point>(law_).x0;
}

double InitialLaw::sample(std::mt19937_64& rng) const {
  return std::visit(
      [&](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Point>) {
          return l.x0;
        } else if constexpr (std::is_same_v<L, Normal>) {
          std::normal_distribution<double> d(l.mean, l.stddev);
          return d(rng);
        } else {
          std::uniform_real_distribution<double> d(l.lo, l.hi);
          return d(rng);
        }
      },
      law_);
}

double bound_K(double c_bar, double horizon) {
  return (c_bar + 1.0) * std::exp(2.0 * c_bar * horizon);
}

double bound_delta_bar(double c_bar, double horizon) {
  return (c_bar + 1.0) * (c_bar + 1.0) * std::exp(4.0 * c_bar * horizon) *
         (std::exp(2.0 * c_bar * horizon) - 1.0);
}

bool block_decouples(const StepCoefficients& c) {
  for (const auto& f : c.F2)
    if (!f.isZero(0.0)) return false;
  const bool d_orth = c.D1.isZero(0.0) || c.D2.isZero(0.0);
  return c.R12.isZero(0.0) && d_orth;
}

void check_compatible(const CoefficientSet& coeffs, const TimeGrid& grid,
                      const JumpMeasure& jumps) {
  if (coeffs.n_steps() != grid.n_steps())
    throw ArgumentError("coefficients have " + std::to_string(coeffs.n_steps()) +
                        " steps but the grid has " +
                        std::to_string(grid.n_steps()));
  if (coeffs.marks() != jumps.size())
    throw ArgumentError("coefficients carry " + std::to_string(coeffs.marks()) +
                        " marks but the jump measure has " +
                        std::to_string(jumps.size()));
}

AssumptionReport validate_coefficients(const CoefficientSet& coeffs,
                                       const TimeGrid& grid,
                                       const JumpMeasure& jumps,
                                       double delta_lower) {
  if (!(delta_lower > 0.0) || !std::isfinite(delta_lower))
    throw ArgumentError("validate_coefficients: delta_lower must be positive");
  check_compatible(coeffs, grid, jumps);

  std::vector<const StepCoefficients*> blocks;
  for (const auto& s : coeffs.steps()) blocks.push_back(&s);
  for (const auto& [key, s] : coeffs.node_overrides()) blocks.push_back(&s);
  std::vector<double> terminals{coeffs.terminal()};
  for (const auto& [key, g] : coeffs.terminal_overrides()) terminals.push_back(g);

  AssumptionReport r;
  r.delta_lower = delta_lower;
  r.q_nonnegative = r.r11_above_delta = true;
  r.diffusion1_nondegenerate = r.diffusion2_nondegenerate = true;
  r.f2_zero = r.s1_zero = r.s2_zero = r.r12_zero = r.d1d2_zero = true;

  double c_bar = -std::numeric_limits<double>::infinity();
  double worst_lower = std::numeric_limits<double>::infinity();
  double max_r22 = -std::numeric_limits<double>::infinity();
  const int J = jumps.size();

  for (const StepCoefficients* b : blocks) {
    const StepCoefficients& c = *b;
    double e2 = 0.0;
    Vector ef1 = Vector::Zero(c.m1());
    for (int j = 0; j < J; ++j) {
      e2 += c.E[j] * c.E[j] * jumps.intensities[j];
      ef1 += c.E[j] * jumps.intensities[j] * c.F1[j];
    }
    const Matrix g1 = diffusion_gram(c.D1, c.F1, jumps);
    const Matrix g2 = diffusion_gram(c.D2, c.F2, jumps);

    c_bar = std::max({c_bar, 2.0 * c.A + c.C * c.C, e2,
                      (c.B1 + c.D1 * c.C).squaredNorm(),
                      (c.B2 + c.D2 * c.C).squaredNorm(), max_eigenvalue(g1),
                      max_eigenvalue(g2), c.Q});

    const double drift = 2.0 * c.A + c.C * c.C + e2 -
                         delta_lower * (c.B1 + c.D1 * c.C + ef1).squaredNorm();
    worst_lower = std::min(worst_lower, drift);

    r.r11_above_delta = r.r11_above_delta && min_eigenvalue(c.R11) > delta_lower;
    max_r22 = std::max(max_r22, max_eigenvalue(c.R22));
    r.q_nonnegative = r.q_nonnegative && c.Q >= 0.0;
    r.diffusion1_nondegenerate =
        r.diffusion1_nondegenerate && min_eigenvalue(g1) >= delta_lower;
    r.diffusion2_nondegenerate =
        r.diffusion2_nondegenerate && min_eigenvalue(g2) >= delta_lower;

    for (const auto& f : c.F2) r.f2_zero = r.f2_zero && f.isZero(0.0);
    r.s1_zero = r.s1_zero && c.S1.isZero(0.0);
    r.s2_zero = r.s2_zero && c.S2.isZero(0.0);
    r.r12_zero = r.r12_zero && c.R12.isZero(0.0);
    r.d1d2_zero = r.d1d2_zero && (c.D1.isZero(0.0) || c.D2.isZero(0.0));
  }
  r.g_above_delta = true;
  for (double g : terminals) {
    c_bar = std::max(c_bar, g);
    r.g_above_delta = r.g_above_delta && g >= delta_lower;
  }

  r.c_bar = std::max(c_bar, kPositiveFloor);
  r.c_lower1 = std::max(-worst_lower, kPositiveFloor);
  const double T = grid.horizon();
  r.K = bound_K(r.c_bar, T);
  r.delta_bar = bound_delta_bar(r.c_bar, T);
  r.r22_below_bound = max_r22 <= -(r.delta_bar + r.K * r.c_bar);
  return r;
}

}  // namespace conelq
