#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace conelq::testing {

double expected_K(double c_bar, double T) { return (c_bar + 1.0) * std::exp(2.0 * c_bar * T); }

double expected_delta_bar(double c_bar, double T) {
  return (c_bar + 1.0) * (c_bar + 1.0) * std::exp(4.0 * c_bar * T) *
         (std::exp(2.0 * c_bar * T) - 1.0);
}

double envelope_lower(double delta_lower, double c_lower1, double T, double t) {
  return delta_lower * std::exp(-c_lower1 * (T - t));
}

double envelope_upper(double c_bar, double delta_bar, double K, double T, double t) {
  const double a = 1.0 + K * K / delta_bar;
  return (c_bar + a) * std::exp(2.0 * c_bar * (T - t)) - a;
}

Vector brute_force_cone_projection(const Matrix& gens, const Vector& x) {
  const int r = static_cast<int>(gens.cols());
  Vector best = Vector::Zero(x.size());
  double best_d = x.squaredNorm();
  for (unsigned mask = 1; mask < (1u << r); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < r; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    Matrix G(x.size(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) G.col(j) = gens.col(idx[j]);
    const Vector c = G.completeOrthogonalDecomposition().solve(x);
    if (c.minCoeff() < -1e-12) continue;
    const Vector p = G * c.cwiseMax(0.0);
    const double d = (x - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

Vector dykstra_cone_ball(const Cone& cone, const Vector& x, double radius, int iterations) {
  Vector y = x, p = Vector::Zero(x.size()), q = Vector::Zero(x.size());
  for (int it = 0; it < iterations; ++it) {
    const Vector a = cone.project(y + p);
    p = y + p - a;
    Vector b = a + q;
    const double nb = b.norm();
    if (nb > radius) b *= radius / nb;
    q = a + q - b;
    y = b;
  }
  return y;
}

double local_lipschitz(int k, double v1, double v2, const HamiltonianTerms& terms,
                       const StepCoefficients& c, const JumpMeasure& jumps, double step,
                       int window) {
  Vector a(1), b(1);
  auto H = [&](double x, double y) {
    a[0] = x;
    b[0] = y;
    return eval_H_under(k, a, b, terms, c, jumps) + eval_H_bar(k, b, terms);
  };
  double L = 0.0;
  for (int i = -window; i <= window; ++i)
    for (int j = -window; j <= window; ++j) {
      const double x = v1 + i * step, y = v2 + j * step;
      const double h = H(x, y);
      L = std::max(L, std::abs(H(x + step, y) - h) / step);
      L = std::max(L, std::abs(H(x, y + step) - h) / step);
    }
  return L;
}

}  // namespace conelq::testing
