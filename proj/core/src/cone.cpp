#include "conelq/cone.hpp"

#include "conelq/errors.hpp"

#include <cmath>
#include <sstream>

namespace conelq {

namespace {

void check_dim(const Cone& c, const Vector& x) {
  if (x.size() != c.dim())
    throw ArgumentError("cone: point has dimension " + std::to_string(x.size()) +
                        ", cone has " + std::to_string(c.dim()));
}

// Orthonormal basis of the column span.
Matrix span_basis(const Matrix& cols) {
  if (cols.cols() == 0) return Matrix(cols.rows(), 0);
  Eigen::ColPivHouseholderQR<Matrix> qr(cols);
  qr.setThreshold(1e-12);
  const Eigen::Index r = qr.rank();
  Matrix q = qr.householderQ();
  return q.leftCols(r);
}

}  // namespace

Cone::Cone(Kind kind, int dim, Matrix gen)
    : kind_(kind), dim_(dim), gen_(std::move(gen)) {}

Cone Cone::full(int dim) {
  if (dim < 0) throw ArgumentError("cone: negative dimension");
  return Cone(Kind::full, dim, Matrix(dim, 0));
}

Cone Cone::orthant(int dim) {
  if (dim < 0) throw ArgumentError("cone: negative dimension");
  return Cone(Kind::orthant, dim, Matrix(dim, 0));
}

Cone Cone::generated(Matrix generators) {
  if (!generators.allFinite()) throw ArgumentError("cone: non-finite generator");
  for (Eigen::Index j = 0; j < generators.cols(); ++j)
    if (generators.col(j).norm() == 0.0)
      throw ArgumentError("cone: generator " + std::to_string(j) + " is zero");
  const int dim = static_cast<int>(generators.rows());
  return Cone(Kind::generated, dim, std::move(generators));
}

Vector nnls(const Matrix& G, const Vector& x, double tol) {
  const Eigen::Index n = G.cols();
  Vector c = Vector::Zero(n);
  if (n == 0) return c;
  std::vector<bool> passive(n, false);
  const double scale = std::max(1.0, G.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    Matrix Gp(G.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) Gp.col(a) = G.col(idx[a]);
    Vector zp = Gp.colPivHouseholderQr().solve(x);
    z.setZero();
    for (std::size_t a = 0; a < idx.size(); ++a) z[idx[a]] = zp[a];
  };

  const int max_outer = 3 * static_cast<int>(n) + 30;
  for (int outer = 0; outer < max_outer; ++outer) {
    Vector w = G.transpose() * (x - G * c);
    Eigen::Index best = -1;
    double best_w = tol * scale;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    if (best < 0) break;
    passive[best] = true;

    Vector z(n);
    for (int inner = 0; inner < 3 * static_cast<int>(n) + 30; ++inner) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) feasible = false;
      if (feasible) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, c[j] / (c[j] - z[j]));
      c += alpha * (z - c);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && c[j] <= tol) {
          passive[j] = false;
          c[j] = 0.0;
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) c[j] = passive[j] ? std::max(z[j], 0.0) : 0.0;
  }
  return c;
}

Vector Cone::project(const Vector& x) const { return project(x, nullptr); }

Vector Cone::project(const Vector& x, Vector* coefficients) const {
  check_dim(*this, x);
  switch (kind_) {
    case Kind::full:
      return x;
    case Kind::orthant:
      return x.cwiseMax(0.0);
    case Kind::generated: {
      if (gen_.cols() == 0) {
        if (coefficients) *coefficients = Vector();
        return Vector::Zero(dim_);
      }
      Vector c = nnls(gen_, x);
      Vector p = gen_ * c;
      if (coefficients) *coefficients = c;
      // Members come back untouched so that projection fixes the cone exactly.
      if ((x - p).norm() <= 1e-12 * (1.0 + x.norm())) return x;
      return p;
    }
  }
  return x;
}

bool Cone::contains(const Vector& x, double tol) const {
  if (tol < 0.0) throw ArgumentError("cone: tolerance must be nonnegative");
  check_dim(*this, x);
  switch (kind_) {
    case Kind::full:
      return true;
    case Kind::orthant:
      return (x - x.cwiseMax(0.0)).norm() <= tol;
    case Kind::generated:
      return (x - project(x)).norm() <= tol;
  }
  return false;
}

Matrix Cone::face_basis(const Vector& x) const {
  check_dim(*this, x);
  switch (kind_) {
    case Kind::full:
      return Matrix::Identity(dim_, dim_);
    case Kind::orthant: {
      std::vector<int> free;
      for (int i = 0; i < dim_; ++i)
        if (x[i] > 0.0) free.push_back(i);
      Matrix U = Matrix::Zero(dim_, static_cast<Eigen::Index>(free.size()));
      for (std::size_t a = 0; a < free.size(); ++a) U(free[a], a) = 1.0;
      return U;
    }
    case Kind::generated: {
      Vector c;
      project(x, &c);
      std::vector<Eigen::Index> act;
      for (Eigen::Index j = 0; j < c.size(); ++j)
        if (c[j] > 0.0) act.push_back(j);
      Matrix cols(dim_, static_cast<Eigen::Index>(act.size()));
      for (std::size_t a = 0; a < act.size(); ++a) cols.col(a) = gen_.col(act[a]);
      return span_basis(cols);
    }
  }
  return Matrix(dim_, 0);
}

Vector Cone::random_member(std::mt19937_64& rng, double scale) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector v(dim_);
  switch (kind_) {
    case Kind::full:
      for (int i = 0; i < dim_; ++i) v[i] = normal(rng);
      break;
    case Kind::orthant:
      for (int i = 0; i < dim_; ++i) v[i] = std::abs(normal(rng));
      break;
    case Kind::generated: {
      Vector c(gen_.cols());
      for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = unif(rng);
      v = gen_ * c;
      break;
    }
  }
  const double n = v.norm();
  if (n > 0.0) v *= scale * unif(rng) / n;
  return v;
}

std::string Cone::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::full:
      os << "full(" << dim_ << ")";
      break;
    case Kind::orthant:
      os << "orthant(" << dim_ << ")";
      break;
    case Kind::generated:
      os << "generated(" << dim_ << "x" << gen_.cols() << ")";
      break;
  }
  return os.str();
}

Vector cone_project(const Cone& cone, const Vector& x) { return cone.project(x); }

bool cone_contains(const Cone& cone, const Vector& x, double tol) {
  return cone.contains(x, tol);
}

Vector project_cone_ball(const Cone& cone, const Vector& x, double radius) {
  if (!(radius >= 0.0)) throw ArgumentError("cone: ball radius must be >= 0");
  Vector p = cone.project(x);
  if (std::isinf(radius)) return p;
  const double n = p.norm();
  if (n > radius) p *= radius / n;
  return p;
}

}  // namespace conelq
