#pragma once

#include "conelq/model.hpp"

#include <random>

namespace conelq {

/// Closed convex control cone: the whole space, the nonnegative orthant, or
/// the conic hull of a finite generator set (columns of a matrix).
///
/// A generated cone with zero columns is the trivial cone {0}.
class Cone {
 public:
  enum class Kind { full, orthant, generated };

  static Cone full(int dim);
  static Cone orthant(int dim);
  static Cone generated(Matrix generators);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  const Matrix& generators() const noexcept { return gen_; }

  /// Euclidean projection. Points already in the cone come back unchanged.
  Vector project(const Vector& x) const;

  /// Projection plus the conic coefficients (generated cones only; empty
  /// otherwise) so callers can read off the active face.
  Vector project(const Vector& x, Vector* coefficients) const;

  bool contains(const Vector& x, double tol) const;

  /// Orthonormal basis (dim x r) of the smallest face containing project(x).
  Matrix face_basis(const Vector& x) const;

  /// Random member: a nonnegative combination of extreme directions, scaled
  /// so that its norm is at most `scale`.
  Vector random_member(std::mt19937_64& rng, double scale) const;

  std::string describe() const;

 private:
  Cone(Kind kind, int dim, Matrix gen);

  Kind kind_;
  int dim_;
  Matrix gen_;
};

Vector cone_project(const Cone& cone, const Vector& x);
bool cone_contains(const Cone& cone, const Vector& x, double tol);

/// Projection onto cone ∩ {|v| <= radius}. For a closed convex cone this is the
/// cone projection pulled back radially onto the ball.
Vector project_cone_ball(const Cone& cone, const Vector& x, double radius);

/// Nonnegative least squares min |G c - x| over c >= 0 (Lawson-Hanson).
Vector nnls(const Matrix& G, const Vector& x, double tol = 1e-12);

}  // namespace conelq
