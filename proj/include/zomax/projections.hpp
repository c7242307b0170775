#pragma once

#include <variant>

#include "zomax/core.hpp"

namespace zomax {

struct Box {
  Vec lo;
  Vec hi;
};

struct L2Ball {
  Vec center;
  double radius = 0.0;
};

struct Simplex {
  int dim = 0;
};

/// Componentwise clamp of v onto [lo, hi].
Vec project_box(const Vec& v, const Vec& lo, const Vec& hi);

/// Radial clamp of v onto the ball {p : |p - center| <= radius}.
Vec project_l2_ball(const Vec& v, const Vec& center, double radius);

// Root mu of sum_i max{0, c_i - mu} = 1. The left side is continuous and
// nonincreasing in mu, so bisection on [min(c) - 1, max(c)] converges; the
// returned root has |sum - 1| <= 1e-10 (at most 200 halvings).
double simplex_root(const Vec& c);

/// Euclidean projection onto {w : 1'w = 1, w >= 0}, i.e. [v - mu*1]_+ with
/// mu = simplex_root(v).
Vec project_simplex(const Vec& v);

// One of the three constraint geometries the solvers project onto.
// Immutable after construction; all operations are pure.
class ConstraintSet {
 public:
  static ConstraintSet box(Vec lo, Vec hi);
  static ConstraintSet l2_ball(Vec center, double radius);
  static ConstraintSet simplex(int dim);

  int dim() const;
  Vec project(const Vec& v) const;
  bool contains(const Vec& v, double tol = 1e-9) const;

  /// A canonical interior point: box midpoint, ball center, uniform weights.
  Vec center_point() const;

  /// Uniform draw from the set (simplex via normalized exponentials).
  Vec sample_uniform(RngStream& rng) const;

  const std::variant<Box, L2Ball, Simplex>& shape() const { return shape_; }

 private:
  explicit ConstraintSet(std::variant<Box, L2Ball, Simplex> shape);

  std::variant<Box, L2Ball, Simplex> shape_;
};

}  // namespace zomax
