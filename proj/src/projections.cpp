#include "zomax/projections.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace zomax {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": vector has non-finite entries");
  }
}

void require_dim(const Vec& v, int dim, const char* what) {
  if (v.size() != dim) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(dim) + ", got " +
                                std::to_string(v.size()));
  }
}

}  // namespace

Vec project_box(const Vec& v, const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size() || v.size() != lo.size()) {
    throw std::invalid_argument("project_box: dimension mismatch");
  }
  require_finite(v, "project_box");
  return v.cwiseMax(lo).cwiseMin(hi);
}

Vec project_l2_ball(const Vec& v, const Vec& center, double radius) {
  if (v.size() != center.size()) {
    throw std::invalid_argument("project_l2_ball: dimension mismatch");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("project_l2_ball: radius must be positive");
  require_finite(v, "project_l2_ball");
  const Vec offset = v - center;
  const double norm = offset.norm();
  if (norm <= radius) return v;
  return center + offset * (radius / norm);
}

double simplex_root(const Vec& c) {
  if (c.size() < 1) throw std::invalid_argument("simplex_root: empty input");
  require_finite(c, "simplex_root");
  const auto excess = [&c](double mu) {
    double s = 0.0;
    for (int k = 0; k < c.size(); ++k) s += std::max(0.0, c[k] - mu);
    return s - 1.0;
  };
  double lo = c.minCoeff() - 1.0;
  double hi = c.maxCoeff();
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = excess(mid);
    if (std::abs(r) <= 1e-10) return mid;
    if (r > 0.0) {
      lo = mid;  // still too much mass: move the threshold up
    } else {
      hi = mid;
    }
  }
  return mid;
}

Vec project_simplex(const Vec& v) {
  if (v.size() < 1) throw std::invalid_argument("project_simplex: empty input");
  require_finite(v, "project_simplex");
  const double mu = simplex_root(v);
  return (v.array() - mu).max(0.0).matrix();
}

ConstraintSet::ConstraintSet(std::variant<Box, L2Ball, Simplex> shape)
    : shape_(std::move(shape)) {}

ConstraintSet ConstraintSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box: lo/hi dimension mismatch");
  if (lo.size() < 1) throw std::invalid_argument("box: empty bounds");
  require_finite(lo, "box");
  require_finite(hi, "box");
  for (int k = 0; k < lo.size(); ++k) {
    if (!(lo[k] <= hi[k])) {
      throw std::invalid_argument("box: lo > hi at coordinate " + std::to_string(k));
    }
  }
  return ConstraintSet(Box{std::move(lo), std::move(hi)});
}

ConstraintSet ConstraintSet::l2_ball(Vec center, double radius) {
  if (center.size() < 1) throw std::invalid_argument("l2_ball: empty center");
  require_finite(center, "l2_ball");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("l2_ball: radius must be positive and finite");
  }
  return ConstraintSet(L2Ball{std::move(center), radius});
}

ConstraintSet ConstraintSet::simplex(int dim) {
  if (dim < 1) throw std::invalid_argument("simplex: dimension must be positive");
  return ConstraintSet(Simplex{dim});
}

int ConstraintSet::dim() const {
  if (const auto* b = std::get_if<Box>(&shape_)) return static_cast<int>(b->lo.size());
  if (const auto* s = std::get_if<L2Ball>(&shape_)) return static_cast<int>(s->center.size());
  return std::get<Simplex>(shape_).dim;
}

Vec ConstraintSet::project(const Vec& v) const {
  require_dim(v, dim(), "ConstraintSet::project");
  if (const auto* b = std::get_if<Box>(&shape_)) return project_box(v, b->lo, b->hi);
  if (const auto* s = std::get_if<L2Ball>(&shape_)) {
    return project_l2_ball(v, s->center, s->radius);
  }
  return project_simplex(v);
}

bool ConstraintSet::contains(const Vec& v, double tol) const {
  require_dim(v, dim(), "ConstraintSet::contains");
  if (!v.allFinite()) return false;
  if (const auto* b = std::get_if<Box>(&shape_)) {
    return (v.array() >= b->lo.array() - tol).all() &&
           (v.array() <= b->hi.array() + tol).all();
  }
  if (const auto* s = std::get_if<L2Ball>(&shape_)) {
    return (v - s->center).norm() <= s->radius + tol;
  }
  return std::abs(v.sum() - 1.0) <= tol && (v.array() >= -tol).all();
}

Vec ConstraintSet::center_point() const {
  if (const auto* b = std::get_if<Box>(&shape_)) return 0.5 * (b->lo + b->hi);
  if (const auto* s = std::get_if<L2Ball>(&shape_)) return s->center;
  const int d = std::get<Simplex>(shape_).dim;
  return Vec::Constant(d, 1.0 / d);
}

Vec ConstraintSet::sample_uniform(RngStream& rng) const {
  if (const auto* b = std::get_if<Box>(&shape_)) {
    Vec v(b->lo.size());
    for (int k = 0; k < v.size(); ++k) {
      v[k] = b->lo[k] + (b->hi[k] - b->lo[k]) * rng.uniform();
    }
    return v;
  }
  if (const auto* s = std::get_if<L2Ball>(&shape_)) {
    return s->center + s->radius * draw_unit_ball(static_cast<int>(s->center.size()), rng);
  }
  const int d = std::get<Simplex>(shape_).dim;
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = -std::log(1.0 - rng.uniform());
  const double total = v.sum();
  if (total <= 0.0) return Vec::Constant(d, 1.0 / d);
  return v / total;
}

}  // namespace zomax
