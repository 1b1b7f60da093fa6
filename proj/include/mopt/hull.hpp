#pragma once

#include <utility>

#include "mopt/problems.hpp"
#include "mopt/simplex_qp.hpp"

namespace mopt {

/// Euclidean projection of a point onto the convex hull of a column set,
/// together with the hull weights that produce it.
struct HullProjection {
  Vector point;
  SimplexWeights weights;
  double qp_kkt = 0.0;
};

/// proj_{conv(columns of P)}(w) through the dual simplex QP with
/// Q = P'P and c = -P'w.
inline HullProjection hull_project(const Matrix& P, const Vector& w, double tol = 1e-12,
                                   long max_iters = 100000) {
  require(P.cols() >= 1, "hull_project: empty hull");
  require(P.rows() == w.size(), "hull_project: P and w sizes disagree");
  const Matrix Q = P.transpose() * P;
  const Vector c = -P.transpose() * w;
  QpResult qp = simplex_qp(Q, c, tol, max_iters);
  return {P * qp.weights.lambda, std::move(qp.weights), qp.residual};
}

/// |proj_{C(x)}(0)| with C(x) the hull of the objective gradients; zero
/// exactly at Pareto critical points.
inline double kkt_residual(const ObjectiveBundle& bundle, const Vector& x, double tol = 1e-12) {
  return hull_project(eval_jacobian(bundle, x), Vector::Zero(bundle.n), tol).point.norm();
}

/// d(x) = -proj_{C(x)}(0), a common descent direction for all objectives.
inline Vector steepest_direction(const ObjectiveBundle& bundle, const Vector& x,
                                 double tol = 1e-12) {
  return -hull_project(eval_jacobian(bundle, x), Vector::Zero(bundle.n), tol).point;
}

/// Column minimizing <g, p_j>; lowest index wins ties. A vertex always
/// attains the minimum of a linear functional over the hull.
inline std::pair<Index, Vector> hull_linear_min(const Matrix& P, const Vector& g) {
  require(P.cols() >= 1, "hull_linear_min: empty hull");
  require(P.rows() == g.size(), "hull_linear_min: P and g sizes disagree");
  require_finite(g, "hull_linear_min: g");
  Index best = 0;
  double best_ip = P.col(0).dot(g);
  for (Index j = 1; j < P.cols(); ++j) {
    const double ip = P.col(j).dot(g);
    if (ip < best_ip) {
      best = j;
      best_ip = ip;
    }
  }
  return {best, P.col(best)};
}

/// Solves a x = u - proj_C(w - b x) for x over the hull of P's columns.
/// For a > b the projection decouples at the shifted point (aw - bu)/(a - b);
/// for a = b it reduces to a linear minimization over the hull.
inline Vector resolve_implicit_projection(const Matrix& P, double a, double b, const Vector& u,
                                          const Vector& w, double tol = 1e-12) {
  require(a > 0.0, "resolve_implicit_projection: a must be positive");
  require(b >= 0.0 && b <= a, "resolve_implicit_projection: b must lie in [0, a]");
  require(u.size() == w.size() && u.size() == P.rows(),
          "resolve_implicit_projection: size mismatch");
  require_finite(u, "resolve_implicit_projection: u");
  require_finite(w, "resolve_implicit_projection: w");
  const Vector v = (b < a) ? hull_project(P, (a * w - b * u) / (a - b), tol).point
                           : hull_linear_min(P, u - w).second;
  return (u - v) / a;
}

}  // namespace mopt
