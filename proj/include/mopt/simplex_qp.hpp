#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "mopt/common.hpp"

namespace mopt {

/// A point of the unit simplex: nonnegative entries summing to one.
struct SimplexWeights {
  Vector lambda;
};

/// Exact Euclidean projection onto the unit simplex (sort-based).
inline Vector project_to_simplex(const Vector& v) {
  const Index m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  for (Index i = 0; i < m; ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// Entries below 1e-14 are clamped to zero and the rest renormalized, so
/// downstream checks always see a genuine simplex point.
inline Vector clamp_weights(Vector lambda) {
  for (Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] < 1e-14) lambda[i] = 0.0;
  const double sum = lambda.sum();
  if (sum > 0.0) lambda /= sum;
  return lambda;
}

struct QpResult {
  SimplexWeights weights;
  double residual = 0.0;  // stationarity residual at return (scaled problem)
  long iterations = 0;
};

/// Minimizes 0.5 l'Ql + c'l over the unit simplex by projected gradient with
/// the fixed step 1/(|Q|_1 + eps) and exact simplex projection.
///
/// The stationarity test |l - proj(l - (Ql + c))| <= tol is evaluated on
/// Q, c divided by sigma = max(1, max|Q_ij|, max|c_i|): without the
/// rescaling the unit-step residual of a problem with |Q| ~ 1e6 bottoms out
/// near 1e-10 in double precision and no tolerance below that is reachable.
inline QpResult simplex_qp(const Matrix& Q, const Vector& c, double tol = 1e-12,
                           long max_iters = 100000) {
  const Index m = c.size();
  require(m >= 1, "simplex_qp: empty problem");
  require(Q.rows() == m && Q.cols() == m, "simplex_qp: Q and c sizes disagree");
  require(tol >= 1e-14 && tol <= 1e-6, "simplex_qp: tol must lie in [1e-14, 1e-6]");
  require(max_iters >= 0, "simplex_qp: negative iteration budget");
  require(Q.allFinite() && c.allFinite(), "simplex_qp: non-finite input");
  const double qmax = Q.cwiseAbs().maxCoeff();
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + qmax),
          "simplex_qp: Q is not symmetric");

  if (m == 1) return {SimplexWeights{Vector::Ones(1)}, 0.0, 0};

  const double sigma = std::max({1.0, qmax, c.cwiseAbs().maxCoeff()});
  const Matrix qs = (Q + Q.transpose()) / (2.0 * sigma);
  const Vector cs = c / sigma;
  const double step = 1.0 / (qs.cwiseAbs().colwise().sum().maxCoeff() + 1e-12);

  Vector lambda = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector best = lambda;
  double best_res = std::numeric_limits<double>::infinity();
  Vector grad(m), trial(m);
  for (long it = 0; it <= max_iters; ++it) {
    grad.noalias() = qs * lambda;
    grad += cs;
    const double res = (lambda - project_to_simplex(lambda - grad)).norm();
    if (res < best_res) {
      best_res = res;
      best = lambda;
    }
    if (res <= tol) return {SimplexWeights{clamp_weights(lambda)}, res, it};
    trial = lambda - step * grad;
    lambda = project_to_simplex(trial);
  }
  throw QpFailure(clamp_weights(best), best_res,
                  "simplex_qp: residual " + fmt_e(best_res) + " above tol " + fmt_e(tol) +
                      " after " + std::to_string(max_iters) + " iterations");
}

}  // namespace mopt
