#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mopt/common.hpp"
#include "mopt/rng.hpp"

namespace mopt {

enum class Family { logsumexp, leastsquares, nonconvex_pair };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::logsumexp: return "logsumexp";
    case Family::leastsquares: return "leastsquares";
    case Family::nonconvex_pair: return "nonconvex_pair";
  }
  return "?";
}

/// Seeded recipe for one benchmark instance. Identical specs expand to
/// bit-identical data.
struct ProblemSpec {
  Family family = Family::logsumexp;
  std::uint64_t seed = 0;
  Index n = 100;
  Index p = 100;
  double delta = 0.05;
};

inline void validate(const ProblemSpec& spec) {
  require(spec.n >= 1, "ProblemSpec: n must be positive");
  require(spec.p >= 1, "ProblemSpec: p must be positive");
  require(std::isfinite(spec.delta) && spec.delta >= 0.0,
          "ProblemSpec: delta must be a nonnegative finite real");
}

/// A vector objective F = [f_1, ..., f_m] with gradient access. Immutable
/// after construction; the oracles are pure, so a bundle may be shared
/// read-only across concurrent solver runs.
struct ObjectiveBundle {
  Index m = 0;
  Index n = 0;
  std::function<Vector(const Vector&)> values;    // x -> [f_1(x), ..., f_m(x)]
  std::function<Matrix(const Vector&)> jacobian;  // x -> n x m, column j = grad f_j(x)
  double mu = 0.0;                 // smallest strong convexity constant (0 when unknown)
  std::optional<double> lipschitz; // largest gradient Lipschitz constant, when computable
};

inline Vector eval_objectives(const ObjectiveBundle& bundle, const Vector& x) {
  require(x.size() == bundle.n, "eval_objectives: x has dimension " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(bundle.n));
  require_finite(x, "eval_objectives: x");
  Vector f = bundle.values(x);
  for (Index j = 0; j < bundle.m; ++j)
    if (!std::isfinite(f[j]))
      throw EvalError(j, "objective " + std::to_string(j) + " evaluated non-finite");
  return f;
}

inline Matrix eval_jacobian(const ObjectiveBundle& bundle, const Vector& x) {
  require(x.size() == bundle.n, "eval_jacobian: x has dimension " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(bundle.n));
  require_finite(x, "eval_jacobian: x");
  Matrix jac = bundle.jacobian(x);
  for (Index j = 0; j < bundle.m; ++j)
    if (!jac.col(j).allFinite())
      throw EvalError(j, "gradient of objective " + std::to_string(j) + " evaluated non-finite");
  return jac;
}

/// lambda_max(A^T A) by power iteration from the all-ones direction;
/// 100 rounds, early exit when the estimate moves less than 1e-10 relative.
inline double spectral_norm_sq(const Matrix& A) {
  const Index n = A.cols();
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = A.transpose() * (A * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = (A * v).squaredNorm();
    const bool settled = std::abs(next - lambda) <= 1e-10 * std::max(1.0, next);
    lambda = next;
    if (settled) break;
  }
  return lambda;
}

namespace detail {

inline void check_family_data(const std::vector<Matrix>& A, const std::vector<Vector>& b) {
  require(!A.empty() && A.size() == b.size(), "objective data: A and b counts disagree");
  for (std::size_t j = 0; j < A.size(); ++j) {
    require(A[j].rows() == A[0].rows() && A[j].cols() == A[0].cols(),
            "objective data: inconsistent A shapes");
    require(b[j].size() == A[j].rows(), "objective data: b length must match rows of A");
  }
}

}  // namespace detail

/// f_j(x) = delta/2 |x|^2 + ln sum_i exp(a_i^j . x - b_i^j), one objective per
/// (A, b) pair (rows of A are the a_i). Evaluated with max subtraction; the
/// naive sum overflows for large |x|.
inline ObjectiveBundle make_logsumexp_bundle(std::vector<Matrix> A, std::vector<Vector> b,
                                             double delta) {
  detail::check_family_data(A, b);
  require(std::isfinite(delta) && delta >= 0.0, "make_logsumexp_bundle: bad delta");
  struct Data {
    std::vector<Matrix> A;
    std::vector<Vector> b;
  };
  auto data = std::make_shared<Data>(Data{std::move(A), std::move(b)});
  const Index m = static_cast<Index>(data->A.size());

  ObjectiveBundle bundle;
  bundle.m = m;
  bundle.n = data->A[0].cols();
  bundle.mu = delta;
  bundle.values = [data, delta, m](const Vector& x) {
    Vector f(m);
    for (Index j = 0; j < m; ++j) {
      const Vector s = data->A[j] * x - data->b[j];
      const double smax = s.maxCoeff();
      f[j] = 0.5 * delta * x.squaredNorm() + smax + std::log((s.array() - smax).exp().sum());
    }
    return f;
  };
  bundle.jacobian = [data, delta, m](const Vector& x) {
    Matrix jac(x.size(), m);
    for (Index j = 0; j < m; ++j) {
      const Vector s = data->A[j] * x - data->b[j];
      const double smax = s.maxCoeff();
      Vector w = (s.array() - smax).exp();
      w /= w.sum();
      jac.col(j) = delta * x + data->A[j].transpose() * w;
    }
    return jac;
  };
  return bundle;
}

/// f_j(x) = delta/2 |x|^2 + 1/2 |A_j x - b_j|^2 with the Lipschitz constant
/// delta + max_j |A_j|_2^2 from power iteration.
inline ObjectiveBundle make_leastsquares_bundle(std::vector<Matrix> A, std::vector<Vector> b,
                                                double delta) {
  detail::check_family_data(A, b);
  require(std::isfinite(delta) && delta >= 0.0, "make_leastsquares_bundle: bad delta");
  struct Data {
    std::vector<Matrix> A;
    std::vector<Vector> b;
  };
  auto data = std::make_shared<Data>(Data{std::move(A), std::move(b)});
  const Index m = static_cast<Index>(data->A.size());
  double norm_sq = 0.0;
  for (Index j = 0; j < m; ++j) norm_sq = std::max(norm_sq, spectral_norm_sq(data->A[j]));

  ObjectiveBundle bundle;
  bundle.m = m;
  bundle.n = data->A[0].cols();
  bundle.mu = delta;
  bundle.lipschitz = delta + norm_sq;
  bundle.values = [data, delta, m](const Vector& x) {
    Vector f(m);
    for (Index j = 0; j < m; ++j)
      f[j] = 0.5 * delta * x.squaredNorm() + 0.5 * (data->A[j] * x - data->b[j]).squaredNorm();
    return f;
  };
  bundle.jacobian = [data, delta, m](const Vector& x) {
    Matrix jac(x.size(), m);
    for (Index j = 0; j < m; ++j)
      jac.col(j) = delta * x + data->A[j].transpose() * (data->A[j] * x - data->b[j]);
    return jac;
  };
  return bundle;
}

/// The two-objective nonconvex pair built from directions a1, a2:
///   f_{1,2}(x) = (sqrt(1+s^2) + sqrt(1+t^2) +- t)/2 + exp(-t^2)
/// with s = a1 . x and t = a2 . x.
inline ObjectiveBundle make_nonconvex_pair_bundle(Vector a1, Vector a2) {
  require(a1.size() == a2.size() && a1.size() >= 1, "make_nonconvex_pair_bundle: bad directions");
  struct Data {
    Vector a1, a2;
  };
  auto data = std::make_shared<Data>(Data{std::move(a1), std::move(a2)});

  ObjectiveBundle bundle;
  bundle.m = 2;
  bundle.n = data->a1.size();
  bundle.mu = 0.0;  // nonconvex: no usable curvature constants, backtracking only
  bundle.values = [data](const Vector& x) {
    const double s = data->a1.dot(x);
    const double t = data->a2.dot(x);
    const double r1 = std::sqrt(1.0 + s * s);
    const double r2 = std::sqrt(1.0 + t * t);
    const double e = std::exp(-t * t);
    Vector f(2);
    f[0] = 0.5 * (r1 + r2 + t) + e;
    f[1] = 0.5 * (r1 + r2 - t) + e;
    return f;
  };
  bundle.jacobian = [data](const Vector& x) {
    const double s = data->a1.dot(x);
    const double t = data->a2.dot(x);
    const double r1 = std::sqrt(1.0 + s * s);
    const double r2 = std::sqrt(1.0 + t * t);
    const double e = std::exp(-t * t);
    const Vector common =
        0.5 * (s / r1) * data->a1 + (0.5 * (t / r2) - 2.0 * t * e) * data->a2;
    Matrix jac(x.size(), 2);
    jac.col(0) = common + 0.5 * data->a2;
    jac.col(1) = common - 0.5 * data->a2;
    return jac;
  };
  return bundle;
}

/// Three log-sum-exp objectives, data uniform on [-1, 1) from streams
/// (seed, "logsumexp", {a1..a3, b1..b3}).
inline ObjectiveBundle gen_logsumexp(const ProblemSpec& spec) {
  require(spec.family == Family::logsumexp, "gen_logsumexp: wrong family");
  validate(spec);
  std::vector<Matrix> A;
  std::vector<Vector> b;
  for (int j = 1; j <= 3; ++j) {
    const std::string tag = std::to_string(j);
    A.push_back(RngStream(spec.seed, "logsumexp", "a" + tag)
                    .uniform_matrix(spec.p, spec.n, -1.0, 1.0));
    b.push_back(RngStream(spec.seed, "logsumexp", "b" + tag).uniform_vector(spec.p, -1.0, 1.0));
  }
  return make_logsumexp_bundle(std::move(A), std::move(b), spec.delta);
}

/// Two regularized least-squares objectives, data uniform on [0, 1) from
/// streams (seed, "leastsquares", {A1, A2, b1, b2}).
inline ObjectiveBundle gen_leastsquares(const ProblemSpec& spec) {
  require(spec.family == Family::leastsquares, "gen_leastsquares: wrong family");
  validate(spec);
  std::vector<Matrix> A;
  std::vector<Vector> b;
  for (int j = 1; j <= 2; ++j) {
    const std::string tag = std::to_string(j);
    A.push_back(RngStream(spec.seed, "leastsquares", "A" + tag)
                    .uniform_matrix(spec.p, spec.n, 0.0, 1.0));
    b.push_back(RngStream(spec.seed, "leastsquares", "b" + tag).uniform_vector(spec.p, 0.0, 1.0));
  }
  return make_leastsquares_bundle(std::move(A), std::move(b), spec.delta);
}

/// The nonconvex pair with a1, a2 uniform on [0, 1)^n from streams
/// (seed, "nonconvex_pair", {a1, a2}).
inline ObjectiveBundle gen_nonconvex_pair(const ProblemSpec& spec) {
  require(spec.family == Family::nonconvex_pair, "gen_nonconvex_pair: wrong family");
  validate(spec);
  return make_nonconvex_pair_bundle(
      RngStream(spec.seed, "nonconvex_pair", "a1").uniform_vector(spec.n, 0.0, 1.0),
      RngStream(spec.seed, "nonconvex_pair", "a2").uniform_vector(spec.n, 0.0, 1.0));
}

inline ObjectiveBundle make_bundle(const ProblemSpec& spec) {
  switch (spec.family) {
    case Family::logsumexp: return gen_logsumexp(spec);
    case Family::leastsquares: return gen_leastsquares(spec);
    case Family::nonconvex_pair: return gen_nonconvex_pair(spec);
  }
  throw std::invalid_argument("make_bundle: unknown family");
}

/// Max over objectives of |fd_j - grad_j| / (1 + |grad_j|) with central
/// differences of width h. Deterministic; the guard in the denominator keeps
/// the check meaningful at critical points.
inline double fd_gradient_check(const ObjectiveBundle& bundle, const Vector& x, double h) {
  require(h > 0.0 && h <= 1e-2, "fd_gradient_check: h must lie in (0, 1e-2]");
  const Matrix jac = eval_jacobian(bundle, x);
  Matrix fd(bundle.n, bundle.m);
  Vector xp = x, xm = x;
  for (Index i = 0; i < bundle.n; ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    fd.row(i) = (eval_objectives(bundle, xp) - eval_objectives(bundle, xm)).transpose() / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  double err = 0.0;
  for (Index j = 0; j < bundle.m; ++j)
    err = std::max(err, (fd.col(j) - jac.col(j)).norm() / (1.0 + jac.col(j).norm()));
  return err;
}

}  // namespace mopt
