#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "mopt/diagnostics.hpp"
#include "mopt/hull.hpp"

namespace mopt {

/// Continuous-time state of the rescaled momentum flow.
struct FlowState {
  double t = 0.0;
  double gamma = 1.0;
  Vector X, Z;
};

enum class FlowScheme { euler, rk4 };
enum class FlowRhsMode { vertex, resolver };

struct FlowDerivative {
  double dgamma = 0.0;
  Vector dX, dZ;
  Index vertex = 0;       // hull column selected for dZ
  double hull_min = 0.0;  // min_j <X - Z, grad f_j(X)>, used by the chatter guard
};

/// Right-hand side of the first-order system: gamma' = mu - gamma,
/// X' = Z - X, gamma Z' = mu (X - Z) - v with v the hull vertex minimizing
/// <X - Z, v> over C(X) (lowest index on ties). `frozen_vertex` pins the
/// selection near the Pareto set where the argmin set is not a singleton.
/// The resolver mode recovers dZ from the implicit projection form instead;
/// both selections agree wherever the argmin is unique.
inline FlowDerivative flow_rhs(const ObjectiveBundle& bundle, double mu, const FlowState& s,
                               std::optional<Index> frozen_vertex = {},
                               FlowRhsMode mode = FlowRhsMode::vertex) {
  require(s.gamma > 0.0, "flow_rhs: gamma must be positive");
  require(mu >= 0.0, "flow_rhs: mu must be nonnegative");
  require_finite(s.X, "flow_rhs: X");
  require_finite(s.Z, "flow_rhs: Z");
  const Matrix jac = eval_jacobian(bundle, s.X);
  FlowDerivative d;
  d.dgamma = mu - s.gamma;
  d.dX = s.Z - s.X;
  const auto [vertex, value] = hull_linear_min(jac, s.X - s.Z);
  d.hull_min = (s.X - s.Z).dot(value);
  if (frozen_vertex) {
    require(*frozen_vertex >= 0 && *frozen_vertex < bundle.m, "flow_rhs: bad frozen vertex");
    d.vertex = *frozen_vertex;
    d.dZ = (mu * (s.X - s.Z) - jac.col(d.vertex)) / s.gamma;
  } else if (mode == FlowRhsMode::vertex) {
    d.vertex = vertex;
    d.dZ = (mu * (s.X - s.Z) - value) / s.gamma;
  } else {
    // gamma Z' = u - proj_C(w - gamma Z') with u = mu (X - Z), w = Z - X;
    // the equal-coefficient branch of the resolver applies.
    d.vertex = vertex;
    d.dZ = resolve_implicit_projection(jac, s.gamma, s.gamma, mu * (s.X - s.Z), s.Z - s.X);
  }
  return d;
}

namespace detail {

inline FlowState flow_advance(const FlowState& s, double h, const FlowDerivative& d) {
  return {s.t + h, s.gamma + h * d.dgamma, s.X + h * d.dX, s.Z + h * d.dZ};
}

}  // namespace detail

/// Fixed-step integration from (t, gamma, X, Z) = (0, gamma0, x0, x0 + x1),
/// recording every state. Near the Pareto set (|X - Z| and the aligned hull
/// value both below 1e-12) the vertex selection freezes to the previous one
/// so the right-hand side stops chattering between equally valid choices.
inline std::vector<FlowState> integrate(const ObjectiveBundle& bundle, double mu, double gamma0,
                                        const Vector& x0, const Vector& x1, double T, double h,
                                        FlowScheme scheme, FlowRhsMode mode = FlowRhsMode::vertex) {
  require(h > 0.0 && h <= 1e-2, "integrate: h must lie in (0, 1e-2]");
  require(T >= 0.0 && T <= 50.0, "integrate: T must lie in [0, 50]");
  require(gamma0 > 0.0, "integrate: gamma0 must be positive");
  require(x0.size() == bundle.n && x1.size() == bundle.n, "integrate: bad initial condition");
  require_finite(x0, "integrate: x0");
  require_finite(x1, "integrate: x1");

  const long steps = std::llround(T / h);
  std::vector<FlowState> trajectory;
  trajectory.reserve(steps + 1);
  FlowState s{0.0, gamma0, x0, x0 + x1};
  trajectory.push_back(s);
  std::optional<Index> frozen;
  for (long i = 0; i < steps; ++i) {
    const FlowDerivative k1 = flow_rhs(bundle, mu, s, frozen, mode);
    FlowState next;
    if (scheme == FlowScheme::euler) {
      next = detail::flow_advance(s, h, k1);
    } else {
      const FlowDerivative k2 = flow_rhs(bundle, mu, detail::flow_advance(s, h / 2, k1), frozen, mode);
      const FlowDerivative k3 = flow_rhs(bundle, mu, detail::flow_advance(s, h / 2, k2), frozen, mode);
      const FlowDerivative k4 = flow_rhs(bundle, mu, detail::flow_advance(s, h, k3), frozen, mode);
      next.gamma = s.gamma + h / 6.0 * (k1.dgamma + 2.0 * k2.dgamma + 2.0 * k3.dgamma + k4.dgamma);
      next.X = s.X + h / 6.0 * (k1.dX + 2.0 * k2.dX + 2.0 * k3.dX + k4.dX);
      next.Z = s.Z + h / 6.0 * (k1.dZ + 2.0 * k2.dZ + 2.0 * k3.dZ + k4.dZ);
    }
    next.t = static_cast<double>(i + 1) * h;
    if (!std::isfinite(next.gamma) || !next.X.allFinite() || !next.Z.allFinite())
      throw FlowBlowup(next.t, "integrate: non-finite state at t = " + fmt_e(next.t));
    if ((s.X - s.Z).norm() < 1e-12 && std::abs(k1.hull_min) < 1e-12)
      frozen = k1.vertex;
    else
      frozen.reset();
    s = std::move(next);
    trajectory.push_back(s);
  }
  return trajectory;
}

/// E(t; z) = f(X(t); z) + gamma(t)/2 |Z(t) - z|^2.
inline double lyapunov_continuous(const ObjectiveBundle& bundle, const FlowState& s,
                                  const Vector& z) {
  require_finite(s.X, "lyapunov_continuous: X");
  require_finite(s.Z, "lyapunov_continuous: Z");
  return gap(bundle, s.X, z) + 0.5 * s.gamma * (s.Z - z).squaredNorm();
}

/// Columns: t, gamma, one E_z<i> per reference point, norm_X_minus_Z.
inline void write_trajectory_csv(std::ostream& os, const ObjectiveBundle& bundle,
                                 const std::vector<FlowState>& trajectory,
                                 const std::vector<Vector>& refs) {
  os << "t,gamma";
  for (std::size_t i = 0; i < refs.size(); ++i) os << ",E_z" << i;
  os << ",norm_X_minus_Z\n";
  for (const FlowState& s : trajectory) {
    os << fmt_e(s.t) << ',' << fmt_e(s.gamma);
    for (const Vector& z : refs) os << ',' << fmt_e(lyapunov_continuous(bundle, s, z));
    os << ',' << fmt_e((s.X - s.Z).norm()) << '\n';
  }
}

}  // namespace mopt
