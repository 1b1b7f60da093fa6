#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mopt/hull.hpp"

namespace mopt {

enum class Method { SD, APG, AMG_QP, AMG_QP_BT, AMG_QP_SR, AMG_QP_ResR };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::SD: return "SD";
    case Method::APG: return "APG";
    case Method::AMG_QP: return "AMG_QP";
    case Method::AMG_QP_BT: return "AMG_QP_BT";
    case Method::AMG_QP_SR: return "AMG_QP_SR";
    case Method::AMG_QP_ResR: return "AMG_QP_ResR";
  }
  return "?";
}

inline bool method_uses_restart(Method m) {
  return m == Method::AMG_QP_SR || m == Method::AMG_QP_ResR;
}

struct MethodConfig {
  Method method = Method::AMG_QP_BT;
  double mu = 0.0;        // strong convexity constant fed to the scheme
  double L_or_M0 = 10.0;  // exact L for AMG_QP, initial curvature estimate otherwise
  double gamma0 = 1.0;
  double theta0 = 1.0;    // APG only
  long max_iters = 500;
  double kkt_tol = 0.0;   // stop once the KKT residual falls below; 0 disables
};

inline void validate(const MethodConfig& cfg) {
  require(std::isfinite(cfg.mu) && cfg.mu >= 0.0, "MethodConfig: mu must be nonnegative");
  require(std::isfinite(cfg.L_or_M0) && cfg.L_or_M0 > 0.0, "MethodConfig: L_or_M0 must be positive");
  require(std::isfinite(cfg.gamma0) && cfg.gamma0 > 0.0, "MethodConfig: gamma0 must be positive");
  require(std::isfinite(cfg.theta0) && cfg.theta0 > 0.0, "MethodConfig: theta0 must be positive");
  require(cfg.max_iters >= 0, "MethodConfig: max_iters must be nonnegative");
  require(std::isfinite(cfg.kkt_tol) && cfg.kkt_tol >= 0.0, "MethodConfig: kkt_tol must be nonnegative");
  if (method_uses_restart(cfg.method))
    require(cfg.mu == 0.0, "MethodConfig: restart methods take mu = 0");
}

/// One trace record per iterate. Row k holds the state at iterate k; the
/// tau/M/backtrack/restart columns describe the step that produced it, so
/// row 0 carries tau = 0 and the initial curvature estimate.
struct TraceRow {
  long k = 0;
  double wall_seconds = 0.0;
  double kkt_residual = 0.0;
  double iterate_gap = 0.0;  // |x_k - x_{k-1}|, 0 at k = 0
  double M = 0.0;
  double gamma = 0.0;        // 0 for methods without a gamma sequence
  double tau = 0.0;
  bool restart_flag = false;
  int backtrack_count = 0;
};

struct RunTrace {
  std::vector<TraceRow> records;
};

/// Per-iterate tuple shared by the discrete methods. prev_x feeds the speed
/// restart test; prev_kkt holds the residual at x (the candidate's
/// predecessor) for the residual restart test.
struct SolverState {
  long k = 0;
  Vector x, z;
  double gamma = 1.0;
  double M = 1.0;
  double tau = 0.0;
  std::optional<Vector> prev_x;
  std::optional<double> prev_kkt;
};

// ---------------------------------------------------------------------------
// Scalar pieces

/// theta_{k+1} from 1/theta_{k+1} = sqrt(1/theta_k^2 + 1/4) + 1/2.
inline double apg_theta_next(double theta) {
  require(theta > 0.0, "apg_theta_next: theta must be positive");
  return 1.0 / (std::sqrt(1.0 / (theta * theta) + 0.25) + 0.5);
}

/// Positive root of M tau^2 = gamma (1 + tau).
inline double amg_step_size(double gamma, double M) {
  require(gamma > 0.0, "amg_step_size: gamma must be positive");
  require(M > 0.0, "amg_step_size: M must be positive");
  return (gamma + std::sqrt(gamma * gamma + 4.0 * M * gamma)) / (2.0 * M);
}

/// Implicit Euler step of gamma' = mu - gamma.
inline double amg_gamma_next(double gamma, double mu, double tau) {
  require(gamma > 0.0, "amg_gamma_next: gamma must be positive");
  require(mu >= 0.0, "amg_gamma_next: mu must be nonnegative");
  require(tau > 0.0, "amg_gamma_next: tau must be positive");
  return (gamma + mu * tau) / (1.0 + tau);
}

// ---------------------------------------------------------------------------
// IMEX sweep and backtracking

struct AmgStep {
  double tau = 0.0;
  double gamma_next = 0.0;
  Vector y;      // extrapolated evaluation point
  Vector z_qp;   // hull projection feeding the z-update
  Vector z_next;
  Vector x_next;
  Matrix jac_y;  // gradients at y, kept for the curvature test
};

/// One IMEX sweep at curvature estimate M: step size from M tau^2 =
/// gamma (1 + tau), extrapolation y, projection of
/// mu (y - x) + gamma (z - x) / tau onto C(y), then the z and x updates.
inline AmgStep amg_qp_step(const ObjectiveBundle& bundle, double mu, double M, double gamma,
                           const Vector& x, const Vector& z, double qp_tol = 1e-12) {
  require(mu >= 0.0, "amg_qp_step: mu must be nonnegative");
  AmgStep s;
  s.tau = amg_step_size(gamma, M);
  s.gamma_next = amg_gamma_next(gamma, mu, s.tau);
  s.y = (x + s.tau * z) / (1.0 + s.tau);
  s.jac_y = eval_jacobian(bundle, s.y);
  const Vector w = mu * (s.y - x) + gamma * (z - x) / s.tau;
  s.z_qp = hull_project(s.jac_y, w, qp_tol).point;
  s.z_next = (gamma * z + mu * s.tau * s.y - s.tau * s.z_qp) / (gamma + mu * s.tau);
  s.x_next = (x + s.tau * s.z_next) / (1.0 + s.tau);
  return s;
}

// Cancellation guard for the curvature test below: delta_j is a difference of
// nearly equal quantities, so once 0.5 M |d|^2 falls under this scale the test
// compares rounding noise and M would double without bound.
inline double backtrack_noise_slack(double f_trial, double f_base, double grad_norm,
                                    double step_norm) {
  return 1e-13 * (1.0 + std::abs(f_trial) + std::abs(f_base) + grad_norm * step_norm);
}

/// True when f_j(xp) - f_j(y) - <grad f_j(y), xp - y> <= M/2 |xp - y|^2 for
/// every objective, up to the noise slack.
inline bool curvature_test(const Vector& f_trial, const Vector& f_base, const Matrix& jac_base,
                           const Vector& xp, const Vector& y, double M) {
  const Vector d = xp - y;
  const double quad = 0.5 * M * d.squaredNorm();
  const double dnorm = d.norm();
  for (Index j = 0; j < f_trial.size(); ++j) {
    const double delta = f_trial[j] - f_base[j] - jac_base.col(j).dot(d);
    if (delta > quad + backtrack_noise_slack(f_trial[j], f_base[j], jac_base.col(j).norm(), dnorm))
      return false;
  }
  return true;
}

struct BacktrackResult {
  AmgStep step;
  double M_next = 0.0;
  int doublings = 0;  // i_k
};

/// Repeats the IMEX sweep with M, 2M, 4M, ... until the curvature test
/// accepts the produced pair (x_next, y).
inline BacktrackResult backtrack(const ObjectiveBundle& bundle, double mu, double M, double gamma,
                                 const Vector& x, const Vector& z, double qp_tol = 1e-12) {
  require(M > 0.0, "backtrack: M must be positive");
  for (int i = 0;; ++i) {
    if (i > 60)
      throw BacktrackFailure(
          "backtrack: no acceptance after 60 doublings; oracle non-smooth or corrupted");
    const double m_trial = std::ldexp(M, i);
    AmgStep s = amg_qp_step(bundle, mu, m_trial, gamma, x, z, qp_tol);
    const Vector f_y = eval_objectives(bundle, s.y);
    const Vector f_xp = eval_objectives(bundle, s.x_next);
    if (curvature_test(f_xp, f_y, s.jac_y, s.x_next, s.y, m_trial))
      return {std::move(s), m_trial, i};
  }
}

// ---------------------------------------------------------------------------
// Restart

enum class RestartRule { SR, ResR };

/// SR fires when the iterate gap shrank; ResR when the KKT residual rose.
/// Both comparisons are strict: ties never restart.
inline bool restart_check(RestartRule rule, const SolverState& state, const Vector& new_x,
                          double new_kkt) {
  if (rule == RestartRule::SR) {
    require(state.prev_x.has_value(), "restart_check: SR needs the previous iterate");
    return (new_x - state.x).norm() < (state.x - *state.prev_x).norm();
  }
  require(state.prev_kkt.has_value(), "restart_check: ResR needs the previous residual");
  return new_kkt > *state.prev_kkt;
}

/// Discards the candidate step: x stays put, momentum is cleared (z = x),
/// gamma resets to gamma0; the curvature estimate carries over.
inline SolverState apply_restart(const SolverState& state, double gamma0) {
  require(gamma0 > 0.0, "apply_restart: gamma0 must be positive");
  SolverState out = state;
  out.k = state.k + 1;
  out.z = state.x;
  out.gamma = gamma0;
  out.prev_x = state.x;
  return out;
}

// ---------------------------------------------------------------------------
// Steepest descent and APG single steps

/// x + d(x)/M with the multiobjective steepest descent direction. The caller
/// validates M by the same curvature test as the accelerated methods.
inline Vector sd_step(const ObjectiveBundle& bundle, const Vector& x, double M,
                      double qp_tol = 1e-12) {
  require(M > 0.0, "sd_step: M must be positive");
  return x + steepest_direction(bundle, x, qp_tol) / M;
}

struct ApgState {
  Vector x, y;
  double theta = 1.0;
};

/// One accelerated proximal-gradient step at step size tau: dual weights from
/// the simplex QP with Q = tau J'J and c = F(x) - F(y), then the gradient
/// step from y and the extrapolation update.
inline ApgState apg_step(const ObjectiveBundle& bundle, const ApgState& s, double tau,
                         double qp_tol = 1e-12) {
  require(tau > 0.0, "apg_step: tau must be positive");
  const Matrix jac_y = eval_jacobian(bundle, s.y);
  const Vector c = eval_objectives(bundle, s.x) - eval_objectives(bundle, s.y);
  const Matrix q = tau * (jac_y.transpose() * jac_y);
  const Vector lambda = simplex_qp(q, c, qp_tol).weights.lambda;
  ApgState next;
  next.x = s.y - tau * (jac_y * lambda);
  next.theta = apg_theta_next(s.theta);
  next.y = next.x + next.theta * (1.0 / s.theta - 1.0) * (next.x - s.x);
  return next;
}

// ---------------------------------------------------------------------------
// Run driver

/// Everything an accepted AMG-family step exposes, for inspection hooks.
struct AmgStepInfo {
  long k = 0;
  double mu = 0.0;
  double M = 0.0;     // accepted curvature estimate
  double gamma = 0.0; // gamma_k before the step
  const AmgStep* step = nullptr;
  const Vector* x = nullptr;
  const Vector* z = nullptr;
};

struct RunOptions {
  bool collect_states = false;  // keep a SolverState snapshot per iterate
  double qp_tol = 1e-12;
  std::function<void(const AmgStepInfo&)> observer;  // AMG-family steps only
};

struct SolveResult {
  RunTrace trace;
  std::vector<SolverState> states;  // filled when collect_states
  SolverState final_state;
};

namespace detail {

class RunDriver {
 public:
  RunDriver(const ObjectiveBundle& bundle, const MethodConfig& cfg, const RunOptions& opts)
      : bundle_(bundle), cfg_(cfg), opts_(opts), t0_(std::chrono::steady_clock::now()) {}

  SolveResult take() { return std::move(out_); }

  void emit(long k, double kkt, double gap, double M, double gamma, double tau, bool restart,
            int backtracks) {
    out_.trace.records.push_back(
        {k, elapsed(), kkt, gap, M, gamma, tau, restart, backtracks});
  }

  void snapshot(const SolverState& st) {
    if (opts_.collect_states) out_.states.push_back(st);
    out_.final_state = st;
  }

  bool reached_tol(double kkt) const { return cfg_.kkt_tol > 0.0 && kkt <= cfg_.kkt_tol; }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

  void run_amg(const Vector& x0);
  void run_sd(const Vector& x0);
  void run_apg(const Vector& x0);

 private:
  const ObjectiveBundle& bundle_;
  const MethodConfig& cfg_;
  const RunOptions& opts_;
  std::chrono::steady_clock::time_point t0_;
  SolveResult out_;
};

inline void RunDriver::run_amg(const Vector& x0) {
  const bool restarting = method_uses_restart(cfg_.method);
  SolverState st;
  st.k = 0;
  st.x = x0;
  st.z = x0;
  st.gamma = cfg_.gamma0;
  st.M = cfg_.L_or_M0;
  st.prev_kkt = kkt_residual(bundle_, st.x, opts_.qp_tol);
  emit(0, *st.prev_kkt, 0.0, st.M, st.gamma, 0.0, false, 0);
  snapshot(st);
  for (long k = 0; k < cfg_.max_iters; ++k) {
    if (reached_tol(*st.prev_kkt)) break;
    try {
      AmgStep s;
      double m_next = st.M;
      int doublings = 0;
      if (cfg_.method == Method::AMG_QP) {
        s = amg_qp_step(bundle_, cfg_.mu, st.M, st.gamma, st.x, st.z, opts_.qp_tol);
      } else {
        BacktrackResult bt = backtrack(bundle_, cfg_.mu, st.M, st.gamma, st.x, st.z, opts_.qp_tol);
        s = std::move(bt.step);
        m_next = bt.M_next;
        doublings = bt.doublings;
      }
      if (opts_.observer) opts_.observer({k, cfg_.mu, m_next, st.gamma, &s, &st.x, &st.z});
      double kkt_next = kkt_residual(bundle_, s.x_next, opts_.qp_tol);
      // The speed test needs x_{k-1} and so skips the first step; the
      // residual test only needs the residual at x_k, which exists from the
      // start, and checking it at k = 0 is what keeps the recorded residual
      // column nonincreasing from row 0 on.
      const bool restart_ready = cfg_.method == Method::AMG_QP_ResR || k >= 1;
      const bool fire = restarting && restart_ready &&
                        restart_check(cfg_.method == Method::AMG_QP_SR ? RestartRule::SR
                                                                       : RestartRule::ResR,
                                      st, s.x_next, kkt_next);
      st.M = m_next;
      st.tau = s.tau;
      if (fire) {
        st = apply_restart(st, cfg_.gamma0);
        st.tau = s.tau;
        // same point, so the recorded residual is carried over bit-exactly
        emit(st.k, *st.prev_kkt, 0.0, st.M, st.gamma, s.tau, true, doublings);
      } else {
        st.prev_x = std::move(st.x);
        st.x = std::move(s.x_next);
        st.z = std::move(s.z_next);
        st.gamma = s.gamma_next;
        st.k = k + 1;
        st.prev_kkt = kkt_next;
        emit(st.k, kkt_next, (st.x - *st.prev_x).norm(), st.M, st.gamma, s.tau, false, doublings);
      }
      snapshot(st);
    } catch (const std::exception& e) {
      throw SolverFailure(k, "iteration " + std::to_string(k) + ": " + e.what());
    }
  }
}

inline void RunDriver::run_sd(const Vector& x0) {
  SolverState st;
  st.x = x0;
  st.z = x0;
  st.gamma = cfg_.gamma0;
  st.M = cfg_.L_or_M0;
  double gap = 0.0;
  int doublings = 0;
  for (long k = 0;; ++k) {
    try {
      const Matrix jac = eval_jacobian(bundle_, st.x);
      const Vector d = -hull_project(jac, Vector::Zero(bundle_.n), opts_.qp_tol).point;
      const double kkt = d.norm();
      st.k = k;
      st.prev_kkt = kkt;
      emit(k, kkt, gap, st.M, 0.0, st.tau, false, doublings);
      snapshot(st);
      if (k == cfg_.max_iters || reached_tol(kkt)) break;
      const Vector f_x = eval_objectives(bundle_, st.x);
      Vector xp;
      int i = 0;
      for (;; ++i) {
        if (i > 60)
          throw BacktrackFailure(
              "backtrack: no acceptance after 60 doublings; oracle non-smooth or corrupted");
        const double m_trial = std::ldexp(st.M, i);
        xp = st.x + d / m_trial;
        const Vector f_xp = eval_objectives(bundle_, xp);
        if (curvature_test(f_xp, f_x, jac, xp, st.x, m_trial)) break;
      }
      st.M = std::ldexp(st.M, i);
      st.tau = 1.0 / st.M;
      doublings = i;
      gap = (xp - st.x).norm();
      st.prev_x = std::move(st.x);
      st.x = std::move(xp);
      st.z = st.x;
    } catch (const std::exception& e) {
      throw SolverFailure(k, "iteration " + std::to_string(k) + ": " + e.what());
    }
  }
}

inline void RunDriver::run_apg(const Vector& x0) {
  SolverState st;
  st.x = x0;
  st.z = x0;
  st.gamma = cfg_.gamma0;
  st.M = cfg_.L_or_M0;
  double theta = cfg_.theta0;
  Vector y = x0;
  st.prev_kkt = kkt_residual(bundle_, st.x, opts_.qp_tol);
  emit(0, *st.prev_kkt, 0.0, st.M, 0.0, 0.0, false, 0);
  snapshot(st);
  for (long k = 0; k < cfg_.max_iters; ++k) {
    if (reached_tol(*st.prev_kkt)) break;
    try {
      const Matrix jac_y = eval_jacobian(bundle_, y);
      const Vector f_y = eval_objectives(bundle_, y);
      const Vector f_x = eval_objectives(bundle_, st.x);
      const Vector c = f_x - f_y;
      Vector xp;
      double tau = 0.0;
      int i = 0;
      for (;; ++i) {
        if (i > 60)
          throw BacktrackFailure(
              "backtrack: no acceptance after 60 doublings; oracle non-smooth or corrupted");
        const double m_trial = std::ldexp(st.M, i);
        tau = 1.0 / m_trial;
        const Matrix q = tau * (jac_y.transpose() * jac_y);
        const Vector lambda = simplex_qp(q, c, opts_.qp_tol).weights.lambda;
        xp = y - tau * (jac_y * lambda);
        const Vector f_xp = eval_objectives(bundle_, xp);
        if (curvature_test(f_xp, f_y, jac_y, xp, y, m_trial)) break;
      }
      st.M = std::ldexp(st.M, i);
      const double theta_next = apg_theta_next(theta);
      y = xp + theta_next * (1.0 / theta - 1.0) * (xp - st.x);
      // the auxiliary momentum sequence, tracked for state snapshots
      st.z = xp + (1.0 / theta - 1.0) * (xp - st.x);
      theta = theta_next;
      const double gap = (xp - st.x).norm();
      st.prev_x = std::move(st.x);
      st.x = std::move(xp);
      st.tau = tau;
      st.k = k + 1;
      st.prev_kkt = kkt_residual(bundle_, st.x, opts_.qp_tol);
      emit(st.k, *st.prev_kkt, gap, st.M, 0.0, tau, false, i);
      snapshot(st);
    } catch (const std::exception& e) {
      throw SolverFailure(k, "iteration " + std::to_string(k) + ": " + e.what());
    }
  }
}

}  // namespace detail

/// Drives the selected method from x0 (with z0 = x0) until max_iters or the
/// KKT stopping tolerance, recording one trace row per iterate. Deterministic
/// in everything but the wall_seconds column.
inline SolveResult run(const ObjectiveBundle& bundle, const MethodConfig& cfg, const Vector& x0,
                       const RunOptions& opts = {}) {
  validate(cfg);
  require(x0.size() == bundle.n, "run: x0 has wrong dimension");
  require_finite(x0, "run: x0");
  detail::RunDriver driver(bundle, cfg, opts);
  switch (cfg.method) {
    case Method::SD: driver.run_sd(x0); break;
    case Method::APG: driver.run_apg(x0); break;
    default: driver.run_amg(x0); break;
  }
  return driver.take();
}

}  // namespace mopt
