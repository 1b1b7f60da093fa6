#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mopt/solvers.hpp"

namespace mopt {

/// f(x; z) = min_j [f_j(x) - f_j(z)]; may be negative.
inline double gap(const ObjectiveBundle& bundle, const Vector& x, const Vector& z) {
  return (eval_objectives(bundle, x) - eval_objectives(bundle, z)).minCoeff();
}

/// An approximate weak Pareto point with its objective values and residual.
struct ReferencePoint {
  Vector x;
  Vector values;
  double kkt_residual = 0.0;
};

struct ReferenceSet {
  std::vector<ReferencePoint> points;
};

/// max over the reference points of gap(x; z) — a finite-sample lower bound
/// on the merit of x. Growing the reference set never decreases it.
inline double merit_lower_bound(const ObjectiveBundle& bundle, const Vector& x,
                                const ReferenceSet& refs) {
  require(!refs.points.empty(), "merit_lower_bound: reference set is empty");
  const Vector fx = eval_objectives(bundle, x);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& ref : refs.points) best = std::max(best, (fx - ref.values).minCoeff());
  return best;
}

/// E_k(z) = f(x_k; z) + gamma_k/2 |z_k - z|^2.
inline double lyapunov_discrete(const ObjectiveBundle& bundle, const SolverState& state,
                                const Vector& z) {
  return gap(bundle, state.x, z) + 0.5 * state.gamma * (state.z - z).squaredNorm();
}

/// Base indices k of transitions k -> k+1 where the Lyapunov decrease misses
/// E_{k+1} - E_k <= -tau_k E_{k+1} + 1e-9 (1 + |E_k|). Restart transitions
/// are skipped: the gamma reset breaks the between-step relation on purpose.
inline std::vector<long> contraction_check(const ObjectiveBundle& bundle, const SolveResult& run,
                                           const Vector& z) {
  require(!run.states.empty() && run.states.size() == run.trace.records.size(),
          "contraction_check: run must carry one state per trace row");
  std::vector<double> energy(run.states.size());
  for (std::size_t k = 0; k < run.states.size(); ++k)
    energy[k] = lyapunov_discrete(bundle, run.states[k], z);
  std::vector<long> violations;
  for (std::size_t k = 0; k + 1 < run.states.size(); ++k) {
    const TraceRow& row = run.trace.records[k + 1];
    if (row.restart_flag) continue;
    const double lhs = energy[k + 1] - energy[k];
    const double rhs = -row.tau * energy[k + 1] + 1e-9 * (1.0 + std::abs(energy[k]));
    if (lhs > rhs) violations.push_back(static_cast<long>(k));
  }
  return violations;
}

/// Indices of vectors not dominated by any other (componentwise <= with at
/// least one difference), in stable input order.
inline std::vector<std::size_t> dominance_filter(const std::vector<Vector>& values) {
  for (const auto& v : values) require_finite(v, "dominance_filter: value");
  auto dominates = [](const Vector& a, const Vector& b) {
    return (a.array() <= b.array()).all() && (a.array() != b.array()).any();
  };
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < values.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < values.size() && !dominated; ++j)
      if (j != i && dominates(values[j], values[i])) dominated = true;
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

struct ReferenceBuildOptions {
  std::uint64_t seed = 0;
  double box_lo = -2.0;
  double box_hi = 2.0;
  double M0 = 10.0;
  double residual_bar = 1e-8;
  double qp_tol = 1e-12;
};

/// Multi-start steepest descent: keeps the dominance-filtered terminal points
/// whose KKT residual clears the bar. Starts come from streams
/// (seed, "refset", start<i>).
inline ReferenceSet build_reference_set(const ObjectiveBundle& bundle, int n_starts, long budget,
                                        const ReferenceBuildOptions& opt = {}) {
  require(n_starts >= 1, "build_reference_set: need at least one start");
  require(budget >= 0, "build_reference_set: negative budget");
  std::vector<ReferencePoint> candidates;
  for (int s = 0; s < n_starts; ++s) {
    RngStream stream(opt.seed, "refset", "start" + std::to_string(s));
    const Vector x0 = stream.uniform_vector(bundle.n, opt.box_lo, opt.box_hi);
    MethodConfig cfg;
    cfg.method = Method::SD;
    cfg.mu = 0.0;
    cfg.L_or_M0 = opt.M0;
    cfg.max_iters = budget;
    cfg.kkt_tol = opt.residual_bar;
    RunOptions ro;
    ro.qp_tol = opt.qp_tol;
    const SolveResult res = run(bundle, cfg, x0, ro);
    const TraceRow& last = res.trace.records.back();
    if (last.kkt_residual <= opt.residual_bar)
      candidates.push_back({res.final_state.x, eval_objectives(bundle, res.final_state.x),
                            last.kkt_residual});
  }
  if (candidates.empty())
    throw EmptyReference("build_reference_set: no start reached residual " +
                         fmt_e(opt.residual_bar));
  std::vector<Vector> values;
  values.reserve(candidates.size());
  for (const auto& c : candidates) values.push_back(c.values);
  ReferenceSet out;
  for (std::size_t i : dominance_filter(values)) out.points.push_back(std::move(candidates[i]));
  return out;
}

}  // namespace mopt
