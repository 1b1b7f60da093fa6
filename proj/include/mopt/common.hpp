#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace mopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// An objective oracle produced a non-finite value; carries which objective.
class EvalError : public std::runtime_error {
 public:
  EvalError(Index objective, const std::string& what)
      : std::runtime_error(what), objective_(objective) {}
  Index objective() const { return objective_; }

 private:
  Index objective_;
};

/// Simplex QP ran out of iterations; carries the best iterate seen.
class QpFailure : public std::runtime_error {
 public:
  QpFailure(Vector best, double res, const std::string& what)
      : std::runtime_error(what), best_lambda(std::move(best)), residual(res) {}
  Vector best_lambda;
  double residual;
};

/// Backtracking doubled the curvature estimate past its budget.
class BacktrackFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver loop failed; carries the iteration that raised.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(long iteration, const std::string& what)
      : std::runtime_error(what), iteration(iteration) {}
  long iteration;
};

/// A flow trajectory left the finite range; carries the offending time.
class FlowBlowup : public std::runtime_error {
 public:
  FlowBlowup(double t, const std::string& what) : std::runtime_error(what), time(t) {}
  double time;
};

class EmptyReference : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad experiment configuration or unusable output location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const Vector& v, const std::string& name) {
  require(v.allFinite(), name + " must be finite");
}

/// Fixed float formatting for all file output.
inline std::string fmt_e(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

}  // namespace mopt
