#include <catch2/catch_amalgamated.hpp>

#include "mopt/rng.hpp"
#include "mopt/simplex_qp.hpp"

using namespace mopt;

namespace {

double qp_objective(const Matrix& q, const Vector& c, const Vector& lambda) {
  return 0.5 * lambda.dot(q * lambda) + c.dot(lambda);
}

/// Brute-force minimum of the QP objective over a uniform grid on the
/// 2- or 3-simplex with the given spacing.
double grid_min(const Matrix& q, const Vector& c, double spacing) {
  const Index m = c.size();
  const long steps = std::lround(1.0 / spacing);
  double best = std::numeric_limits<double>::infinity();
  Vector lambda(m);
  if (m == 2) {
    for (long i = 0; i <= steps; ++i) {
      lambda[0] = double(i) / steps;
      lambda[1] = 1.0 - lambda[0];
      best = std::min(best, qp_objective(q, c, lambda));
    }
    return best;
  }
  REQUIRE(m == 3);
  for (long i = 0; i <= steps; ++i)
    for (long j = 0; j <= steps - i; ++j) {
      lambda[0] = double(i) / steps;
      lambda[1] = double(j) / steps;
      lambda[2] = 1.0 - lambda[0] - lambda[1];
      best = std::min(best, qp_objective(q, c, lambda));
    }
  return best;
}

Matrix random_psd(RngStream& rng, Index m) {
  const Matrix r = rng.uniform_matrix(m, m, -1.0, 1.0);
  return r.transpose() * r;
}

}  // namespace

TEST_CASE("simplex projection hand cases") {
  Vector v(2);
  v << 2.0, 0.0;
  Vector want(2);
  want << 1.0, 0.0;
  REQUIRE((project_to_simplex(v) - want).norm() <= 1e-15);

  v << 0.3, 0.3;
  want << 0.5, 0.5;
  REQUIRE((project_to_simplex(v) - want).norm() <= 1e-15);

  v << -1.0, -1.0;
  REQUIRE((project_to_simplex(v) - want).norm() <= 1e-15);

  REQUIRE(project_to_simplex(Vector::Constant(1, -7.0))[0] == 1.0);
}

TEST_CASE("simplex projection lands on the simplex and is idempotent") {
  RngStream rng(3, "qp", "proj");
  for (int trial = 0; trial < 200; ++trial) {
    const Vector v = rng.uniform_vector(4, -3.0, 3.0);
    const Vector p = project_to_simplex(v);
    REQUIRE(p.minCoeff() >= 0.0);
    REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
    REQUIRE((project_to_simplex(p) - p).norm() <= 1e-12);
  }
}

TEST_CASE("singleton simplex always returns one") {
  const auto res = simplex_qp(Matrix::Constant(1, 1, 5.0), Vector::Constant(1, -2.0));
  REQUIRE(res.weights.lambda.size() == 1);
  REQUIRE(res.weights.lambda[0] == 1.0);
  REQUIRE(res.residual == 0.0);
}

TEST_CASE("identity objective is minimized at the barycenter") {
  const auto res = simplex_qp(Matrix::Identity(3, 3), Vector::Zero(3));
  REQUIRE((res.weights.lambda - Vector::Constant(3, 1.0 / 3.0)).norm() <= 1e-10);
}

TEST_CASE("qp objective matches a grid brute force") {
  RngStream rng(5, "qp", "grid");
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix q = random_psd(rng, 3);
    const Vector c = rng.uniform_vector(3, -1.0, 1.0);
    const auto res = simplex_qp(q, c);
    const double mine = qp_objective(q, c, res.weights.lambda);
    const double grid = grid_min(q, c, 1e-3);
    REQUIRE(mine <= grid + 1e-9);   // the grid is a feasible subset
    REQUIRE(grid - mine <= 1e-5);   // and resolves the optimum to 1e-5
  }
}

TEST_CASE("qp solution never loses to a vertex") {
  RngStream rng(7, "qp", "vertex");
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 2 + trial % 3;
    const Matrix q = random_psd(rng, m);
    const Vector c = rng.uniform_vector(m, -2.0, 2.0);
    const auto res = simplex_qp(q, c);
    const double mine = qp_objective(q, c, res.weights.lambda);
    for (Index j = 0; j < m; ++j)
      REQUIRE(mine <= qp_objective(q, c, Vector::Unit(m, j)) + 1e-9);
  }
}

TEST_CASE("weights satisfy the simplex invariants and the stationarity bound") {
  RngStream rng(9, "qp", "inv");
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix q = random_psd(rng, 3);
    const Vector c = rng.uniform_vector(3, -1.0, 1.0);
    const auto res = simplex_qp(q, c, 1e-12);
    const Vector& lambda = res.weights.lambda;
    REQUIRE(lambda.minCoeff() >= 0.0);
    REQUIRE(std::abs(lambda.sum() - 1.0) <= 1e-12);
    REQUIRE(res.residual <= 1e-12);
    // On O(1)-scale instances the internal rescaling is inert, so the raw
    // stationarity identity must hold as written.
    const Vector raw = lambda - project_to_simplex(lambda - (q * lambda + c));
    const double sigma = std::max({1.0, q.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
    REQUIRE(raw.norm() <= 1e-12 * sigma + 1e-13);
  }
}

TEST_CASE("degenerate psd instances still solve") {
  // Duplicate columns make Q rank one; the projected point is still unique.
  Matrix q(2, 2);
  q << 1.0, 1.0, 1.0, 1.0;
  Vector c(2);
  c << 0.5, 0.5;
  const auto res = simplex_qp(q, c);
  REQUIRE(std::abs(res.weights.lambda.sum() - 1.0) <= 1e-12);
  REQUIRE(qp_objective(q, c, res.weights.lambda) <= 1.0 + 1e-12);
}

TEST_CASE("invalid inputs are rejected") {
  Matrix q(2, 2);
  q << 1.0, 0.5, -0.5, 1.0;  // not symmetric
  REQUIRE_THROWS_AS(simplex_qp(q, Vector::Zero(2)), std::invalid_argument);
  REQUIRE_THROWS_AS(simplex_qp(Matrix::Identity(2, 2), Vector::Zero(2), 1e-15),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(simplex_qp(Matrix::Identity(2, 2), Vector::Zero(2), 1e-3),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(simplex_qp(Matrix::Identity(3, 3), Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("budget exhaustion reports the best iterate") {
  RngStream rng(11, "qp", "fail");
  const Matrix q = random_psd(rng, 3);
  const Vector c = rng.uniform_vector(3, -1.0, 1.0);
  try {
    simplex_qp(q, c, 1e-14, 2);
    FAIL("expected QpFailure");
  } catch (const QpFailure& e) {
    REQUIRE(e.best_lambda.size() == 3);
    REQUIRE(e.best_lambda.minCoeff() >= 0.0);
    REQUIRE(std::abs(e.best_lambda.sum() - 1.0) <= 1e-12);
    REQUIRE(e.residual > 0.0);
  }
}

TEST_CASE("solver is deterministic") {
  RngStream rng(13, "qp", "det");
  const Matrix q = random_psd(rng, 3);
  const Vector c = rng.uniform_vector(3, -1.0, 1.0);
  const auto a = simplex_qp(q, c);
  const auto b = simplex_qp(q, c);
  REQUIRE(a.weights.lambda == b.weights.lambda);
  REQUIRE(a.iterations == b.iterations);
}
