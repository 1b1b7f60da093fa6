#include <catch2/catch_amalgamated.hpp>

#include "mopt/diagnostics.hpp"
#include "test_util.hpp"

using namespace mopt;

namespace {

ObjectiveBundle convex_pair(std::uint64_t seed, Index n) {
  RngStream rng(seed, "diag", "spd");
  std::vector<Matrix> h = {test_util::seeded_spd(rng, n, 0.5, 3.0),
                           test_util::seeded_spd(rng, n, 0.5, 3.0)};
  RngStream crng(seed, "diag", "centers");
  std::vector<Vector> c = {crng.uniform_vector(n, -1.0, 1.0), crng.uniform_vector(n, -1.0, 1.0)};
  return test_util::quadratic_bundle(std::move(h), std::move(c), 0.5, 3.0);
}

}  // namespace

TEST_CASE("gap hand cases") {
  auto bundle = convex_pair(1, 4);
  const Vector x = Vector::Ones(4);
  REQUIRE(gap(bundle, x, x) == 0.0);

  auto scalar = test_util::scalar_half_square();
  REQUIRE_THAT(gap(scalar, Vector::Constant(1, 2.0), Vector::Constant(1, 1.0)),
               Catch::Matchers::WithinAbs(1.5, 1e-15));

  // Values (3,1) against (1,2): min(2, -1) = -1.
  Matrix g = Matrix::Zero(1, 2);
  auto affine = test_util::affine_bundle(g, (Vector(2) << 3.0, 1.0).finished());
  auto affine_z = test_util::affine_bundle(g, (Vector(2) << 1.0, 2.0).finished());
  const Vector fx = eval_objectives(affine, Vector::Zero(1));
  const Vector fz = eval_objectives(affine_z, Vector::Zero(1));
  REQUIRE((fx - fz).minCoeff() == -1.0);
}

TEST_CASE("gap is dominated by every per-objective difference") {
  auto bundle = convex_pair(2, 5);
  RngStream rng(2, "diag", "pts");
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = rng.uniform_vector(5, -2.0, 2.0);
    const Vector z = rng.uniform_vector(5, -2.0, 2.0);
    const double g = gap(bundle, x, z);
    const Vector diff = eval_objectives(bundle, x) - eval_objectives(bundle, z);
    for (Index j = 0; j < bundle.m; ++j) REQUIRE(g <= diff[j]);
  }
}

TEST_CASE("merit lower bound grows with the reference set") {
  auto bundle = convex_pair(3, 4);
  RngStream rng(3, "diag", "pts");
  const Vector x = rng.uniform_vector(4, -2.0, 2.0);

  ReferenceSet single;
  single.points.push_back({x, eval_objectives(bundle, x), 0.0});
  REQUIRE(merit_lower_bound(bundle, x, single) == 0.0);

  ReferenceSet larger = single;
  const Vector z = rng.uniform_vector(4, -2.0, 2.0);
  larger.points.push_back({z, eval_objectives(bundle, z), 0.0});
  REQUIRE(merit_lower_bound(bundle, x, larger) >= merit_lower_bound(bundle, x, single));
  for (const auto& ref : larger.points)
    REQUIRE(merit_lower_bound(bundle, x, larger) >= gap(bundle, x, ref.x));

  REQUIRE_THROWS_AS(merit_lower_bound(bundle, x, ReferenceSet{}), std::invalid_argument);
}

TEST_CASE("single-objective merit against the minimizer is the value gap") {
  auto scalar = test_util::scalar_half_square();
  ReferenceSet refs;
  refs.points.push_back({Vector::Zero(1), eval_objectives(scalar, Vector::Zero(1)), 0.0});
  const Vector x = Vector::Constant(1, 3.0);
  REQUIRE_THAT(merit_lower_bound(scalar, x, refs), Catch::Matchers::WithinAbs(4.5, 1e-15));
  REQUIRE(merit_lower_bound(scalar, x, refs) >= 0.0);
}

TEST_CASE("discrete lyapunov hand evaluation") {
  auto scalar = test_util::scalar_half_square();
  SolverState st;
  st.x = Vector::Constant(1, 2.0);
  st.z = Vector::Constant(1, 3.0);
  st.gamma = 0.5;
  const Vector z = Vector::Constant(1, 1.0);
  // f(2) - f(1) + 0.5 * 0.5 * |3 - 1|^2 = 1.5 + 1.0
  REQUIRE_THAT(lyapunov_discrete(scalar, st, z), Catch::Matchers::WithinAbs(2.5, 1e-15));

  // z = x_k = z_k collapses both terms.
  SolverState at_ref = st;
  at_ref.x = z;
  at_ref.z = z;
  REQUIRE(lyapunov_discrete(scalar, at_ref, z) == 0.0);

  // Doubling gamma doubles the quadratic term with the gap fixed.
  SolverState doubled = st;
  doubled.gamma = 1.0;
  const double quad_half = lyapunov_discrete(scalar, st, z) - gap(scalar, st.x, z);
  const double quad_full = lyapunov_discrete(scalar, doubled, z) - gap(scalar, doubled.x, z);
  REQUIRE_THAT(quad_full, Catch::Matchers::WithinRel(2.0 * quad_half, 1e-12));
}

TEST_CASE("contraction check is clean on a compliant run and flags corruption") {
  auto bundle = convex_pair(4, 6);
  RngStream rng(4, "diag", "x0");
  const Vector x0 = rng.uniform_vector(6, -2.0, 2.0);
  MethodConfig cfg;
  cfg.method = Method::AMG_QP_BT;
  cfg.mu = 0.5;
  cfg.L_or_M0 = 10.0;
  cfg.max_iters = 120;
  RunOptions opts;
  opts.collect_states = true;
  SolveResult res = run(bundle, cfg, x0, opts);

  // Reference: converge steepest descent to a critical point.
  const ReferenceSet refs = build_reference_set(bundle, 2, 100000);
  const Vector z = refs.points.front().x;
  REQUIRE(contraction_check(bundle, res, z).empty());

  // Zero-length transition list.
  SolveResult stub;
  MethodConfig none = cfg;
  none.max_iters = 0;
  stub = run(bundle, none, x0, opts);
  REQUIRE(contraction_check(bundle, stub, z).empty());

  // Corrupt one state: the momentum shift inflates E_40, so the transition
  // into index 40 must be flagged.
  res.states[40].z[0] += 100.0;
  const auto bad = contraction_check(bundle, res, z);
  REQUIRE_FALSE(bad.empty());
  bool found = false;
  for (long k : bad) found = found || k == 39;
  REQUIRE(found);

  SolveResult no_states = run(bundle, cfg, x0);
  REQUIRE_THROWS_AS(contraction_check(bundle, no_states, z), std::invalid_argument);
}

TEST_CASE("dominance filter hand cases") {
  std::vector<Vector> values;
  values.push_back((Vector(2) << 1.0, 2.0).finished());
  values.push_back((Vector(2) << 2.0, 1.0).finished());
  values.push_back((Vector(2) << 2.0, 2.0).finished());
  const auto keep = dominance_filter(values);
  REQUIRE(keep == std::vector<std::size_t>{0, 1});

  // Identical points never strictly dominate each other.
  std::vector<Vector> same(4, (Vector(2) << 1.0, 1.0).finished());
  REQUIRE(dominance_filter(same).size() == 4);

  // Scalar objectives: only the minimum survives.
  std::vector<Vector> scalars;
  for (double v : {3.0, 1.0, 2.0}) scalars.push_back(Vector::Constant(1, v));
  REQUIRE(dominance_filter(scalars) == std::vector<std::size_t>{1});
}

TEST_CASE("dominance filter agrees with pairwise brute force") {
  RngStream rng(5, "diag", "front");
  std::vector<Vector> values;
  for (int i = 0; i < 200; ++i) values.push_back(rng.uniform_vector(2, 0.0, 1.0));
  const auto keep = dominance_filter(values);

  std::vector<std::size_t> brute;
  for (std::size_t i = 0; i < values.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (i == j) continue;
      bool le = true, strict = false;
      for (Index d = 0; d < 2; ++d) {
        le = le && values[j][d] <= values[i][d];
        strict = strict || values[j][d] != values[i][d];
      }
      if (le && strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) brute.push_back(i);
  }
  REQUIRE(keep == brute);

  // The survivors form an antichain.
  for (std::size_t a : keep)
    for (std::size_t b : keep)
      if (a != b) {
        const bool dominates = (values[a].array() <= values[b].array()).all() &&
                               (values[a].array() != values[b].array()).any();
        REQUIRE_FALSE(dominates);
      }
}

TEST_CASE("reference set construction") {
  // Strongly convex scalar objective: the single reference is the minimizer.
  auto scalar = test_util::scalar_half_square();
  const ReferenceSet refs = build_reference_set(scalar, 3, 100000);
  REQUIRE_FALSE(refs.points.empty());
  for (const auto& p : refs.points) {
    REQUIRE(p.kkt_residual <= 1e-8);
    REQUIRE(std::abs(p.x[0]) <= 1e-7);
  }

  // A pair sharing one minimizer: every terminal point lands on it.
  RngStream rng(6, "diag", "spd");
  std::vector<Matrix> h = {test_util::seeded_spd(rng, 4, 0.5, 2.0),
                           test_util::seeded_spd(rng, 4, 0.8, 3.0)};
  const Vector c = rng.uniform_vector(4, -1.0, 1.0);
  auto shared = test_util::quadratic_bundle(std::move(h), {c, c}, 0.5, 3.0);
  const ReferenceSet common = build_reference_set(shared, 3, 200000);
  for (const auto& p : common.points) REQUIRE((p.x - c).norm() <= 1e-6);

  // Determinism replay.
  const ReferenceSet again = build_reference_set(shared, 3, 200000);
  REQUIRE(again.points.size() == common.points.size());
  for (std::size_t i = 0; i < again.points.size(); ++i)
    REQUIRE(again.points[i].x == common.points[i].x);

  // A zero budget cannot reach the bar from random starts.
  REQUIRE_THROWS_AS(build_reference_set(shared, 2, 0), EmptyReference);
}
