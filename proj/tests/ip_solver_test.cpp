// SPDX-License-Identifier: MIT
/// \file ip_solver_test.cpp
/// \brief Interior-point solver vs. independent reference solvers.

#include <doctest.h>

#include <cmath>

#include "mpcqn/ip_solver.hpp"
#include "oracles.hpp"
#include "problems.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using mpcqn::IpOptions;
using mpcqn::IpSolver;
using mpcqn::SolveStatus;

namespace {

const VectorXd kNoParam = VectorXd(0);

}  // namespace

TEST_CASE("random QPs match the enumeration oracle to tight accuracy") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto qp = testprob::random_qp(seed, 4, 1, 8);
    const auto ref = oracle::solve_qp_enumerate(qp.Q, qp.c, qp.A, qp.b, qp.G, qp.d);
    REQUIRE(ref.found);

    const IpSolver solver(testprob::qp_nlp(qp));
    const auto sol = solver.solve(kNoParam);
    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.kkt_error <= 1e-9);
    CHECK((sol.z - ref.z).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((sol.lambda - ref.lambda).cwiseAbs().maxCoeff() < 1e-7);
    if (ref.nu.size() > 0) {
      CHECK((sol.nu - ref.nu).cwiseAbs().maxCoeff() < 1e-7);
    }
    CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-9));
    // Slacks are the constraint gaps.
    CHECK((sol.slack - (qp.d - qp.G * sol.z)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("a medium QP matches the active-set oracle") {
  const auto qp = testprob::random_qp(31, 12, 3, 30);
  const auto ref = oracle::solve_qp_active_set(qp.Q, qp.c, qp.A, qp.b, qp.G, qp.d,
                                               qp.z_strict);
  REQUIRE(ref.found);

  const IpSolver solver(testprob::qp_nlp(qp));
  const auto sol = solver.solve(kNoParam);
  REQUIRE(sol.status == SolveStatus::Converged);
  CHECK((sol.z - ref.z).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((sol.lambda - ref.lambda).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-10));
}

TEST_CASE("unconstrained quartic converges to the cube root") {
  const IpSolver solver(testprob::quartic_nlp());
  VectorXd p(1), z0(1);
  p << 1.0;
  z0 << 1.5;
  const auto sol = solver.solve(p, z0);
  REQUIRE(sol.status == SolveStatus::Converged);
  CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-10));

  p << 8.0;
  z0 << 2.5;
  const auto sol8 = solver.solve(p, z0);
  REQUIRE(sol8.status == SolveStatus::Converged);
  CHECK(sol8.z[0] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("equality-only problem hits the analytic projection") {
  // min ½|z|² s.t. z0 + z1 = 1: z = (½, ½), nu = -½.
  testprob::QpData qp;
  qp.Q = MatrixXd::Identity(2, 2);
  qp.c = VectorXd::Zero(2);
  qp.A = MatrixXd(1, 2);
  qp.A << 1, 1;
  qp.b = VectorXd(1);
  qp.b << 1;
  qp.G = MatrixXd(0, 2);
  qp.d = VectorXd(0);
  qp.z_strict = VectorXd::Zero(2);

  const IpSolver solver(testprob::qp_nlp(qp));
  const auto sol = solver.solve(kNoParam);
  REQUIRE(sol.status == SolveStatus::Converged);
  CHECK(sol.z[0] == doctest::Approx(0.5).epsilon(1e-11));
  CHECK(sol.z[1] == doctest::Approx(0.5).epsilon(1e-11));
  CHECK(sol.nu[0] == doctest::Approx(-0.5).epsilon(1e-11));
}

TEST_CASE("warm starts cut the iteration count") {
  const auto qp = testprob::random_qp(5, 6, 1, 10);
  const IpSolver solver(testprob::qp_nlp(qp));
  const auto cold = solver.solve(kNoParam);
  REQUIRE(cold.status == SolveStatus::Converged);
  const auto warm = solver.solve(kNoParam, VectorXd(), &cold);
  REQUIRE(warm.status == SolveStatus::Converged);
  CHECK(warm.iterations <= 8);
  CHECK(warm.iterations < cold.iterations);
  CHECK((warm.z - cold.z).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cached quadratic path equals the generic path") {
  const auto qp = testprob::random_qp(11, 5, 2, 9);
  auto nlp_generic = testprob::qp_nlp(qp);
  nlp_generic.quadratic = false;  // force sweep-based assembly
  const IpSolver generic(nlp_generic);
  const IpSolver cached(testprob::qp_nlp(qp));

  const auto a = generic.solve(kNoParam);
  const auto b = cached.solve(kNoParam);
  REQUIRE(a.status == SolveStatus::Converged);
  REQUIRE(b.status == SolveStatus::Converged);
  CHECK((a.z - b.z).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-11));
}

TEST_CASE("cache refresh tracks translation-only parameter changes") {
  // min ½ zᵀQz - pᵀz has solution Q⁻¹p; W and the (empty) constraint
  // Jacobians never change with p, so refreshing constants suffices.
  MatrixXd Q(3, 3);
  Q << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const IpSolver solver(testprob::linear_solution_nlp(Q));

  VectorXd p1(3), p2(3);
  p1 << 1, -2, 0.5;
  p2 << -0.3, 0.8, 2.0;

  auto cache = solver.build_cache(p1);
  const auto s1 = solver.solve_cached(cache);
  REQUIRE(s1.status == SolveStatus::Converged);
  CHECK((Q * s1.z - p1).cwiseAbs().maxCoeff() < 1e-9);

  solver.refresh_cache(cache, p2);
  const auto s2 = solver.solve_cached(cache, VectorXd(), &s1);
  REQUIRE(s2.status == SolveStatus::Converged);
  CHECK((Q * s2.z - p2).cwiseAbs().maxCoeff() < 1e-9);

  const auto direct = solver.solve(p2);
  CHECK((s2.z - direct.z).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("iteration cap reports max-iterations") {
  const auto qp = testprob::random_qp(2, 4, 0, 6);
  IpOptions opts;
  opts.max_iter = 1;
  const IpSolver solver(testprob::qp_nlp(qp), opts);
  const auto sol = solver.solve(kNoParam);
  CHECK(sol.status == SolveStatus::MaxIterations);
  CHECK(!sol.converged());
}

TEST_CASE("solver rejects dimension mismatches") {
  const IpSolver solver(testprob::quartic_nlp());
  CHECK_THROWS_AS(solver.solve(VectorXd(0)), mpcqn::ConfigError);
}
