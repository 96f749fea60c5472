// SPDX-License-Identifier: MIT
/// \file oracle_test.cpp
/// \brief Self-checks of the reference solvers against hand-worked solutions.

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "problems.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd empty_mat(int cols) { return MatrixXd(0, cols); }
VectorXd empty_vec() { return VectorXd(0); }

}  // namespace

TEST_CASE("fd_jacobian matches an analytic Jacobian") {
  auto fn = [](const VectorXd& x) {
    VectorXd y(2);
    y << x[0] * x[0] + std::sin(x[1]), x[0] * x[1];
    return y;
  };
  VectorXd x(2);
  x << 0.6, -1.1;
  MatrixXd expected(2, 2);
  expected << 2 * x[0], std::cos(x[1]), x[1], x[0];
  const MatrixXd jac = oracle::fd_jacobian(fn, x, 1e-6);
  CHECK((jac - expected).cwiseAbs().maxCoeff() < 1e-9);

  VectorXd t(2);
  t << 0.5, 2.0;
  const VectorXd d = oracle::fd_dir(fn, x, t, 1e-6);
  CHECK((d - expected * t).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("enumeration solves hand-worked QPs") {
  SUBCASE("unconstrained") {
    MatrixXd Q = MatrixXd::Identity(2, 2);
    VectorXd c(2);
    c << -1, -2;
    const auto sol = oracle::solve_qp_enumerate(Q, c, empty_mat(2), empty_vec(),
                                                empty_mat(2), empty_vec());
    REQUIRE(sol.found);
    CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.z[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(-2.5).epsilon(1e-12));
  }

  SUBCASE("single equality") {
    // min ½|z|² s.t. z0 + z1 = 1  ->  z = (½, ½), nu = -½.
    MatrixXd Q = MatrixXd::Identity(2, 2);
    VectorXd c = VectorXd::Zero(2);
    MatrixXd A(1, 2);
    A << 1, 1;
    VectorXd b(1);
    b << 1;
    const auto sol = oracle::solve_qp_enumerate(Q, c, A, b, empty_mat(2), empty_vec());
    REQUIRE(sol.found);
    CHECK(sol.z[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.z[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.nu[0] == doctest::Approx(-0.5).epsilon(1e-12));
  }

  SUBCASE("active and inactive inequality") {
    // min ½|z - (2,0)|² s.t. z0 <= d.
    MatrixXd Q = MatrixXd::Identity(2, 2);
    VectorXd c(2);
    c << -2, 0;
    MatrixXd G(1, 2);
    G << 1, 0;
    VectorXd d(1);

    d << 1;  // active: z = (1, 0), lambda = 1
    auto sol = oracle::solve_qp_enumerate(Q, c, empty_mat(2), empty_vec(), G, d);
    REQUIRE(sol.found);
    CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.lambda[0] == doctest::Approx(1.0).epsilon(1e-12));

    d << 3;  // inactive: z = (2, 0), lambda = 0
    sol = oracle::solve_qp_enumerate(Q, c, empty_mat(2), empty_vec(), G, d);
    REQUIRE(sol.found);
    CHECK(sol.z[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.lambda[0] == doctest::Approx(0.0));
  }

  SUBCASE("box clip") {
    // min ½|z - t|² over [-1,1]² with t = (2, 0.3): z = (1, 0.3).
    MatrixXd Q = MatrixXd::Identity(2, 2);
    VectorXd c(2);
    c << -2, -0.3;
    MatrixXd G(4, 2);
    G << 1, 0, -1, 0, 0, 1, 0, -1;
    VectorXd d(4);
    d << 1, 1, 1, 1;
    const auto sol = oracle::solve_qp_enumerate(Q, c, empty_mat(2), empty_vec(), G, d);
    REQUIRE(sol.found);
    CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.z[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(sol.lambda[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.lambda.tail(3).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("active-set method agrees with enumeration on random QPs") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto qp = testprob::random_qp(seed, 4, 1, 8);
    const auto ref = oracle::solve_qp_enumerate(qp.Q, qp.c, qp.A, qp.b, qp.G, qp.d);
    const auto act = oracle::solve_qp_active_set(qp.Q, qp.c, qp.A, qp.b, qp.G,
                                                 qp.d, qp.z_strict);
    REQUIRE(ref.found);
    REQUIRE(act.found);
    CHECK((ref.z - act.z).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((ref.lambda - act.lambda).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(ref.objective == doctest::Approx(act.objective).epsilon(1e-10));
    // Primal feasibility and nonnegative multipliers.
    CHECK((qp.G * act.z - qp.d).maxCoeff() < 1e-9);
    CHECK((qp.A * act.z - qp.b).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(act.lambda.minCoeff() >= 0.0);
  }
}

TEST_CASE("active-set method scales to a few hundred rows") {
  const auto qp = testprob::random_qp(77, 30, 4, 150);
  const auto sol = oracle::solve_qp_active_set(qp.Q, qp.c, qp.A, qp.b, qp.G,
                                               qp.d, qp.z_strict);
  REQUIRE(sol.found);
  CHECK((qp.G * sol.z - qp.d).maxCoeff() < 1e-8);
  CHECK((qp.A * sol.z - qp.b).cwiseAbs().maxCoeff() < 1e-8);
  // KKT stationarity with the returned multipliers.
  const VectorXd station = qp.Q * sol.z + qp.c + qp.A.transpose() * sol.nu +
                           qp.G.transpose() * sol.lambda;
  CHECK(station.cwiseAbs().maxCoeff() < 1e-7);
  // Complementarity.
  const VectorXd slack = qp.d - qp.G * sol.z;
  CHECK((slack.array() * sol.lambda.array()).abs().maxCoeff() < 1e-7);
}
