// SPDX-License-Identifier: MIT
/// \file kkt_sensitivity_test.cpp
/// \brief Solution sensitivities vs. closed forms and finite differences.

#include <doctest.h>

#include <cmath>

#include "mpcqn/ip_solver.hpp"
#include "mpcqn/kkt_sensitivity.hpp"
#include "oracles.hpp"
#include "problems.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace mpcqn;

namespace {

VectorXd stack_xi(const PrimalDualSolution& sol) {
  VectorXd xi(sol.z.size() + sol.lambda.size() + sol.nu.size());
  xi << sol.z, sol.lambda, sol.nu;
  return xi;
}

/// Finite-difference Jacobian of the solution map p -> xi*(p).
MatrixXd fd_solution_jacobian(const IpSolver& solver, const VectorXd& p,
                              const PrimalDualSolution& base, double step) {
  return oracle::fd_jacobian(
      [&](const VectorXd& pt) {
        const auto sol = solver.solve(pt, VectorXd(), &base);
        REQUIRE(sol.converged());
        return stack_xi(sol);
      },
      p, step);
}

/// Curved test problem: nonquadratic objective, quadratic equality,
/// one active and one inactive inequality, parameters in all three maps.
ParamNlp curved_nlp() {
  ParamNlp nlp;
  nlp.n_z = 3;
  nlp.n_h = 1;
  nlp.n_g = 2;
  nlp.n_p = 2;
  nlp.phi = SmoothMap(5, 1, [](auto in, auto out) {
    const auto &z0 = in[0], &z1 = in[1], &z2 = in[2], &p0 = in[3], &p1 = in[4];
    out[0] = (z0 * z0 + z1 * z1 + z2 * z2) * 0.5 + z0 * z0 * z0 * 0.1 +
             p0 * z0 * z1 + z2 + p1 * z2 * z2 * 0.2;
  });
  nlp.h = SmoothMap(5, 1, [](auto in, auto out) {
    out[0] = in[0] + in[1] * in[1] * 0.5 + in[3] * 0.3 - 0.8;
  });
  nlp.g = SmoothMap(5, 2, [](auto in, auto out) {
    out[0] = in[3] * in[3] * 0.1 + 0.2 - in[2];
    out[1] = in[1] - 5.0;
  });
  return nlp;
}

/// Constraint coefficients affine in p (bilinear z-p coupling), quadratic
/// objective with a z-p cross block: exercises every fast-path term.
ParamNlp bilinear_nlp() {
  ParamNlp nlp;
  nlp.n_z = 3;
  nlp.n_h = 1;
  nlp.n_g = 1;
  nlp.n_p = 2;
  nlp.quadratic = true;
  MatrixXd P(3, 2);
  P << 0.1, -0.2, 0.3, 0.05, -0.15, 0.25;
  nlp.phi = SmoothMap(5, 1, [P](auto in, auto out) {
    auto acc = (in[0] * in[0] + in[1] * in[1] + in[2] * in[2]) * 0.5 -
               (in[0] + in[1] + in[2]) * 2.0;
    for (int i = 0; i < 3; ++i) {
      for (int q = 0; q < 2; ++q) acc += in[i] * in[3 + q] * P(i, q);
    }
    out[0] = acc;
  });
  nlp.h = SmoothMap(5, 1, [](auto in, auto out) {
    const auto &p0 = in[3], &p1 = in[4];
    out[0] = in[0] * (p0 * 0.2) + in[1] + in[2] * (p1 * 0.5 + 0.4) - 1.0 +
             p0 * 0.3 - p1 * 0.1 + p0 * p0 * 0.4;
  });
  nlp.g = SmoothMap(5, 1, [](auto in, auto out) {
    const auto &p0 = in[3], &p1 = in[4];
    out[0] = in[0] + in[1] * (p0 * 0.3) - 1.0 + p1 * 0.2 + p0 * p1 * 0.1;
  });
  BilinearStructure bil;
  bil.h_cross = {{0, 0, 0, 0.2}, {0, 2, 1, 0.5}};
  bil.g_cross = {{0, 1, 0, 0.3}};
  bil.phi_zp = P;
  nlp.bilinear = bil;
  return nlp;
}

void check_close(const MatrixXd& got, const MatrixXd& want, double tol) {
  REQUIRE(got.rows() == want.rows());
  REQUIRE(got.cols() == want.cols());
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  CHECK((got - want).cwiseAbs().maxCoeff() <= tol * scale);
}

}  // namespace

TEST_CASE("linear solution map: first order is the inverse matrix, second order zero") {
  MatrixXd Q(3, 3);
  Q << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const auto nlp = testprob::linear_solution_nlp(Q);
  const IpSolver solver(nlp);
  VectorXd p(3);
  p << 1.0, -2.0, 0.5;
  const auto sol = solver.solve(p);
  REQUIRE(sol.converged());

  const auto fo = first_order_sensitivity(nlp, sol, p);
  const MatrixXd qinv = Q.inverse();
  check_close(MatrixXd(fo.z_block()), qinv, 1e-8);

  const auto so = second_order_sensitivity(nlp, sol, p, fo);
  CHECK(so.S.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("scalar quartic: both sensitivity orders match the closed form") {
  const auto nlp = testprob::quartic_nlp();
  const IpSolver solver(nlp);
  VectorXd p(1), z0(1);
  p << 1.0;
  z0 << 1.5;
  const auto sol = solver.solve(p, z0);
  REQUIRE(sol.converged());

  const auto fo = first_order_sensitivity(nlp, sol, p);
  CHECK(fo.xi_p(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-8));

  const auto so = second_order_sensitivity(nlp, sol, p, fo);
  CHECK(so.S(0, 0) == doctest::Approx(-2.0 / 9.0).epsilon(1e-8));
}

TEST_CASE("active bound: primal and dual track the parameter one-to-one") {
  const auto nlp = testprob::active_bound_nlp();
  const IpSolver solver(nlp);
  VectorXd p(1);
  p << 0.7;
  const auto sol = solver.solve(p);
  REQUIRE(sol.converged());
  REQUIRE(sol.lambda[0] > 0.5);

  const auto fo = first_order_sensitivity(nlp, sol, p);
  CHECK(fo.xi_p(0, 0) == doctest::Approx(1.0).epsilon(1e-8));   // dz/dp
  CHECK(fo.xi_p(1, 0) == doctest::Approx(1.0).epsilon(1e-8));   // dlambda/dp

  const auto so = second_order_sensitivity(nlp, sol, p, fo);
  CHECK(so.S.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("degenerate complementarity is rejected") {
  const auto nlp = testprob::active_bound_nlp();
  // At p = 0 the constraint is active with zero multiplier: the exact
  // solution sits on the boundary of differentiability.
  PrimalDualSolution sol;
  sol.z = VectorXd::Zero(1);
  sol.lambda = VectorXd::Zero(1);
  sol.nu = VectorXd(0);
  sol.slack = VectorXd::Zero(1);
  sol.status = SolveStatus::Converged;
  const VectorXd p = VectorXd::Zero(1);
  CHECK_THROWS_AS(first_order_sensitivity(nlp, sol, p), SingularKktError);
}

TEST_CASE("parameter selection is validated") {
  const auto nlp = testprob::quartic_nlp();
  const IpSolver solver(nlp);
  VectorXd p(1);
  p << 1.0;
  const auto sol = solver.solve(p, VectorXd::Constant(1, 1.5));
  SensOptions opts;
  opts.param_offset = 1;
  CHECK_THROWS_AS(first_order_sensitivity(nlp, sol, p, opts), ConfigError);
  opts.param_offset = 0;
  opts.param_count = 2;
  CHECK_THROWS_AS(first_order_sensitivity(nlp, sol, p, opts), ConfigError);
}

TEST_CASE("curved problem: sensitivities match finite differences of the solution") {
  const auto nlp = curved_nlp();
  const IpSolver solver(nlp);
  VectorXd p(2), z0(3);
  p << 0.3, -0.2;
  z0 << 0.5, 0.5, 0.3;
  const auto sol = solver.solve(p, z0);
  REQUIRE(sol.converged());
  REQUIRE(sol.lambda[0] > 0.5);         // lower bound on z2 is active
  REQUIRE(-sol.z[1] + 5.0 > 1.0);       // box row stays inactive

  const auto fo = first_order_sensitivity(nlp, sol, p);
  const MatrixXd fd1 = fd_solution_jacobian(solver, p, sol, 1e-5);
  for (int q = 0; q < 2; ++q) {
    const double scale = std::max(1.0, fd1.col(q).cwiseAbs().maxCoeff());
    CHECK((fo.xi_p.col(q) - fd1.col(q)).cwiseAbs().maxCoeff() <= 1e-4 * scale);
  }

  // Second order vs. finite differences of the first-order map.
  const auto so = second_order_sensitivity(nlp, sol, p, fo);
  const double step = 1e-4;
  for (std::size_t k = 0; k < 2; ++k) {
    VectorXd pp = p, pm = p;
    pp[static_cast<Eigen::Index>(k)] += step;
    pm[static_cast<Eigen::Index>(k)] -= step;
    const auto solp = solver.solve(pp, VectorXd(), &sol);
    const auto solm = solver.solve(pm, VectorXd(), &sol);
    REQUIRE(solp.converged());
    REQUIRE(solm.converged());
    const auto fop = first_order_sensitivity(nlp, solp, pp);
    const auto fom = first_order_sensitivity(nlp, solm, pm);
    const MatrixXd dfo = (fop.xi_p - fom.xi_p) / (2.0 * step);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto col = so.S.col(static_cast<Eigen::Index>(so.pair_index(j, k)));
      const double scale = std::max(1.0, dfo.col(j).cwiseAbs().maxCoeff());
      CHECK((col - dfo.col(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff() <=
            1e-3 * scale);
    }
  }
}

TEST_CASE("bilinear structure reproduces the generic path exactly") {
  const auto nlp = bilinear_nlp();
  const IpSolver solver(nlp);
  VectorXd p(2);
  p << 0.2, -0.4;
  const auto sol = solver.solve(p);
  REQUIRE(sol.converged());
  REQUIRE(sol.lambda[0] > 0.05);  // inequality is genuinely active

  SensOptions generic;
  generic.force_generic = true;

  const auto fo_fast = first_order_sensitivity(nlp, sol, p);
  const auto fo_gen = first_order_sensitivity(nlp, sol, p, generic);
  check_close(fo_fast.xi_p, fo_gen.xi_p, 1e-10);

  // The frozen-coefficient cache must give the same blocks.
  const auto cache = solver.build_cache(p);
  const auto fo_cached = first_order_sensitivity(nlp, sol, p, {}, &cache);
  check_close(fo_cached.xi_p, fo_fast.xi_p, 1e-10);

  const auto so_fast = second_order_sensitivity(nlp, sol, p, fo_fast);
  const auto so_gen = second_order_sensitivity(nlp, sol, p, fo_gen, generic);
  check_close(so_fast.S, so_gen.S, 1e-9);

  // Both agree with finite differences of the solution map.
  const MatrixXd fd1 = fd_solution_jacobian(solver, p, sol, 1e-5);
  for (int q = 0; q < 2; ++q) {
    const double scale = std::max(1.0, fd1.col(q).cwiseAbs().maxCoeff());
    CHECK((fo_fast.xi_p.col(q) - fd1.col(q)).cwiseAbs().maxCoeff() <= 1e-4 * scale);
  }
  const double step = 1e-4;
  for (std::size_t k = 0; k < 2; ++k) {
    VectorXd pp = p, pm = p;
    pp[static_cast<Eigen::Index>(k)] += step;
    pm[static_cast<Eigen::Index>(k)] -= step;
    const auto solp = solver.solve(pp, VectorXd(), &sol);
    const auto solm = solver.solve(pm, VectorXd(), &sol);
    const auto fop = first_order_sensitivity(nlp, solp, pp);
    const auto fom = first_order_sensitivity(nlp, solm, pm);
    const MatrixXd dfo = (fop.xi_p - fom.xi_p) / (2.0 * step);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto col = so_fast.S.col(static_cast<Eigen::Index>(so_fast.pair_index(j, k)));
      const double scale = std::max(1.0, dfo.col(j).cwiseAbs().maxCoeff());
      CHECK((col - dfo.col(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff() <=
            1e-3 * scale);
    }
  }
}

TEST_CASE("parameter sub-selection matches the corresponding full columns") {
  const auto nlp = bilinear_nlp();
  const IpSolver solver(nlp);
  VectorXd p(2);
  p << 0.2, -0.4;
  const auto sol = solver.solve(p);
  REQUIRE(sol.converged());

  const auto full = first_order_sensitivity(nlp, sol, p);
  SensOptions sel;
  sel.param_offset = 1;
  sel.param_count = 1;
  const auto part = first_order_sensitivity(nlp, sol, p, sel);
  REQUIRE(part.count == 1);
  check_close(part.xi_p, full.xi_p.col(1), 1e-12);

  const auto so_part = second_order_sensitivity(nlp, sol, p, part, sel);
  const auto so_full = second_order_sensitivity(nlp, sol, p, full);
  check_close(so_part.S, so_full.S.col(static_cast<Eigen::Index>(so_full.pair_index(1, 1))),
              1e-12);
}

TEST_CASE("pair index enumerates the upper triangle") {
  SecondOrderSensitivity so;
  so.count = 4;
  std::size_t expect = 0;
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t k = j; k < 4; ++k) {
      CHECK(so.pair_index(j, k) == expect);
      CHECK(so.pair_index(k, j) == expect);
      ++expect;
    }
  }
  CHECK(expect == 10);
}
