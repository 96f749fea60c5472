// SPDX-License-Identifier: MIT
/// \file kkt_sensitivity.hpp
/// \brief First- and second-order parametric sensitivities of NLP solutions.
///
/// At a solution with strict complementarity the stacked optimality system
///
///   F(xi, p) = ( grad_z L,  h,  lambda .* g ) = 0,   xi = (z, lambda, nu),
///
/// defines xi implicitly as a smooth function of the parameter p.
/// Differentiating once gives the linear system
///
///   K dxi/dp = -R,     K = dF/dxi,   R = dF/dp,
///
/// and differentiating again shows that the second derivative along the
/// parameter pair (j, k) solves K S_jk = -C_jk, where C_jk is the second
/// directional derivative of F in the *combined* primal-dual/parameter
/// directions t_j = (dxi/dp_j, e_j).  Both systems share one factorization
/// of K, so second-order information costs little more than extra
/// right-hand sides once the combined directions are known.

#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "mpcqn/ip_solver.hpp"
#include "mpcqn/nlp.hpp"

namespace mpcqn {

struct SensOptions {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double comp_margin = 1e-7;  ///< strict complementarity guard: every row
                              ///< must have max(lambda_i, -g_i) above this
  std::size_t param_offset = 0;    ///< first parameter differentiated against
  std::size_t param_count = npos;  ///< how many parameters (npos: all remaining)
  bool force_generic = false;  ///< ignore bilinear structure (cross-checking)
};

/// dxi*/dp and the reusable KKT factorization it was computed from.
struct FirstOrderSensitivity {
  Eigen::MatrixXd xi_p;  ///< n_xi x count; row blocks (z, lambda, nu)
  Eigen::PartialPivLU<Eigen::MatrixXd> kkt_lu;  ///< factorization of dF/dxi
  Eigen::VectorXd g;     ///< inequality values at the solution
  std::size_t n_z = 0, n_g = 0, n_h = 0;
  std::size_t offset = 0, count = 0;

  auto z_block() const { return xi_p.topRows(static_cast<Eigen::Index>(n_z)); }
  auto lambda_block() const {
    return xi_p.middleRows(static_cast<Eigen::Index>(n_z),
                           static_cast<Eigen::Index>(n_g));
  }
  auto nu_block() const { return xi_p.bottomRows(static_cast<Eigen::Index>(n_h)); }
};

/// d2xi*/dp_j dp_k for every unordered parameter pair, stored column-wise.
struct SecondOrderSensitivity {
  Eigen::MatrixXd S;  ///< n_xi x count(count+1)/2
  std::size_t count = 0;

  std::size_t pair_index(std::size_t j, std::size_t k) const {
    if (j > k) std::swap(j, k);
    return j * count - j * (j + 1) / 2 + k;
  }

  /// The symmetric count x count matrix d2 xi_row / dp dp.
  Eigen::MatrixXd component(std::size_t row) const {
    Eigen::MatrixXd m(count, count);
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t k = j; k < count; ++k) {
        const double v = S(static_cast<Eigen::Index>(row),
                           static_cast<Eigen::Index>(pair_index(j, k)));
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
        m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
      }
    }
    return m;
  }
};

/// Differentiates the solution once.  Throws SingularKktError when strict
/// complementarity fails (margin in opts) or the KKT matrix is singular.
/// `cache` may supply the frozen coefficient matrices of a quadratic
/// instance (same parameter!) to skip all structure sweeps.
FirstOrderSensitivity first_order_sensitivity(const ParamNlp& nlp,
                                              const PrimalDualSolution& sol,
                                              const Eigen::VectorXd& p,
                                              const SensOptions& opts = {},
                                              const QpCache* cache = nullptr);

/// Differentiates the solution twice, reusing the first-order results.
/// Uses the problem's bilinear structure when present (unless forced
/// generic), otherwise third-order forward sweeps of the Lagrangian.
SecondOrderSensitivity second_order_sensitivity(const ParamNlp& nlp,
                                                const PrimalDualSolution& sol,
                                                const Eigen::VectorXd& p,
                                                const FirstOrderSensitivity& fo,
                                                const SensOptions& opts = {});

}  // namespace mpcqn
