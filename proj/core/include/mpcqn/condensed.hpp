// SPDX-License-Identifier: MIT
/// \file condensed.hpp
/// \brief Fast action-only MPC solves via the condensed exact-penalty form.
///
/// Eliminating the predicted states x_k = M_k u + m_k(s) and minimizing the
/// nonnegative slacks out in closed form turns the soft-constrained MPC
/// problem of mpc.hpp into an unconstrained convex piecewise-quadratic in
/// the input sequence alone:
///
///   f(u) = 1/2 u'H u + c(s)'u + sum_i w_i max(0, a_i'u + beta_i's + b_i)
///
/// with H strictly positive definite.  A kink-tracking active-set Newton
/// method solves this exactly: it maintains the set of rows pinned at their
/// kink (r_i = 0) and the set classified as violated (r_i > 0), solves the
/// resulting equality-constrained QP through one Cholesky factorization of
/// H per parameter vector, and walks pattern changes with exact piecewise
/// line searches.
///
/// This path produces the same minimizer as the full transcription solved
/// by the interior-point method (the tests pin the agreement) at a small
/// fraction of the cost, which makes the large closed-loop sampling sweeps
/// (episode rollouts, test-set construction, evaluation) affordable.  It
/// provides actions and objectives only; solution sensitivities still come
/// from the interior-point path, which exposes multipliers.
///
/// Not thread-safe; give each worker its own copy.

#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mpcqn/mpc.hpp"

namespace mpcqn {

class CondensedPolicy {
 public:
  CondensedPolicy(OcpSpec spec, Eigen::VectorXd theta);
  ~CondensedPolicy();
  CondensedPolicy(CondensedPolicy&&) noexcept;
  CondensedPolicy& operator=(CondensedPolicy&&) noexcept;

  const OcpSpec& spec() const { return spec_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  /// Replaces the model parameters, recomputing the condensed data and
  /// dropping the warm start.
  void set_theta(const Eigen::VectorXd& theta);

  /// Drops the warm start (next solve starts cold).
  void reset_warm_start() { have_last_ = false; }

  struct Solution {
    Eigen::VectorXd u;      ///< optimal input sequence (length N)
    double objective = 0.0; ///< full transcription objective value
    int iterations = 0;     ///< pattern-update steps taken
  };

  /// Solves at state s, warm-starting from the previous solution shifted by
  /// one stage.  Falls back to the interior-point transcription if the
  /// pattern walk fails to settle (counted by fallback_count()).
  const Solution& solve(const Eigen::Vector2d& s);

  /// The policy action pi_th(s) = u_0 of the solution.
  double act(const Eigen::Vector2d& s) { return solve(s).u[0]; }

  /// Number of solves that required the interior-point fallback.
  long fallback_count() const { return fallback_count_; }

 private:
  struct Row;  // one soft-constraint row in condensed coordinates

  void precompute();

  OcpSpec spec_;
  Eigen::VectorXd theta_;

  // Per-theta condensed data.
  std::vector<Eigen::Matrix2d> a_pow_;   ///< A^k, k = 0..N
  std::vector<Eigen::Vector2d> m_off_;   ///< offset part of m_k (from d)
  std::vector<Eigen::MatrixXd> m_mat_;   ///< M_k, k = 0..N
  Eigen::MatrixXd hess_;                 ///< H
  Eigen::LLT<Eigen::MatrixXd> hess_llt_;
  Eigen::MatrixXd c_state_;              ///< c(s) = c_state_ * s + c_const_
  Eigen::VectorXd c_const_;
  std::vector<Row> rows_;                ///< u-dependent soft rows
  std::vector<Row> fixed_rows_;          ///< stage-0 state rows (u-free)

  Solution last_;
  bool have_last_ = false;
  long fallback_count_ = 0;
  std::unique_ptr<MpcPolicy> fallback_;  ///< built lazily on first failure
};

}  // namespace mpcqn
