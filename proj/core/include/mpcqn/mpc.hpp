// SPDX-License-Identifier: MIT
/// \file mpc.hpp
/// \brief Soft-constrained linear MPC transcription and the induced policy.
///
/// The controller solves, at state s, the horizon-N problem
///
///   min  sum_k gamma^k ( x_k'x_k + u_k^2/2 + w 1'sigma_k )
///        + gamma^N ( x_N' V_f x_N + w_f 1'sigma_N )
///   s.t. x_{k+1} = A(th) x_k + B(th) u_k + d(th),   x_0 = s
///        state/input box rows <= sigma_k,  sigma_k >= 0   (soft constraints)
///
/// over a 2-state, 1-input model family parameterized by
/// th = (a11, a12, a22, b1, b2, d1, d2, w1):
///
///   A(th) = [th0 th1; 0 th2],  B(th) = (th3, th4),  d(th) = (th5, th6),
///
/// with th7 tightening the first state's lower bound.  The decision vector
/// stacks (x_1..x_N, u_0..u_{N-1}, sigma_0..sigma_{N-1}, sigma_N) and the
/// parameter vector of the resulting ParamNlp concatenates (th, s), so
/// solution sensitivities with respect to the model parameters come from
/// the first 8 parameter columns.
///
/// The first input u_0 of the solution defines the policy pi_th(s).

#pragma once

#include <Eigen/Dense>

#include "mpcqn/ip_solver.hpp"
#include "mpcqn/kkt_sensitivity.hpp"
#include "mpcqn/nlp.hpp"

namespace mpcqn {

inline constexpr int kModelParamCount = 8;

struct OcpSpec {
  int horizon = 10;  ///< N
  double gamma = 1.0;
  double slack_weight = 100.0;           ///< w
  double terminal_slack_weight = 100.0;  ///< w_f
  Eigen::Matrix2d terminal_cost;         ///< V_f
  Eigen::Vector2d state_lb, state_ub;
  double input_lb = -1.0, input_ub = 1.0;

  /// The benchmark configuration used throughout the test suite.
  static OcpSpec case_study();
};

/// Index arithmetic of the stacked decision vector.
struct MpcLayout {
  int N = 0;

  int n_z() const { return 9 * N + 4; }
  int n_h() const { return 2 * N; }
  int n_g() const { return 12 * N + 8; }
  int n_p() const { return kModelParamCount + 2; }

  /// State x_k, k in [1, N] (x_0 is the parameter s).
  int x_index(int k, int i) const { return 2 * (k - 1) + i; }
  /// Input u_k, k in [0, N).
  int u_index(int k) const { return 2 * N + k; }
  /// Stage slack sigma_k[j], k in [0, N), j in [0, 6).
  int sigma_index(int k, int j) const { return 3 * N + 6 * k + j; }
  /// Terminal slack sigma_N[j], j in [0, 4).
  int sigma_terminal_index(int j) const { return 9 * N + j; }
};

/// Builds the parametric QP (quadratic objective, z-affine constraints,
/// bilinear structure filled in) for the given specification.
ParamNlp build_mpc_nlp(const OcpSpec& spec);

/// A(th): state transition matrix of the parameterized model.
inline Eigen::Matrix2d model_matrix_a(const Eigen::VectorXd& th) {
  Eigen::Matrix2d a;
  a << th[0], th[1], 0.0, th[2];
  return a;
}

/// B(th): input map of the parameterized model.
inline Eigen::Vector2d model_matrix_b(const Eigen::VectorXd& th) {
  return Eigen::Vector2d(th[3], th[4]);
}

/// d(th): constant offset of the parameterized model.
inline Eigen::Vector2d model_offset(const Eigen::VectorXd& th) {
  return Eigen::Vector2d(th[5], th[6]);
}

/// Backoff added to the first state's lower bound.
inline double model_backoff(const Eigen::VectorXd& th) { return th[7]; }

/// Model parameters of an intentionally wrong initial model.
Eigen::VectorXd initial_model_parameters();

/// Model parameters reproducing the true plant used in the case study.
Eigen::VectorXd exact_model_parameters();

/// First input of the MPC solution together with its model-parameter
/// derivatives, extracted from the KKT sensitivities.
struct PolicyDerivatives {
  double u0 = 0.0;
  Eigen::VectorXd du0;   ///< d u0 / d th  (kModelParamCount)
  Eigen::MatrixXd d2u0;  ///< d2 u0 / d th2, symmetric
};

/// The MPC-induced policy: solves the transcription at a given state with
/// frozen model parameters, reusing coefficient caches and warm starts.
/// Not thread-safe; give each worker its own copy.
class MpcPolicy {
 public:
  MpcPolicy(OcpSpec spec, Eigen::VectorXd theta, IpOptions opts = {});

  const OcpSpec& spec() const { return spec_; }
  const MpcLayout& layout() const { return layout_; }
  const ParamNlp& nlp() const { return solver_.nlp(); }
  const Eigen::VectorXd& theta() const { return theta_; }

  /// Replaces the model parameters, rebuilding the coefficient cache and
  /// dropping the warm start.
  void set_theta(const Eigen::VectorXd& theta);

  /// Drops the warm start (next solve starts cold).
  void reset_warm_start() { have_last_ = false; }

  /// Solves at state s.  Throws SingularKktError when the solver certifies
  /// a singular system, NumericalError on any other failure.
  const PrimalDualSolution& solve(const Eigen::Vector2d& s);

  /// The policy action pi_th(s) = u_0 of the solution.
  double act(const Eigen::Vector2d& s);

  /// Action plus first and second model-parameter derivatives.
  /// Throws SingularKktError when strict complementarity fails at s.
  PolicyDerivatives derivatives(const Eigen::Vector2d& s);

 private:
  Eigen::VectorXd param_vector(const Eigen::Vector2d& s) const;

  OcpSpec spec_;
  MpcLayout layout_;
  Eigen::VectorXd theta_;
  IpSolver solver_;
  QpCache cache_;
  PrimalDualSolution last_;
  bool have_last_ = false;
};

}  // namespace mpcqn
