// SPDX-License-Identifier: MIT
/// \file ip_solver.hpp
/// \brief Primal-dual interior-point solver for parametric NLPs.
///
/// Solves min phi(z,p) s.t. h(z,p) = 0, g(z,p) <= 0 by introducing slacks
/// g + s = 0 (s > 0, multipliers lambda > 0) and driving the perturbed KKT
/// residual to zero with Newton steps, monotone centering, and a
/// fraction-to-boundary rule.  Converged solutions satisfy the *exact* KKT
/// conditions to tight tolerances so they can be differentiated afterwards.
///
/// Problems flagged quadratic additionally support a cached path in which the
/// constant coefficient matrices are extracted once per parameter family and
/// every subsequent solve is pure linear algebra.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpcqn/nlp.hpp"

namespace mpcqn {

struct IpOptions {
  double tol_kkt = 1e-10;       ///< stationarity and complementarity target
  double tol_feas = 1e-9;       ///< equality/inequality violation target
  int max_iter = 200;
  double sigma = 0.1;           ///< centering factor for the barrier parameter
  double tau_boundary = 0.995;  ///< fraction-to-boundary step fraction
};

enum class SolveStatus { Converged, MaxIterations, Singular, NonFinite };

const char* to_string(SolveStatus status);

struct PrimalDualSolution {
  Eigen::VectorXd z;       ///< primal point
  Eigen::VectorXd lambda;  ///< inequality multipliers (size n_g, positive)
  Eigen::VectorXd nu;      ///< equality multipliers (size n_h)
  Eigen::VectorXd slack;   ///< slacks on g (size n_g, positive)
  double objective = 0.0;
  double kkt_error = 0.0;  ///< final unperturbed KKT residual (inf norm)
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// Coefficient matrices of a quadratic instance frozen at one parameter:
///   phi(z) = ½ zᵀW z + cᵀz + phi0,  g = G z + g0,  h = A z + h0.
/// refresh_cache() re-extracts only the translation data (c, g0, h0, phi0);
/// that is valid exactly when the parameter change leaves every z-coefficient
/// (W, G, A) unchanged, which the caller must guarantee.
struct QpCache {
  Eigen::MatrixXd W, G, A;
  Eigen::VectorXd c, g0, h0;
  double phi0 = 0.0;
  Eigen::VectorXd p;  ///< parameter of the last refresh

  /// Nonzero patterns of G and A rows, for fast normal-matrix accumulation.
  struct SparseRow {
    std::vector<int> idx;
    std::vector<double> val;
  };
  std::vector<SparseRow> g_rows, a_rows;
};

class IpSolver {
 public:
  explicit IpSolver(ParamNlp nlp, IpOptions opts = {});

  const ParamNlp& nlp() const { return nlp_; }
  const IpOptions& options() const { return opts_; }

  /// Solves at parameter p.  z0 seeds the primal point (zeros otherwise);
  /// warm, when given, seeds the full primal-dual iterate and wins over z0.
  /// Quadratic problems transparently use a one-shot cache.
  PrimalDualSolution solve(const Eigen::VectorXd& p,
                           const Eigen::VectorXd& z0 = Eigen::VectorXd(),
                           const PrimalDualSolution* warm = nullptr) const;

  /// Extracts the full coefficient set of a quadratic instance at p.
  QpCache build_cache(const Eigen::VectorXd& p) const;

  /// Re-extracts translation data at a new parameter; see QpCache contract.
  void refresh_cache(QpCache& cache, const Eigen::VectorXd& p) const;

  /// Pure linear-algebra solve on cached coefficients.
  PrimalDualSolution solve_cached(const QpCache& cache,
                                  const Eigen::VectorXd& z0 = Eigen::VectorXd(),
                                  const PrimalDualSolution* warm = nullptr) const;

 private:
  ParamNlp nlp_;
  IpOptions opts_;
};

}  // namespace mpcqn
