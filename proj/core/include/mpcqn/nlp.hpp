// SPDX-License-Identifier: MIT
/// \file nlp.hpp
/// \brief Parametric nonlinear program description.
///
/// A ParamNlp is the problem
///
///   minimize_z  phi(z, p)
///   subject to  h(z, p)  = 0
///               g(z, p) <= 0
///
/// where p is a parameter vector the solution implicitly depends on.  All
/// three functions take the concatenated input (z, p) of length n_z + n_p so
/// one forward sweep can carry tangents in decision variables and parameters
/// simultaneously.

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "mpcqn/smooth_map.hpp"

namespace mpcqn {

/// Constant cross-curvature structure for problems whose constraints are
/// affine in z with coefficients affine in p (bilinear z-p coupling) and
/// whose objective has no third-order terms in (z, p).
///
/// When present, second-order solution sensitivities replace third-order
/// forward sweeps of the Lagrangian with a closed-form contraction over the
/// listed entries; see KktSensitivity.  The builder that supplies this
/// structure is responsible for its correctness (it is cross-checked against
/// the generic path in the test suite).
struct BilinearStructure {
  /// One constant second derivative d2(row r)/dz_i dp_m = value.
  struct Entry {
    int row;
    int z_index;
    int p_index;
    double value;
  };
  std::vector<Entry> h_cross;  ///< entries of the equality rows
  std::vector<Entry> g_cross;  ///< entries of the inequality rows

  /// Constant mixed objective curvature d2phi/dz dp (n_z x n_p); an empty
  /// matrix means the objective has no decision-parameter cross terms.
  Eigen::MatrixXd phi_zp;
};

struct ParamNlp {
  std::size_t n_z = 0;  ///< decision variables
  std::size_t n_h = 0;  ///< equality rows
  std::size_t n_g = 0;  ///< inequality rows
  std::size_t n_p = 0;  ///< parameters

  SmoothMap phi;  ///< (z, p) -> R, objective
  SmoothMap h;    ///< (z, p) -> R^{n_h}, equalities
  SmoothMap g;    ///< (z, p) -> R^{n_g}, inequalities

  /// True when phi is quadratic and h, g affine in z for every fixed p.
  /// Enables the cached linear-algebra path in the interior-point solver.
  bool quadratic = false;

  /// Optional structure enabling the fast second-order sensitivity path.
  std::optional<BilinearStructure> bilinear;

  std::size_t n_xi() const { return n_z + n_h + n_g; }
};

}  // namespace mpcqn
