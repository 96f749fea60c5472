// SPDX-License-Identifier: MIT
/// \file kkt_sensitivity.cpp
/// \brief Solution sensitivities from the factorized KKT system.

#include "mpcqn/kkt_sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpcqn/errors.hpp"

namespace mpcqn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

/// Scalar Lagrangian L(z, lambda, nu, p) = phi + nu.h + lambda.g with the
/// multipliers as genuine inputs, so one forward sweep differentiates
/// through primal and dual variables simultaneously.
SmoothMap make_lagrangian_map(const ParamNlp& nlp) {
  const std::size_t n_z = nlp.n_z, n_g = nlp.n_g, n_h = nlp.n_h, n_p = nlp.n_p;
  const SmoothMap phi = nlp.phi, h = nlp.h, g = nlp.g;
  return SmoothMap(
      n_z + n_g + n_h + n_p, 1, [=](auto in, auto out) {
        using T = std::remove_cvref_t<decltype(out[0])>;
        std::vector<T> zp(n_z + n_p);
        for (std::size_t i = 0; i < n_z; ++i) zp[i] = in[i];
        for (std::size_t q = 0; q < n_p; ++q) zp[n_z + q] = in[n_z + n_g + n_h + q];
        const std::span<const T> zp_span(zp.data(), zp.size());
        T acc;
        phi.eval(zp_span, std::span<T>(&acc, 1));
        if (n_h > 0) {
          std::vector<T> hv(n_h);
          h.eval(zp_span, std::span<T>(hv.data(), n_h));
          for (std::size_t r = 0; r < n_h; ++r) acc += in[n_z + n_g + r] * hv[r];
        }
        if (n_g > 0) {
          std::vector<T> gv(n_g);
          g.eval(zp_span, std::span<T>(gv.data(), n_g));
          for (std::size_t i = 0; i < n_g; ++i) acc += in[n_z + i] * gv[i];
        }
        out[0] = acc;
      });
}

/// Concatenates (z, lambda, nu, p) in the Lagrangian-map input order.
VectorXd lagrangian_point(const ParamNlp& nlp, const PrimalDualSolution& sol,
                          const VectorXd& p) {
  VectorXd x(nlp.n_z + nlp.n_g + nlp.n_h + nlp.n_p);
  x.head(nlp.n_z) = sol.z;
  x.segment(nlp.n_z, nlp.n_g) = sol.lambda;
  x.segment(nlp.n_z + nlp.n_g, nlp.n_h) = sol.nu;
  x.tail(nlp.n_p) = p;
  return x;
}

void check_selection(const ParamNlp& nlp, std::size_t offset, std::size_t& count) {
  if (count == SensOptions::npos) {
    if (offset >= nlp.n_p) throw ConfigError("sensitivity: parameter offset out of range");
    count = nlp.n_p - offset;
  }
  if (count == 0 || offset + count > nlp.n_p) {
    throw ConfigError("sensitivity: parameter selection out of range");
  }
}

}  // namespace

FirstOrderSensitivity first_order_sensitivity(const ParamNlp& nlp,
                                              const PrimalDualSolution& sol,
                                              const VectorXd& p,
                                              const SensOptions& opts,
                                              const QpCache* cache) {
  const std::size_t n_z = nlp.n_z, n_g = nlp.n_g, n_h = nlp.n_h;
  const std::size_t n_xi = nlp.n_xi();
  if (p.size() != static_cast<Index>(nlp.n_p) ||
      sol.z.size() != static_cast<Index>(n_z) ||
      sol.lambda.size() != static_cast<Index>(n_g) ||
      sol.nu.size() != static_cast<Index>(n_h)) {
    throw ConfigError("sensitivity: solution/parameter sizes do not match the problem");
  }
  if (cache && !nlp.quadratic) {
    throw ConfigError("sensitivity: coefficient cache requires a quadratic problem");
  }
  std::size_t count = opts.param_count;
  check_selection(nlp, opts.param_offset, count);
  const std::size_t off = opts.param_offset;

  VectorXd zp(n_z + nlp.n_p);
  zp.head(n_z) = sol.z;
  zp.tail(nlp.n_p) = p;

  // Inequality values and the strict complementarity guard: every row must
  // be clearly active (lambda > margin) or clearly inactive (-g > margin),
  // otherwise the solution is not differentiable.
  VectorXd g(n_g);
  if (n_g > 0) {
    if (cache) {
      g = cache->g0 + cache->G * sol.z;
    } else {
      nlp.g.eval(std::span<const double>(zp.data(), zp.size()),
                 std::span<double>(g.data(), n_g));
    }
    for (std::size_t i = 0; i < n_g; ++i) {
      const auto ii = static_cast<Index>(i);
      if (!(std::max(sol.lambda[ii], -g[ii]) > opts.comp_margin)) {
        throw SingularKktError(
            "sensitivity: strict complementarity fails on an inequality row");
      }
    }
  }

  const bool fast_cross = nlp.bilinear.has_value() && !opts.force_generic;
  SmoothMap lag;
  VectorXd x_ext;
  if (!cache || !fast_cross) {
    lag = make_lagrangian_map(nlp);
    x_ext = lagrangian_point(nlp, sol, p);
  }

  // Jacobian of F over xi = (z, lambda, nu), rows (grad_z L, h, lambda.g).
  const MatrixXd W =
      cache ? cache->W : hessian_block(lag, x_ext, 0, 0, static_cast<Index>(n_z));
  const MatrixXd G = cache                ? cache->G
                     : n_g > 0            ? jacobian_cols(nlp.g, zp, 0, static_cast<Index>(n_z))
                                          : MatrixXd(0, n_z);
  const MatrixXd A = cache                ? cache->A
                     : n_h > 0            ? jacobian_cols(nlp.h, zp, 0, static_cast<Index>(n_z))
                                          : MatrixXd(0, n_z);

  MatrixXd K = MatrixXd::Zero(n_xi, n_xi);
  K.topLeftCorner(n_z, n_z) = W;
  if (n_g > 0) {
    K.block(0, n_z, n_z, n_g) = G.transpose();
    K.block(n_z + n_h, 0, n_g, n_z) = sol.lambda.asDiagonal() * G;
    K.block(n_z + n_h, n_z, n_g, n_g) = MatrixXd(g.asDiagonal());
  }
  if (n_h > 0) {
    K.block(0, n_z + n_g, n_z, n_h) = A.transpose();
    K.block(n_z, 0, n_h, n_z) = A;
  }

  // Jacobian of F over the selected parameters.
  MatrixXd R = MatrixXd::Zero(n_xi, count);
  if (fast_cross) {
    const BilinearStructure& bil = *nlp.bilinear;
    if (bil.phi_zp.size() > 0) {
      R.topRows(n_z) = bil.phi_zp.middleCols(off, count);
    }
    auto add_entries = [&](const std::vector<BilinearStructure::Entry>& entries,
                           const VectorXd& mult) {
      for (const auto& e : entries) {
        const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(e.p_index) -
                                 static_cast<std::ptrdiff_t>(off);
        if (q < 0 || q >= static_cast<std::ptrdiff_t>(count)) continue;
        R(e.z_index, q) += mult[e.row] * e.value;
      }
    };
    add_entries(bil.h_cross, sol.nu);
    add_entries(bil.g_cross, sol.lambda);
  } else {
    const std::size_t n_ext = n_z + n_g + n_h + nlp.n_p;
    VectorXd u = VectorXd::Zero(n_ext), v = VectorXd::Zero(n_ext);
    for (std::size_t qc = 0; qc < count; ++qc) {
      v[n_z + n_g + n_h + off + qc] = 1.0;
      for (std::size_t i = 0; i < n_z; ++i) {
        u[i] = 1.0;
        R(static_cast<Index>(i), static_cast<Index>(qc)) =
            dir2(lag, x_ext, u, v).d_uv[0];
        u[i] = 0.0;
      }
      v[n_z + n_g + n_h + off + qc] = 0.0;
    }
  }
  if (n_h > 0) {
    R.middleRows(n_z, n_h) =
        jacobian_cols(nlp.h, zp, static_cast<Index>(n_z + off), static_cast<Index>(count));
  }
  if (n_g > 0) {
    R.bottomRows(n_g) =
        sol.lambda.asDiagonal() *
        jacobian_cols(nlp.g, zp, static_cast<Index>(n_z + off), static_cast<Index>(count));
  }

  FirstOrderSensitivity fo;
  fo.kkt_lu.compute(K);
  const VectorXd udiag = fo.kkt_lu.matrixLU().diagonal().cwiseAbs();
  const double dmax = udiag.maxCoeff();
  if (!(dmax > 0.0) || udiag.minCoeff() < 1e-14 * dmax) {
    throw SingularKktError("sensitivity: KKT matrix is singular to working precision");
  }
  fo.xi_p = -fo.kkt_lu.solve(R);
  fo.g = g;
  fo.n_z = n_z;
  fo.n_g = n_g;
  fo.n_h = n_h;
  fo.offset = off;
  fo.count = count;
  return fo;
}

SecondOrderSensitivity second_order_sensitivity(const ParamNlp& nlp,
                                                const PrimalDualSolution& sol,
                                                const VectorXd& p,
                                                const FirstOrderSensitivity& fo,
                                                const SensOptions& opts) {
  const std::size_t n_z = nlp.n_z, n_g = nlp.n_g, n_h = nlp.n_h;
  const std::size_t n_xi = nlp.n_xi();
  const std::size_t count = fo.count, off = fo.offset;
  if (fo.xi_p.rows() != static_cast<Index>(n_xi) || count == 0) {
    throw ConfigError("sensitivity: first-order result does not match the problem");
  }
  const std::size_t n_pairs = count * (count + 1) / 2;
  auto pidx = [count](std::size_t j, std::size_t k) {
    return static_cast<Index>(j * count - j * (j + 1) / 2 + k);
  };

  VectorXd zp(n_z + nlp.n_p);
  zp.head(n_z) = sol.z;
  zp.tail(nlp.n_p) = p;

  // Combined (z, p) tangents of the constraint maps, one per parameter.
  MatrixXd U = MatrixXd::Zero(n_z + nlp.n_p, count);
  U.topRows(n_z) = fo.z_block();
  for (std::size_t j = 0; j < count; ++j) {
    U(static_cast<Index>(n_z + off + j), static_cast<Index>(j)) = 1.0;
  }

  MatrixXd C = MatrixXd::Zero(n_xi, n_pairs);

  // Constraint rows: one mixed sweep per parameter pair.  The
  // complementarity rows follow the product rule on lambda_i g_i, with the
  // lambda tangents taken from the first-order solution.
  for (std::size_t j = 0; j < count; ++j) {
    const VectorXd uj = U.col(static_cast<Index>(j));
    for (std::size_t k = j; k < count; ++k) {
      const VectorXd uk = U.col(static_cast<Index>(k));
      const Index col = pidx(j, k);
      if (n_h > 0) {
        C.block(n_z, col, n_h, 1) = dir2(nlp.h, zp, uj, uk).d_uv;
      }
      if (n_g > 0) {
        const Dir2Result r = dir2(nlp.g, zp, uj, uk);
        for (std::size_t i = 0; i < n_g; ++i) {
          const auto ii = static_cast<Index>(i);
          C(static_cast<Index>(n_z + n_h + i), col) =
              fo.xi_p(static_cast<Index>(n_z + i), static_cast<Index>(j)) * r.d_v[ii] +
              fo.xi_p(static_cast<Index>(n_z + i), static_cast<Index>(k)) * r.d_u[ii] +
              sol.lambda[ii] * r.d_uv[ii];
        }
      }
    }
  }

  // Stationarity rows.
  if (nlp.bilinear.has_value() && !opts.force_generic) {
    // The only third-order Lagrangian terms couple one multiplier, one
    // decision variable, and one parameter; contract the constant entries
    // against the multiplier tangents.  The diagonal pair (q, q) receives
    // both orderings of the bilinear form, hence the factor two.
    const BilinearStructure& bil = *nlp.bilinear;
    auto add_cross = [&](const std::vector<BilinearStructure::Entry>& entries,
                         std::size_t mult_row0) {
      for (const auto& e : entries) {
        const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(e.p_index) -
                                 static_cast<std::ptrdiff_t>(off);
        if (q < 0 || q >= static_cast<std::ptrdiff_t>(count)) continue;
        const auto qs = static_cast<std::size_t>(q);
        for (std::size_t m = 0; m < count; ++m) {
          const double w = (m == qs) ? 2.0 : 1.0;
          const double tang = fo.xi_p(static_cast<Index>(mult_row0 + e.row),
                                      static_cast<Index>(m));
          C(e.z_index, pidx(std::min(m, qs), std::max(m, qs))) += w * e.value * tang;
        }
      }
    };
    add_cross(bil.h_cross, n_z + n_g);
    add_cross(bil.g_cross, n_z);
  } else {
    const SmoothMap lag = make_lagrangian_map(nlp);
    const VectorXd x_ext = lagrangian_point(nlp, sol, p);
    const std::size_t n_ext = n_z + n_g + n_h + nlp.n_p;

    // Full primal-dual/parameter tangents of the Lagrangian inputs.
    MatrixXd T = MatrixXd::Zero(n_ext, count);
    T.topRows(n_xi) = fo.xi_p;
    for (std::size_t j = 0; j < count; ++j) {
      T(static_cast<Index>(n_xi + off + j), static_cast<Index>(j)) = 1.0;
    }

    VectorXd w = VectorXd::Zero(n_ext);
    for (std::size_t j = 0; j < count; ++j) {
      const VectorXd tj = T.col(static_cast<Index>(j));
      for (std::size_t k = j; k < count; ++k) {
        const VectorXd tk = T.col(static_cast<Index>(k));
        const Index col = pidx(j, k);
        for (std::size_t i = 0; i < n_z; ++i) {
          w[i] = 1.0;
          C(static_cast<Index>(i), col) = dir3(lag, x_ext, tj, tk, w).d_uvw[0];
          w[i] = 0.0;
        }
      }
    }
  }

  SecondOrderSensitivity so;
  so.S = -fo.kkt_lu.solve(C);
  so.count = count;
  return so;
}

}  // namespace mpcqn
