// SPDX-License-Identifier: MIT
/// \file ip_solver.cpp
/// \brief Interior-point solver implementation.

#include "mpcqn/ip_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mpcqn/errors.hpp"

namespace mpcqn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::Singular: return "singular";
    case SolveStatus::NonFinite: return "non-finite";
  }
  return "unknown";
}

namespace {

double inf_norm(const VectorXd& v) {
  return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
}

/// First-order data of the instance at one primal point.
struct IterData {
  double phi = 0.0;
  VectorXd grad, g, h;
};

/// Model callbacks: the Newton loop below is shared between the
/// automatic-differentiation path and the cached quadratic path.
struct ModelOps {
  /// Objective value/gradient and constraint values at z.
  std::function<void(const VectorXd& z, IterData&)> eval;
  /// Constraint Jacobians at z; constant models fill once and then no-op.
  std::function<void(const VectorXd& z, MatrixXd& G, MatrixXd& A)> jac;
  /// Hessian of the Lagrangian at (z, lambda, nu).
  std::function<void(const VectorXd&, const VectorXd&, const VectorXd&, MatrixXd&)> hess;
  /// M += Gᵀ diag(w) G at the current Jacobian (the only structure-sensitive
  /// accumulation; sparse models override the dense default).
  std::function<void(const VectorXd& w, const MatrixXd& G, MatrixXd& M)> add_gtwg;
};

void dense_add_gtwg(const VectorXd& w, const MatrixXd& G, MatrixXd& M) {
  for (Eigen::Index r = 0; r < G.rows(); ++r) {
    M.selfadjointView<Eigen::Lower>().rankUpdate(G.row(r).transpose(), w[r]);
  }
  M.triangularView<Eigen::StrictlyUpper>() = M.transpose();
}

/// Newton iteration on the slack-form KKT system.  See header for the
/// formulation; the inequality block is eliminated exactly:
///   ds      = -r_g - G dz
///   S dlam  = rhs_c + Lam r_g + Lam G dz,   rhs_c = mu e - s ⊙ lam
/// leaving the augmented system
///   [W + Gᵀ S⁻¹ Lam G   Aᵀ] [dz ]   [-r_d - Gᵀ S⁻¹ (rhs_c + Lam r_g)]
///   [A                  0 ] [dnu] = [-r_h                            ]
PrimalDualSolution newton_loop(std::size_t n_z, std::size_t n_h, std::size_t n_g,
                               const ModelOps& ops, const IpOptions& opts,
                               const VectorXd& z0, const PrimalDualSolution* warm) {
  PrimalDualSolution out;

  VectorXd z = VectorXd::Zero(n_z);
  if (warm && warm->z.size() == static_cast<Eigen::Index>(n_z)) {
    z = warm->z;
  } else if (z0.size() == static_cast<Eigen::Index>(n_z)) {
    z = z0;
  }
  VectorXd nu = VectorXd::Zero(n_h);
  if (warm && warm->nu.size() == static_cast<Eigen::Index>(n_h)) nu = warm->nu;

  IterData cur;
  ops.eval(z, cur);
  MatrixXd G, A;
  ops.jac(z, G, A);

  VectorXd s(n_g), lam(n_g);
  double mu = 0.0;
  if (n_g > 0) {
    if (warm && warm->slack.size() == static_cast<Eigen::Index>(n_g) &&
        warm->lambda.size() == static_cast<Eigen::Index>(n_g)) {
      s = warm->slack.cwiseMax(1e-4);
      lam = warm->lambda.cwiseMax(1e-4);
    } else {
      for (std::size_t i = 0; i < n_g; ++i) {
        s[i] = std::max(0.1, 0.1 - cur.g[static_cast<Eigen::Index>(i)]);
      }
      lam = (0.1 / s.array()).matrix();
    }
    mu = opts.sigma * s.dot(lam) / static_cast<double>(n_g);
  }

  const double tau_ladder[] = {0.0, 1e-8, 1e-6, 1e-4, 1e-2};
  constexpr int ladder_len = 5;

  MatrixXd W(n_z, n_z);
  MatrixXd M(n_z + n_h, n_z + n_h);
  VectorXd rhs(n_z + n_h);

  auto perturbed_norm = [&](const IterData& d, const MatrixXd& Gt, const MatrixXd& At,
                            const VectorXd& st, const VectorXd& lt, const VectorXd& nt,
                            double mu_t) {
    VectorXd rd = d.grad;
    if (n_h > 0) rd += At.transpose() * nt;
    if (n_g > 0) rd += Gt.transpose() * lt;
    double m = inf_norm(rd);
    if (n_h > 0) m = std::max(m, inf_norm(d.h));
    if (n_g > 0) {
      m = std::max(m, inf_norm(d.g + st));
      m = std::max(m, inf_norm((st.array() * lt.array() - mu_t).matrix()));
    }
    return m;
  };

  int stall_count = 0;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // Unperturbed KKT residual and termination test.
    VectorXd r_d = cur.grad;
    if (n_h > 0) r_d += A.transpose() * nu;
    if (n_g > 0) r_d += G.transpose() * lam;
    const VectorXd r_h = cur.h;
    VectorXd r_g(n_g), comp(n_g);
    if (n_g > 0) {
      r_g = cur.g + s;
      comp = s.array() * lam.array();
    }

    const double kkt = std::max(inf_norm(r_d), inf_norm(comp));
    const double feas = std::max(inf_norm(r_h), inf_norm(r_g));
    const bool finite = std::isfinite(cur.phi) && r_d.allFinite() &&
                        (n_h == 0 || r_h.allFinite()) && (n_g == 0 || r_g.allFinite());

    out.z = z;
    out.lambda = lam;
    out.nu = nu;
    out.slack = s;
    out.objective = cur.phi;
    out.kkt_error = std::max(kkt, feas);
    out.iterations = iter;

    if (!finite) {
      out.status = SolveStatus::NonFinite;
      return out;
    }
    if (kkt <= opts.tol_kkt && feas <= opts.tol_feas) {
      out.status = SolveStatus::Converged;
      return out;
    }

    if (n_g > 0) {
      mu = std::max(std::min(mu, opts.sigma * s.dot(lam) / static_cast<double>(n_g)), 1e-18);
    }
    ops.hess(z, lam, nu, W);

    // Direction with escalating regularization until the factorization is
    // usable and the line search makes progress.
    VectorXd dz, dnu, ds, dlam;
    VectorXd rhs_c;
    if (n_g > 0) rhs_c = (mu - comp.array()).matrix();

    bool stepped = false;
    bool factor_ok = false;
    for (int level = 0; level < ladder_len && !stepped; ++level) {
      const double tau = tau_ladder[level];
      MatrixXd M11 = W;
      M11.diagonal().array() += tau;
      if (n_g > 0) {
        const VectorXd wts = (lam.array() / s.array()).matrix();
        ops.add_gtwg(wts, G, M11);
      }
      M.setZero();
      M.topLeftCorner(n_z, n_z) = M11;
      if (n_h > 0) {
        M.topRightCorner(n_z, n_h) = A.transpose();
        M.bottomLeftCorner(n_h, n_z) = A;
        M.bottomRightCorner(n_h, n_h).diagonal().array() -= tau;
      }

      Eigen::PartialPivLU<MatrixXd> lu(M);
      const VectorXd udiag = lu.matrixLU().diagonal().cwiseAbs();
      // Only exact breakdown disqualifies a level: the barrier weights
      // lam/s legitimately spread the pivot magnitudes by many orders near
      // a solution with large multipliers, so a relative pivot test would
      // misread a usable factorization as singular.  Ill-conditioning is
      // handled by the finite-step check and the regularization ladder.
      if (!udiag.allFinite() || udiag.minCoeff() <= 0.0) {
        continue;  // singular at this regularization level
      }

      rhs.head(n_z) = -r_d;
      if (n_g > 0) {
        const VectorXd t = ((rhs_c.array() + lam.array() * r_g.array()) / s.array()).matrix();
        rhs.head(n_z) -= G.transpose() * t;
      }
      if (n_h > 0) rhs.tail(n_h) = -r_h;

      const VectorXd step = lu.solve(rhs);
      if (!step.allFinite()) continue;
      factor_ok = true;
      dz = step.head(n_z);
      dnu = n_h > 0 ? step.tail(n_h).eval() : VectorXd(0);
      // One common step length for all variables: this keeps the Newton
      // direction a descent direction for the perturbed residual norm
      // (separate primal/dual lengths would break the contraction).
      double alpha = 1.0;
      if (n_g > 0) {
        const VectorXd gdz = G * dz;
        ds = -r_g - gdz;
        dlam = ((rhs_c.array() + lam.array() * r_g.array() + lam.array() * gdz.array()) /
                s.array())
                   .matrix();
        for (std::size_t i = 0; i < n_g; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          if (ds[ii] < 0.0) {
            alpha = std::min(alpha, -opts.tau_boundary * s[ii] / ds[ii]);
          }
          if (dlam[ii] < 0.0) {
            alpha = std::min(alpha, -opts.tau_boundary * lam[ii] / dlam[ii]);
          }
        }
      }

      // Backtrack against the perturbed residual norm.
      const double merit0 = perturbed_norm(cur, G, A, s, lam, nu, mu);
      double beta = 1.0;
      for (int bt = 0; bt < 26; ++bt, beta *= 0.5) {
        const VectorXd zt = z + beta * alpha * dz;
        VectorXd st, lt;
        if (n_g > 0) {
          st = s + beta * alpha * ds;
          lt = lam + beta * alpha * dlam;
        }
        const VectorXd nt = n_h > 0 ? (nu + beta * alpha * dnu).eval() : nu;

        IterData trial;
        ops.eval(zt, trial);
        MatrixXd Gt = G, At = A;
        ops.jac(zt, Gt, At);
        if (!std::isfinite(trial.phi)) continue;
        const double merit = perturbed_norm(trial, Gt, At, st, lt, nt, mu);
        if (std::isfinite(merit) &&
            merit <= merit0 * (1.0 - 0.01 * beta * alpha) + 1e-15) {
          z = zt;
          if (n_g > 0) {
            s = st;
            lam = lt;
          }
          nu = nt;
          cur = trial;
          G = Gt;
          A = At;
          stepped = true;
          break;
        }
      }
    }

    if (!stepped) {
      if (!factor_ok) {
        out.status = SolveStatus::Singular;
        out.iterations = iter + 1;
        return out;
      }
      if (++stall_count >= 2) {
        out.status = SolveStatus::MaxIterations;
        out.iterations = iter + 1;
        return out;
      }
    } else {
      stall_count = 0;
    }
  }

  out.status = SolveStatus::MaxIterations;
  out.iterations = opts.max_iter;
  return out;
}

/// Evaluation callbacks assembled with forward sweeps of the problem maps.
ModelOps make_ad_ops(const ParamNlp& nlp, const VectorXd& p) {
  const std::size_t n_z = nlp.n_z, n_h = nlp.n_h, n_g = nlp.n_g;
  const std::size_t n_in = n_z + nlp.n_p;

  ModelOps ops;
  ops.eval = [&nlp, p, n_z, n_in](const VectorXd& z, IterData& out) {
    VectorXd zp(n_in);
    zp.head(n_z) = z;
    zp.tail(nlp.n_p) = p;
    double phi_val;
    nlp.phi.eval(std::span<const double>(zp.data(), n_in), std::span<double>(&phi_val, 1));
    out.phi = phi_val;
    out.g.resize(nlp.n_g);
    out.h.resize(nlp.n_h);
    if (nlp.n_g > 0) {
      nlp.g.eval(std::span<const double>(zp.data(), n_in),
                 std::span<double>(out.g.data(), nlp.n_g));
    }
    if (nlp.n_h > 0) {
      nlp.h.eval(std::span<const double>(zp.data(), n_in),
                 std::span<double>(out.h.data(), nlp.n_h));
    }
    out.grad = jacobian_cols(nlp.phi, zp, 0, static_cast<Eigen::Index>(n_z))
                   .row(0)
                   .transpose();
  };
  ops.jac = [&nlp, p, n_z, n_in](const VectorXd& z, MatrixXd& G, MatrixXd& A) {
    VectorXd zp(n_in);
    zp.head(n_z) = z;
    zp.tail(nlp.n_p) = p;
    G = nlp.n_g > 0 ? jacobian_cols(nlp.g, zp, 0, static_cast<Eigen::Index>(n_z))
                    : MatrixXd(0, n_z);
    A = nlp.n_h > 0 ? jacobian_cols(nlp.h, zp, 0, static_cast<Eigen::Index>(n_z))
                    : MatrixXd(0, n_z);
  };
  ops.hess = [&nlp, p, n_z, n_h, n_g, n_in](const VectorXd& z, const VectorXd& lam,
                                            const VectorXd& nu, MatrixXd& W) {
    // One mixed second-order sweep of each map per coordinate pair; the
    // Lagrangian Hessian entry combines the three output channels.
    std::vector<Taylor<2>> in(n_in);
    std::vector<Taylor<2>> phi_out(1), g_out(n_g), h_out(n_h);
    for (std::size_t i = 0; i < n_z; ++i) in[i] = Taylor<2>(z[static_cast<Eigen::Index>(i)]);
    for (std::size_t i = 0; i < nlp.n_p; ++i) in[n_z + i] = Taylor<2>(p[static_cast<Eigen::Index>(i)]);
    W.resize(n_z, n_z);
    for (std::size_t a = 0; a < n_z; ++a) {
      for (std::size_t b = a; b < n_z; ++b) {
        in[a][1] = 1.0;
        in[b][2] = 1.0;
        double acc = 0.0;
        nlp.phi.eval(std::span<const Taylor<2>>(in), std::span<Taylor<2>>(phi_out));
        acc += phi_out[0][3];
        if (n_h > 0) {
          nlp.h.eval(std::span<const Taylor<2>>(in), std::span<Taylor<2>>(h_out));
          for (std::size_t r = 0; r < n_h; ++r) acc += nu[static_cast<Eigen::Index>(r)] * h_out[r][3];
        }
        if (n_g > 0) {
          nlp.g.eval(std::span<const Taylor<2>>(in), std::span<Taylor<2>>(g_out));
          for (std::size_t r = 0; r < n_g; ++r) acc += lam[static_cast<Eigen::Index>(r)] * g_out[r][3];
        }
        W(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
        W(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = acc;
        in[a][1] = 0.0;
        in[b][2] = 0.0;
      }
    }
  };
  ops.add_gtwg = dense_add_gtwg;
  return ops;
}

/// Evaluation callbacks over frozen quadratic coefficients.
ModelOps make_qp_ops(const QpCache& cache) {
  ModelOps ops;
  ops.eval = [&cache](const VectorXd& z, IterData& out) {
    const VectorXd wz = cache.W * z;
    out.phi = 0.5 * z.dot(wz) + cache.c.dot(z) + cache.phi0;
    out.grad = wz + cache.c;
    out.g = cache.g0;
    out.h = cache.h0;
    if (cache.G.rows() > 0) out.g += cache.G * z;
    if (cache.A.rows() > 0) out.h += cache.A * z;
  };
  ops.jac = [&cache](const VectorXd&, MatrixXd& G, MatrixXd& A) {
    if (G.rows() != cache.G.rows() || G.cols() != cache.G.cols()) G = cache.G;
    if (A.rows() != cache.A.rows() || A.cols() != cache.A.cols()) A = cache.A;
  };
  ops.hess = [&cache](const VectorXd&, const VectorXd&, const VectorXd&, MatrixXd& W) {
    W = cache.W;
  };
  ops.add_gtwg = [&cache](const VectorXd& w, const MatrixXd&, MatrixXd& M) {
    for (std::size_t r = 0; r < cache.g_rows.size(); ++r) {
      const auto& row = cache.g_rows[r];
      const double wr = w[static_cast<Eigen::Index>(r)];
      for (std::size_t a = 0; a < row.idx.size(); ++a) {
        const double wa = wr * row.val[a];
        for (std::size_t b = 0; b < row.idx.size(); ++b) {
          M(row.idx[a], row.idx[b]) += wa * row.val[b];
        }
      }
    }
  };
  return ops;
}

QpCache::SparseRow sparsify(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  QpCache::SparseRow s;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row[j] != 0.0) {
      s.idx.push_back(static_cast<int>(j));
      s.val.push_back(row[j]);
    }
  }
  return s;
}

}  // namespace

IpSolver::IpSolver(ParamNlp nlp, IpOptions opts) : nlp_(std::move(nlp)), opts_(opts) {
  if (!nlp_.phi || nlp_.phi.n_in() != nlp_.n_z + nlp_.n_p || nlp_.phi.n_out() != 1) {
    throw ConfigError("IpSolver: objective map has inconsistent dimensions");
  }
  if (nlp_.n_h > 0 && (!nlp_.h || nlp_.h.n_out() != nlp_.n_h)) {
    throw ConfigError("IpSolver: equality map has inconsistent dimensions");
  }
  if (nlp_.n_g > 0 && (!nlp_.g || nlp_.g.n_out() != nlp_.n_g)) {
    throw ConfigError("IpSolver: inequality map has inconsistent dimensions");
  }
}

PrimalDualSolution IpSolver::solve(const VectorXd& p, const VectorXd& z0,
                                   const PrimalDualSolution* warm) const {
  if (p.size() != static_cast<Eigen::Index>(nlp_.n_p)) {
    throw ConfigError("IpSolver::solve: parameter size mismatch");
  }
  if (nlp_.quadratic) {
    const QpCache cache = build_cache(p);
    return solve_cached(cache, z0, warm);
  }
  const ModelOps ops = make_ad_ops(nlp_, p);
  return newton_loop(nlp_.n_z, nlp_.n_h, nlp_.n_g, ops, opts_, z0, warm);
}

QpCache IpSolver::build_cache(const VectorXd& p) const {
  if (!nlp_.quadratic) {
    throw ConfigError("IpSolver::build_cache: problem is not flagged quadratic");
  }
  QpCache cache;
  const VectorXd z0 = VectorXd::Zero(nlp_.n_z);
  VectorXd zp(nlp_.n_z + nlp_.n_p);
  zp.head(nlp_.n_z) = z0;
  zp.tail(nlp_.n_p) = p;

  cache.G = nlp_.n_g > 0 ? jacobian_cols(nlp_.g, zp, 0, static_cast<Eigen::Index>(nlp_.n_z))
                         : MatrixXd(0, nlp_.n_z);
  cache.A = nlp_.n_h > 0 ? jacobian_cols(nlp_.h, zp, 0, static_cast<Eigen::Index>(nlp_.n_z))
                         : MatrixXd(0, nlp_.n_z);
  cache.W = hessian_block(nlp_.phi, zp, 0, 0, static_cast<Eigen::Index>(nlp_.n_z));
  cache.g_rows.reserve(nlp_.n_g);
  for (Eigen::Index r = 0; r < cache.G.rows(); ++r) cache.g_rows.push_back(sparsify(cache.G.row(r)));
  cache.a_rows.reserve(nlp_.n_h);
  for (Eigen::Index r = 0; r < cache.A.rows(); ++r) cache.a_rows.push_back(sparsify(cache.A.row(r)));

  refresh_cache(cache, p);
  return cache;
}

void IpSolver::refresh_cache(QpCache& cache, const VectorXd& p) const {
  VectorXd zp = VectorXd::Zero(nlp_.n_z + nlp_.n_p);
  zp.tail(nlp_.n_p) = p;

  double phi0;
  nlp_.phi.eval(std::span<const double>(zp.data(), zp.size()), std::span<double>(&phi0, 1));
  cache.phi0 = phi0;
  cache.c = jacobian_cols(nlp_.phi, zp, 0, static_cast<Eigen::Index>(nlp_.n_z))
                .row(0)
                .transpose();

  cache.g0.resize(nlp_.n_g);
  if (nlp_.n_g > 0) {
    nlp_.g.eval(std::span<const double>(zp.data(), zp.size()),
                std::span<double>(cache.g0.data(), nlp_.n_g));
  }
  cache.h0.resize(nlp_.n_h);
  if (nlp_.n_h > 0) {
    nlp_.h.eval(std::span<const double>(zp.data(), zp.size()),
                std::span<double>(cache.h0.data(), nlp_.n_h));
  }
  cache.p = p;
}

PrimalDualSolution IpSolver::solve_cached(const QpCache& cache, const VectorXd& z0,
                                          const PrimalDualSolution* warm) const {
  const ModelOps ops = make_qp_ops(cache);
  return newton_loop(nlp_.n_z, nlp_.n_h, nlp_.n_g, ops, opts_, z0, warm);
}

}  // namespace mpcqn
