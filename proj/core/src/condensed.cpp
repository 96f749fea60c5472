// SPDX-License-Identifier: MIT
/// \file condensed.cpp
/// \brief Condensed exact-penalty MPC solver implementation.

#include "mpcqn/condensed.hpp"

#include <algorithm>
#include <cmath>

#include "mpcqn/errors.hpp"

namespace mpcqn {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

/// One soft-constraint row r(u, s) = a'u + beta's + b0 with penalty
/// weight * max(0, r).  Stage-0 state rows have no u dependence (a empty).
struct CondensedPolicy::Row {
  VectorXd a;
  Vector2d beta = Vector2d::Zero();
  double b0 = 0.0;
  double weight = 0.0;
};

CondensedPolicy::CondensedPolicy(OcpSpec spec, VectorXd theta)
    : spec_(std::move(spec)), theta_(std::move(theta)) {
  if (spec_.horizon < 1) throw ConfigError("condensed: horizon must be >= 1");
  if (theta_.size() != kModelParamCount) {
    throw ConfigError("condensed: expected " + std::to_string(kModelParamCount) +
                      " model parameters");
  }
  precompute();
}

CondensedPolicy::~CondensedPolicy() = default;
CondensedPolicy::CondensedPolicy(CondensedPolicy&&) noexcept = default;
CondensedPolicy& CondensedPolicy::operator=(CondensedPolicy&&) noexcept = default;

void CondensedPolicy::set_theta(const VectorXd& theta) {
  if (theta.size() != kModelParamCount) {
    throw ConfigError("condensed: expected " + std::to_string(kModelParamCount) +
                      " model parameters");
  }
  theta_ = theta;
  have_last_ = false;
  fallback_.reset();
  precompute();
}

void CondensedPolicy::precompute() {
  const int N = spec_.horizon;
  const Matrix2d A = model_matrix_a(theta_);
  const Vector2d B = model_matrix_b(theta_);
  const Vector2d d = model_offset(theta_);
  const double backoff = model_backoff(theta_);
  const double gamma = spec_.gamma;

  // State prediction x_k = M_k u + A^k s + m_off_k.
  a_pow_.assign(static_cast<std::size_t>(N) + 1, Matrix2d::Identity());
  m_off_.assign(static_cast<std::size_t>(N) + 1, Vector2d::Zero());
  m_mat_.assign(static_cast<std::size_t>(N) + 1, MatrixXd::Zero(2, N));
  for (int k = 0; k < N; ++k) {
    a_pow_[k + 1] = A * a_pow_[k];
    m_off_[k + 1] = A * m_off_[k] + d;
    m_mat_[k + 1] = A * m_mat_[k];
    m_mat_[k + 1].col(k) += B;
  }

  hess_ = MatrixXd::Zero(N, N);
  c_state_ = MatrixXd::Zero(N, 2);
  c_const_ = VectorXd::Zero(N);
  double gk = 1.0;
  for (int k = 0; k < N; ++k) {
    if (k > 0) {  // M_0 = 0: the stage-0 state cost is a constant in u
      hess_ += 2.0 * gk * m_mat_[k].transpose() * m_mat_[k];
      c_state_ += 2.0 * gk * m_mat_[k].transpose() * a_pow_[k];
      c_const_ += 2.0 * gk * m_mat_[k].transpose() * m_off_[k];
    }
    hess_(k, k) += gk;  // gamma^k u_k^2 / 2
    gk *= gamma;
  }
  const Matrix2d& vf = spec_.terminal_cost;
  hess_ += 2.0 * gk * m_mat_[N].transpose() * vf * m_mat_[N];
  c_state_ += 2.0 * gk * m_mat_[N].transpose() * vf * a_pow_[N];
  c_const_ += 2.0 * gk * m_mat_[N].transpose() * vf * m_off_[N];
  hess_llt_.compute(hess_);
  if (hess_llt_.info() != Eigen::Success) {
    throw NumericalError("condensed: input-space Hessian is not positive definite");
  }

  rows_.clear();
  fixed_rows_.clear();
  const auto add_state_rows = [&](int k, double weight) {
    const bool fixed = (k == 0);
    const Vector2d lb = spec_.state_lb;
    const Vector2d ub = spec_.state_ub;
    for (int j = 0; j < 4; ++j) {
      Row row;
      row.weight = weight;
      const int axis = j % 2;        // state component
      const bool lower = j < 2;      // first two rows bound from below
      const double sign = lower ? -1.0 : 1.0;
      if (!fixed) row.a = sign * m_mat_[k].row(axis).transpose();
      row.beta = sign * a_pow_[k].row(axis).transpose();
      row.b0 = sign * m_off_[k][axis] +
               (lower ? lb[axis] + (axis == 0 ? backoff : 0.0) : -ub[axis]);
      (fixed ? fixed_rows_ : rows_).push_back(std::move(row));
    }
  };

  gk = 1.0;
  for (int k = 0; k < N; ++k) {
    const double wk = gk * spec_.slack_weight;
    add_state_rows(k, wk);
    Row lo;
    lo.a = VectorXd::Zero(N);
    lo.a[k] = -1.0;
    lo.b0 = spec_.input_lb;
    lo.weight = wk;
    rows_.push_back(std::move(lo));
    Row hi;
    hi.a = VectorXd::Zero(N);
    hi.a[k] = 1.0;
    hi.b0 = -spec_.input_ub;
    hi.weight = wk;
    rows_.push_back(std::move(hi));
    gk *= gamma;
  }
  add_state_rows(N, gk * spec_.terminal_slack_weight);
}

const CondensedPolicy::Solution& CondensedPolicy::solve(const Vector2d& s) {
  const int N = spec_.horizon;
  const auto m = static_cast<Eigen::Index>(rows_.size());

  const VectorXd c = c_state_ * s + c_const_;
  VectorXd base(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    base[i] = rows_[i].beta.dot(s) + rows_[i].b0;
  }

  VectorXd u = VectorXd::Zero(N);
  bool warm = have_last_ && last_.u.size() == N;
  if (warm) {  // shift the previous plan by one stage
    u.head(N - 1) = last_.u.tail(N - 1);
    u[N - 1] = last_.u[N - 1];
  }

  VectorXd r(m);
  const auto refresh_residuals = [&] {
    for (Eigen::Index i = 0; i < m; ++i) r[i] = rows_[i].a.dot(u) + base[i];
  };
  refresh_residuals();

  // Pattern: rows pinned at their kink (K) and rows classified violated (V).
  // A shifted warm start lands near the previous kinks, so it classifies
  // with a loose band; a cold start uses a tight one.
  std::vector<char> in_kink(rows_.size(), 0), in_viol(rows_.size(), 0);
  std::vector<Eigen::Index> kink;
  const double classify_tol = warm ? 1e-6 : 1e-11;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(r[i]) <= classify_tol) {
      in_kink[i] = 1;
      kink.push_back(i);
    } else if (r[i] > 0.0) {
      in_viol[i] = 1;
    }
  }

  const int cap = 100 + 10 * static_cast<int>(m);
  bool settled = false;
  int iter = 0;
  while (iter < cap) {
    ++iter;
    // Equality-constrained step on the current pattern.
    VectorXd cv = c;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_viol[i]) cv += rows_[i].weight * rows_[i].a;
    }
    const VectorXd uf = hess_llt_.solve(-cv);
    const auto k = static_cast<Eigen::Index>(kink.size());
    VectorXd uhat, eta(k);
    if (k == 0) {
      uhat = uf;
    } else {
      MatrixXd at(N, k);
      VectorXd rhs(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        at.col(j) = rows_[kink[j]].a;
        rhs[j] = rows_[kink[j]].a.dot(uf) + base[kink[j]];
      }
      const MatrixXd y = hess_llt_.solve(at);
      const MatrixXd schur = at.transpose() * y;
      eta = Eigen::LDLT<MatrixXd>(schur).solve(rhs);
      if (!eta.allFinite() || (schur * eta - rhs).cwiseAbs().maxCoeff() >
                                  1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
        break;  // dependent kink rows; hand over to the fallback
      }
      uhat = uf - y * eta;
    }

    if ((uhat - u).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + u.cwiseAbs().maxCoeff())) {
      // Stationary on this pattern.  A kink multiplier must lie in
      // [0, weight]; flip the single worst offender, if any.
      Eigen::Index drop = -1, promote = -1;
      double drop_mag = 1e-9, promote_mag = 1e-9;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (-eta[j] > drop_mag) {
          drop_mag = -eta[j];
          drop = j;
        }
        if (eta[j] - rows_[kink[j]].weight > promote_mag) {
          promote_mag = eta[j] - rows_[kink[j]].weight;
          promote = j;
        }
      }
      if (drop < 0 && promote < 0) {
        settled = true;
        break;
      }
      if (drop >= 0 && (promote < 0 || drop_mag >= promote_mag)) {
        in_kink[kink[drop]] = 0;
        kink.erase(kink.begin() + drop);
      } else {
        in_kink[kink[promote]] = 0;
        in_viol[kink[promote]] = 1;
        kink.erase(kink.begin() + promote);
      }
      continue;
    }

    // Exact first-crossing line search toward uhat.
    const VectorXd d = uhat - u;
    double t = 1.0;
    Eigen::Index crossing = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_kink[i]) continue;
      const double slope = rows_[i].a.dot(d);
      double ti = 2.0;
      if (in_viol[i]) {
        if (slope < -1e-14) ti = std::max(0.0, -r[i] / slope);
      } else {
        if (slope > 1e-14) ti = std::max(0.0, -r[i] / slope);
      }
      if (ti < t) {
        t = ti;
        crossing = i;
      }
    }
    u += t * d;
    refresh_residuals();
    if (crossing >= 0) {
      in_kink[crossing] = 1;
      in_viol[crossing] = 0;
      kink.push_back(crossing);
    }
    // Repair any classification drift (ties crossing together).
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_kink[i]) continue;
      if (r[i] > classify_tol) in_viol[i] = 1;
      if (r[i] < -classify_tol) in_viol[i] = 0;
    }
  }

  if (!settled) {
    // Pattern walk failed to settle: solve the full transcription instead.
    ++fallback_count_;
    if (!fallback_) {
      fallback_ = std::make_unique<MpcPolicy>(spec_, theta_);
    }
    const PrimalDualSolution& sol = fallback_->solve(s);
    const MpcLayout layout{N};
    last_.u.resize(N);
    for (int kk = 0; kk < N; ++kk) last_.u[kk] = sol.z[layout.u_index(kk)];
    last_.objective = sol.objective;
    last_.iterations = iter;
    have_last_ = true;
    return last_;
  }

  double obj = 0.5 * u.dot(hess_ * u) + c.dot(u);
  for (Eigen::Index i = 0; i < m; ++i) {
    obj += rows_[i].weight * std::max(0.0, r[i]);
  }
  for (const Row& row : fixed_rows_) {
    obj += row.weight * std::max(0.0, row.beta.dot(s) + row.b0);
  }
  double gk = 1.0;
  for (int kk = 0; kk < N; ++kk) {
    const Vector2d mk = a_pow_[kk] * s + m_off_[kk];
    obj += gk * mk.squaredNorm();
    gk *= spec_.gamma;
  }
  const Vector2d mn = a_pow_[N] * s + m_off_[N];
  obj += gk * mn.dot(spec_.terminal_cost * mn);

  last_.u = u;
  last_.objective = obj;
  last_.iterations = iter;
  have_last_ = true;
  return last_;
}

}  // namespace mpcqn
