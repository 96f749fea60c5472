// SPDX-License-Identifier: MIT
/// \file mpc.cpp
/// \brief MPC transcription and policy implementation.

#include "mpcqn/mpc.hpp"

#include <type_traits>
#include <utility>
#include <vector>

#include "mpcqn/errors.hpp"

namespace mpcqn {

using Eigen::Index;
using Eigen::Vector2d;
using Eigen::VectorXd;

OcpSpec OcpSpec::case_study() {
  OcpSpec spec;
  spec.horizon = 10;
  spec.gamma = 1.0;
  spec.slack_weight = 100.0;
  spec.terminal_slack_weight = 100.0;
  spec.terminal_cost << 5.7, 1.3, 1.3, 3.3;
  spec.state_lb << 0.0, -1.0;
  spec.state_ub << 1.0, 1.0;
  spec.input_lb = -1.0;
  spec.input_ub = 1.0;
  return spec;
}

VectorXd initial_model_parameters() {
  VectorXd th(kModelParamCount);
  th << 1.0, 0.25, 1.0, 0.1, 0.3, 0.0, 0.0, 0.0;
  return th;
}

VectorXd exact_model_parameters() {
  VectorXd th(kModelParamCount);
  th << 0.9, 0.35, 1.1, 0.0813, 0.2, 0.0, 0.0, 0.0;
  return th;
}

ParamNlp build_mpc_nlp(const OcpSpec& spec) {
  if (spec.horizon < 1) throw ConfigError("mpc: horizon must be at least 1");
  if (!(spec.state_lb[0] < spec.state_ub[0]) || !(spec.state_lb[1] < spec.state_ub[1]) ||
      !(spec.input_lb < spec.input_ub)) {
    throw ConfigError("mpc: box bounds must have positive width");
  }
  const MpcLayout lay{spec.horizon};
  const int N = spec.horizon;
  const int nz = lay.n_z();
  const std::size_t n_in = static_cast<std::size_t>(nz + lay.n_p());

  // Parameter slots: th occupies [nz, nz+8), the current state s [nz+8, nz+10)
  // of the concatenated (z, p) input.
  const int p0 = nz;
  const int s0 = nz + kModelParamCount;

  ParamNlp nlp;
  nlp.n_z = static_cast<std::size_t>(nz);
  nlp.n_h = static_cast<std::size_t>(lay.n_h());
  nlp.n_g = static_cast<std::size_t>(lay.n_g());
  nlp.n_p = static_cast<std::size_t>(lay.n_p());
  nlp.quadratic = true;

  nlp.phi = SmoothMap(n_in, 1, [spec, lay, N, s0](auto in, auto out) {
    using T = std::remove_cvref_t<decltype(out[0])>;
    T acc = in[s0] * 0.0;
    double gk = 1.0;
    for (int k = 0; k < N; ++k) {
      const auto& x0 = k == 0 ? in[s0] : in[lay.x_index(k, 0)];
      const auto& x1 = k == 0 ? in[s0 + 1] : in[lay.x_index(k, 1)];
      const auto& u = in[lay.u_index(k)];
      acc += (x0 * x0 + x1 * x1 + u * u * 0.5) * gk;
      T slack = in[lay.sigma_index(k, 0)] * 0.0;
      for (int j = 0; j < 6; ++j) slack += in[lay.sigma_index(k, j)];
      acc += slack * (gk * spec.slack_weight);
      gk *= spec.gamma;
    }
    const auto& xN0 = in[lay.x_index(N, 0)];
    const auto& xN1 = in[lay.x_index(N, 1)];
    acc += (xN0 * xN0 * spec.terminal_cost(0, 0) +
            xN0 * xN1 * (2.0 * spec.terminal_cost(0, 1)) +
            xN1 * xN1 * spec.terminal_cost(1, 1)) *
           gk;
    T tslack = in[lay.sigma_terminal_index(0)] * 0.0;
    for (int j = 0; j < 4; ++j) tslack += in[lay.sigma_terminal_index(j)];
    acc += tslack * (gk * spec.terminal_slack_weight);
    out[0] = acc;
  });

  nlp.h = SmoothMap(n_in, nlp.n_h, [lay, N, p0, s0](auto in, auto out) {
    for (int k = 0; k < N; ++k) {
      const auto& x0 = k == 0 ? in[s0] : in[lay.x_index(k, 0)];
      const auto& x1 = k == 0 ? in[s0 + 1] : in[lay.x_index(k, 1)];
      const auto& u = in[lay.u_index(k)];
      out[2 * k] = in[lay.x_index(k + 1, 0)] - in[p0] * x0 - in[p0 + 1] * x1 -
                   in[p0 + 3] * u - in[p0 + 5];
      out[2 * k + 1] =
          in[lay.x_index(k + 1, 1)] - in[p0 + 2] * x1 - in[p0 + 4] * u - in[p0 + 6];
    }
  });

  nlp.g = SmoothMap(n_in, nlp.n_g, [spec, lay, N, p0, s0](auto in, auto out) {
    for (int k = 0; k < N; ++k) {
      const auto& x0 = k == 0 ? in[s0] : in[lay.x_index(k, 0)];
      const auto& x1 = k == 0 ? in[s0 + 1] : in[lay.x_index(k, 1)];
      const auto& u = in[lay.u_index(k)];
      const int base = 12 * k;
      out[base + 0] = in[p0 + 7] + spec.state_lb[0] - x0 - in[lay.sigma_index(k, 0)];
      out[base + 1] = spec.state_lb[1] - x1 - in[lay.sigma_index(k, 1)];
      out[base + 2] = x0 - spec.state_ub[0] - in[lay.sigma_index(k, 2)];
      out[base + 3] = x1 - spec.state_ub[1] - in[lay.sigma_index(k, 3)];
      out[base + 4] = spec.input_lb - u - in[lay.sigma_index(k, 4)];
      out[base + 5] = u - spec.input_ub - in[lay.sigma_index(k, 5)];
      for (int j = 0; j < 6; ++j) {
        out[base + 6 + j] = in[lay.sigma_index(k, j)] * (-1.0);
      }
    }
    const int tb = 12 * N;
    const auto& xN0 = in[lay.x_index(N, 0)];
    const auto& xN1 = in[lay.x_index(N, 1)];
    out[tb + 0] = in[p0 + 7] + spec.state_lb[0] - xN0 - in[lay.sigma_terminal_index(0)];
    out[tb + 1] = spec.state_lb[1] - xN1 - in[lay.sigma_terminal_index(1)];
    out[tb + 2] = xN0 - spec.state_ub[0] - in[lay.sigma_terminal_index(2)];
    out[tb + 3] = xN1 - spec.state_ub[1] - in[lay.sigma_terminal_index(3)];
    for (int j = 0; j < 4; ++j) {
      out[tb + 4 + j] = in[lay.sigma_terminal_index(j)] * (-1.0);
    }
  });

  // Constant cross curvature of the dynamics rows: every model-matrix entry
  // multiplies one decision variable (states beyond x_0 and all inputs).
  BilinearStructure bil;
  for (int k = 0; k < N; ++k) {
    if (k > 0) {
      bil.h_cross.push_back({2 * k, lay.x_index(k, 0), 0, -1.0});
      bil.h_cross.push_back({2 * k, lay.x_index(k, 1), 1, -1.0});
      bil.h_cross.push_back({2 * k + 1, lay.x_index(k, 1), 2, -1.0});
    }
    bil.h_cross.push_back({2 * k, lay.u_index(k), 3, -1.0});
    bil.h_cross.push_back({2 * k + 1, lay.u_index(k), 4, -1.0});
  }
  nlp.bilinear = std::move(bil);
  return nlp;
}

MpcPolicy::MpcPolicy(OcpSpec spec, VectorXd theta, IpOptions opts)
    : spec_(spec),
      layout_{spec.horizon},
      theta_(std::move(theta)),
      solver_(build_mpc_nlp(spec), opts) {
  if (theta_.size() != kModelParamCount) {
    throw ConfigError("mpc: model parameter vector has wrong size");
  }
  cache_ = solver_.build_cache(param_vector(Vector2d::Zero()));
}

VectorXd MpcPolicy::param_vector(const Vector2d& s) const {
  VectorXd p(layout_.n_p());
  p.head(kModelParamCount) = theta_;
  p.tail(2) = s;
  return p;
}

void MpcPolicy::set_theta(const VectorXd& theta) {
  if (theta.size() != kModelParamCount) {
    throw ConfigError("mpc: model parameter vector has wrong size");
  }
  theta_ = theta;
  cache_ = solver_.build_cache(param_vector(Vector2d::Zero()));
  have_last_ = false;
}

const PrimalDualSolution& MpcPolicy::solve(const Vector2d& s) {
  solver_.refresh_cache(cache_, param_vector(s));
  PrimalDualSolution sol =
      solver_.solve_cached(cache_, VectorXd(), have_last_ ? &last_ : nullptr);
  if (!sol.converged() && have_last_) {
    sol = solver_.solve_cached(cache_);  // retry cold: warm start may mislead
  }
  if (!sol.converged()) {
    if (sol.status == SolveStatus::Singular) {
      throw SingularKktError("mpc: singular system while solving the policy problem");
    }
    throw NumericalError(std::string("mpc: policy solve failed (") +
                         to_string(sol.status) + ")");
  }
  last_ = std::move(sol);
  have_last_ = true;
  return last_;
}

double MpcPolicy::act(const Vector2d& s) { return solve(s).z[layout_.u_index(0)]; }

PolicyDerivatives MpcPolicy::derivatives(const Vector2d& s) {
  const PrimalDualSolution& sol = solve(s);
  SensOptions opts;
  opts.param_offset = 0;
  opts.param_count = kModelParamCount;
  const VectorXd p = param_vector(s);
  const auto fo = first_order_sensitivity(nlp(), sol, p, opts, &cache_);
  const auto so = second_order_sensitivity(nlp(), sol, p, fo, opts);

  PolicyDerivatives d;
  const Index u0 = layout_.u_index(0);
  d.u0 = sol.z[u0];
  d.du0 = fo.xi_p.row(u0).transpose();
  d.d2u0 = so.component(static_cast<std::size_t>(u0));
  return d;
}

}  // namespace mpcqn
