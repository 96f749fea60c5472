// SPDX-License-Identifier: MIT
/// \file episode.hpp
/// \brief Closed-loop episodes, replay storage, test sets, and evaluation.
///
/// An episode applies a policy to the plant for steps i = 0..n_steps
/// INCLUSIVE (n_steps + 1 applied actions) and accumulates the discounted
/// cost of the actions actually applied, which may carry additive
/// exploration noise clipped to the input box.  Test sets are built by
/// sampling initial states uniformly over the feasible box and keeping only
/// those whose noise-free reference trajectories stay inside the state box;
/// evaluation reports the mean cost and the feasibility statistics over
/// such a set.

#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mpcqn/condensed.hpp"
#include "mpcqn/mpc.hpp"
#include "mpcqn/plant.hpp"

namespace mpcqn {

/// One applied action: state, action, realized stage cost, successor.
struct Transition {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  double a = 0.0;
  double cost = 0.0;
  Eigen::Vector2d s_next = Eigen::Vector2d::Zero();
  int ic_index = 0;  ///< which initial condition produced the episode
  int step = 0;      ///< index i within the episode
};

/// Bounded FIFO of transitions; insertion past capacity evicts the oldest.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(const Transition& t) {
    data_.push_back(t);
    if (data_.size() > capacity_) data_.pop_front();
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }
  void clear() { data_.clear(); }

  /// Oldest-first access.
  const Transition& operator[](std::size_t i) const { return data_[i]; }

 private:
  std::deque<Transition> data_;
  std::size_t capacity_;
};

/// A policy as the rollout machinery sees it: an action map plus an
/// optional per-episode hook (used to reset solver warm starts).
struct RolloutPolicy {
  std::function<double(const Eigen::Vector2d&)> act;
  std::function<void()> begin_episode;
};

/// Adapters for the two MPC solvers.  The returned object references the
/// policy; keep the policy alive while rolling out.
RolloutPolicy make_rollout_policy(CondensedPolicy& policy);
RolloutPolicy make_rollout_policy(MpcPolicy& policy);

struct RolloutOptions {
  int n_steps = 50;    ///< actions applied at i = 0..n_steps inclusive
  double gamma = 1.0;
  double noise_std = 0.0;  ///< 0 disables exploration noise and clipping
  std::uint64_t noise_seed = 0;
  double action_lb = -1.0;  ///< clip range for noisy actions
  double action_ub = 1.0;
  int ic_index = 0;
  ReplayBuffer* buffer = nullptr;  ///< transitions are appended when given
};

struct RolloutResult {
  double value = 0.0;  ///< V = sum_i gamma^i cost_i over applied actions
  std::vector<Transition> steps;
};

/// Runs one episode.  With noise_std > 0 each action is
/// clip(policy(s) + eps, action_lb, action_ub) with eps ~ N(0, noise_std^2)
/// drawn from a stream seeded by noise_seed; without noise the policy
/// output is applied unmodified.
RolloutResult rollout(const RolloutPolicy& policy, const Plant& plant,
                      const Eigen::Vector2d& s0, const RolloutOptions& opts);

/// Draws initial states uniformly over the box [lb, ub], coordinate by
/// coordinate, from a stream seeded by seed.
std::vector<Eigen::Vector2d> draw_initial_states(std::uint64_t seed, int count,
                                                 const Eigen::Vector2d& lb,
                                                 const Eigen::Vector2d& ub);

struct TestSet {
  std::vector<Eigen::Vector2d> initial_states;  ///< retained candidates
  double reference_mean_cost = 0.0;  ///< mean episode cost of the reference
  int candidate_count = 0;
};

/// Samples candidate initial states uniformly over the plant's state box,
/// rolls each out noise-free under the reference policy, and retains only
/// candidates whose visited states s_1..s_n stay inside the state box
/// (violations up to feas_tol are tolerated as solver round-off).
TestSet make_test_set(const RolloutPolicy& reference, const Plant& plant,
                      std::uint64_t seed, int n_candidates, int n_steps,
                      double gamma, double feas_tol = 1e-9);

struct EvalMetrics {
  double mean_cost = 0.0;       ///< J: mean episode cost over all trajectories
  int n_traj = 0;               ///< n_T
  int infeasible_traj = 0;      ///< n_T_if: trajectories with any bad point
  long n_points = 0;            ///< n_P: checked points (n_steps per trajectory)
  long infeasible_points = 0;   ///< n_P_if
  double cv_max = 0.0;          ///< largest state-box violation
  std::optional<double> cv_mean;  ///< mean violation over infeasible points
};

/// Noise-free closed-loop evaluation over a set of initial states.  The
/// checked points of a trajectory are s_1..s_n (the initial state is inside
/// the box by construction); a point is infeasible when its state-box
/// violation exceeds feas_tol.
EvalMetrics evaluate(const RolloutPolicy& policy, const Plant& plant,
                     const std::vector<Eigen::Vector2d>& initial_states,
                     int n_steps, double gamma, double feas_tol = 1e-9);

/// Writes episodes as CSV rows (traj_id, step, s1, s2, a, l, feasible_flag);
/// the flag marks whether the state the action was computed at is inside
/// the state box (violation <= feas_tol).
void write_trajectories_csv(const std::filesystem::path& path,
                            const std::vector<RolloutResult>& episodes,
                            const Plant& plant, double feas_tol = 1e-9);

}  // namespace mpcqn
