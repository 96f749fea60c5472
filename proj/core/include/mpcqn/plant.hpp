// SPDX-License-Identifier: MIT
/// \file plant.hpp
/// \brief True system dynamics and the exact-penalty running cost.
///
/// The plant is the real linear system the policy acts on; its matrices are
/// generally *not* the controller's model.  The running cost combines a
/// quadratic state/input term with a linear penalty on box violations:
///
///   l(s, a) = s's + a^2/2 + w * sum_i max(0, violation_i(s, a)).

#pragma once

#include <Eigen/Dense>
#include <algorithm>

namespace mpcqn {

class Plant {
 public:
  Plant(const Eigen::Matrix2d& A, const Eigen::Vector2d& B,
        const Eigen::Vector2d& state_lb, const Eigen::Vector2d& state_ub,
        double input_lb, double input_ub, double penalty_weight = 100.0)
      : A_(A),
        B_(B),
        state_lb_(state_lb),
        state_ub_(state_ub),
        input_lb_(input_lb),
        input_ub_(input_ub),
        penalty_(penalty_weight) {}

  /// The benchmark plant matched by exact_model_parameters().
  static Plant case_study() {
    Eigen::Matrix2d A;
    A << 0.9, 0.35, 0.0, 1.1;
    return Plant(A, Eigen::Vector2d(0.0813, 0.2), Eigen::Vector2d(0.0, -1.0),
                 Eigen::Vector2d(1.0, 1.0), -1.0, 1.0);
  }

  const Eigen::Matrix2d& A() const { return A_; }
  const Eigen::Vector2d& B() const { return B_; }
  const Eigen::Vector2d& state_lb() const { return state_lb_; }
  const Eigen::Vector2d& state_ub() const { return state_ub_; }
  double input_lb() const { return input_lb_; }
  double input_ub() const { return input_ub_; }

  Eigen::Vector2d step(const Eigen::Vector2d& s, double a) const {
    return A_ * s + B_ * a;
  }

  /// Largest positive box violation over the four state rows.
  double state_violation(const Eigen::Vector2d& s) const {
    double v = 0.0;
    for (int i = 0; i < 2; ++i) {
      v = std::max(v, state_lb_[i] - s[i]);
      v = std::max(v, s[i] - state_ub_[i]);
    }
    return v;
  }

  double stage_cost(const Eigen::Vector2d& s, double a) const {
    double penalty = 0.0;
    for (int i = 0; i < 2; ++i) {
      penalty += std::max(0.0, state_lb_[i] - s[i]);
      penalty += std::max(0.0, s[i] - state_ub_[i]);
    }
    penalty += std::max(0.0, input_lb_ - a);
    penalty += std::max(0.0, a - input_ub_);
    return s.squaredNorm() + 0.5 * a * a + penalty_ * penalty;
  }

 private:
  Eigen::Matrix2d A_;
  Eigen::Vector2d B_;
  Eigen::Vector2d state_lb_, state_ub_;
  double input_lb_, input_ub_;
  double penalty_;
};

}  // namespace mpcqn
