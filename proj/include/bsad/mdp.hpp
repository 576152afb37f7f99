#pragma once

#include <vector>

#include <Eigen/Core>

namespace bsad {

/// Stochasticity tolerance for transition rows and initial distributions.
inline constexpr double kStochasticTolerance = 1e-12;

/// Finite-horizon tabular MDP with step-dependent kernels.
///
/// kernel(h) is an (S*A) x S matrix holding P_h(. | s, a) in row s*A + a, for h in
/// 0 .. H-2. Each (step, state) may expose fewer than A actions: actions_at(h, s) = n
/// makes actions 0 .. n-1 available. Rows of unavailable actions must still be
/// stochastic but are never used by the algorithms.
class EpisodicMdp {
 public:
  EpisodicMdp(int num_states, int num_actions, int horizon, std::vector<Eigen::MatrixXd> kernels,
              Eigen::VectorXd initial_dist, Eigen::MatrixXi available_actions = {});

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }

  int actions_at(int step, int state) const { return available_(step, state); }
  const Eigen::MatrixXi& available_actions() const { return available_; }

  const Eigen::MatrixXd& kernel(int step) const { return kernels_[step]; }
  const std::vector<Eigen::MatrixXd>& kernels() const { return kernels_; }
  auto transition(int step, int state, int action) const {
    return kernels_[step].row(state * num_actions_ + action);
  }

  const Eigen::VectorXd& initial_dist() const { return initial_dist_; }

  bool valid_state(int s) const { return s >= 0 && s < num_states_; }
  bool valid_step(int h) const { return h >= 0 && h < horizon_; }

 private:
  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<Eigen::MatrixXd> kernels_;
  Eigen::VectorXd initial_dist_;
  Eigen::MatrixXi available_;
};

/// Infinite-horizon discounted MDP with a stationary kernel ((S*A) x S) and rewards r(s,a).
class DiscountedMdp {
 public:
  DiscountedMdp(int num_states, int num_actions, double gamma, Eigen::MatrixXd kernel,
                Eigen::MatrixXd reward, Eigen::VectorXd initial_dist);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  const Eigen::MatrixXd& kernel() const { return kernel_; }
  const Eigen::MatrixXd& reward() const { return reward_; }
  const Eigen::VectorXd& initial_dist() const { return initial_dist_; }
  auto transition(int state, int action) const { return kernel_.row(state * num_actions_ + action); }

 private:
  int num_states_;
  int num_actions_;
  double gamma_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd reward_;
  Eigen::VectorXd initial_dist_;
};

}  // namespace bsad
