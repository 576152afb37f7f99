#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "bsad/trajectory.hpp"

namespace bsad {

class EpisodicMdp;

/// The trajectory reward f, mapping (partial) trajectories into [0, D].
///
/// Cumulative rewards hold one S x A table per step and score a suffix by summing its
/// per-step entries. Tabular-general rewards hold an explicit value for every trajectory
/// the caller intends to score; looking up a missing trajectory throws.
class TrajectoryReward {
 public:
  enum class Kind { cumulative, tabular_general };

  static TrajectoryReward cumulative(std::vector<Eigen::MatrixXd> per_step);
  static TrajectoryReward tabular(int horizon, std::map<Trajectory, double> table);

  Kind kind() const { return kind_; }
  bool is_cumulative() const { return kind_ == Kind::cumulative; }
  int horizon() const { return horizon_; }

  double operator()(const Trajectory& tau) const;

  /// r_h(s, a); cumulative kind only.
  double step_reward(int step, int state, int action) const { return per_step_[step](state, action); }
  const std::vector<Eigen::MatrixXd>& per_step() const { return per_step_; }
  const std::map<Trajectory, double>& table() const { return table_; }

  /// D: the largest reward any (partial) trajectory can receive.
  double bound() const { return bound_; }

  /// Throws std::invalid_argument if the shapes do not match the MDP.
  void check_compatible(const EpisodicMdp& mdp) const;

 private:
  Kind kind_ = Kind::cumulative;
  int horizon_ = 0;
  std::vector<Eigen::MatrixXd> per_step_;
  std::map<Trajectory, double> table_;
  double bound_ = 0.0;
};

}  // namespace bsad
