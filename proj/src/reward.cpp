#include "bsad/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bsad/mdp.hpp"

namespace bsad {

TrajectoryReward TrajectoryReward::cumulative(std::vector<Eigen::MatrixXd> per_step) {
  if (per_step.empty()) throw std::invalid_argument("cumulative reward needs at least one step");
  TrajectoryReward f;
  f.kind_ = Kind::cumulative;
  f.horizon_ = static_cast<int>(per_step.size());
  for (std::size_t h = 0; h < per_step.size(); ++h) {
    const auto& r = per_step[h];
    if (!r.allFinite() || (r.array() < 0.0).any()) {
      throw std::invalid_argument("reward table " + std::to_string(h) + " must be finite and non-negative");
    }
    if (r.rows() != per_step.front().rows() || r.cols() != per_step.front().cols()) {
      throw std::invalid_argument("reward tables must share one S x A shape");
    }
    f.bound_ += r.maxCoeff();
  }
  f.per_step_ = std::move(per_step);
  return f;
}

TrajectoryReward TrajectoryReward::tabular(int horizon, std::map<Trajectory, double> table) {
  if (horizon < 1) throw std::invalid_argument("tabular reward needs horizon >= 1");
  TrajectoryReward f;
  f.kind_ = Kind::tabular_general;
  f.horizon_ = horizon;
  for (const auto& [tau, value] : table) {
    if (tau.empty() || tau.start_step < 0 || tau.end_step() >= horizon) {
      throw std::invalid_argument("tabular reward entry has steps outside 0..H-1");
    }
    if (!std::isfinite(value) || value < 0.0) {
      throw std::invalid_argument("tabular reward values must be finite and non-negative");
    }
    f.bound_ = std::max(f.bound_, value);
  }
  f.table_ = std::move(table);
  return f;
}

double TrajectoryReward::operator()(const Trajectory& tau) const {
  if (kind_ == Kind::cumulative) {
    double total = 0.0;
    int h = tau.start_step;
    for (const auto& sa : tau.steps) total += per_step_[h++](sa.state, sa.action);
    return total;
  }
  const auto it = table_.find(tau);
  if (it == table_.end()) {
    throw std::out_of_range("tabular reward has no entry for a trajectory starting at step " +
                            std::to_string(tau.start_step) + " of length " + std::to_string(tau.steps.size()));
  }
  return it->second;
}

void TrajectoryReward::check_compatible(const EpisodicMdp& mdp) const {
  if (horizon_ != mdp.horizon()) throw std::invalid_argument("reward horizon differs from MDP horizon");
  if (kind_ == Kind::cumulative) {
    if (per_step_.front().rows() != mdp.num_states() || per_step_.front().cols() != mdp.num_actions()) {
      throw std::invalid_argument("reward tables must be S x A");
    }
    return;
  }
  for (const auto& [tau, value] : table_) {
    for (const auto& sa : tau.steps) {
      if (!mdp.valid_state(sa.state) || sa.action < 0 || sa.action >= mdp.num_actions()) {
        throw std::invalid_argument("tabular reward entry references an invalid state or action");
      }
    }
  }
}

}  // namespace bsad
