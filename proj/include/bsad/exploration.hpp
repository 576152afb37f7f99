#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "bsad/mdp.hpp"
#include "bsad/random.hpp"

namespace bsad {

/// Learning rate (H + 1) / (H + t) of the t-th update.
inline double learning_rate(std::int64_t t, int horizon) {
  return static_cast<double>(horizon + 1) / static_cast<double>(horizon + t);
}

/// sqrt(H * iota / max(t, 1)).
double exploration_bonus(int horizon, double iota, std::int64_t t);

/// min(1, exploration_bonus(H, iota, count)).
double target_weight(int horizon, double iota, std::int64_t count);

/// c * ln(S A H k / delta), clamped at 0. Throws for k < 1.
double iota(int num_states, int num_actions, int horizon, double c, double delta, std::int64_t k);

/// Optimistic reward-free exploration tables (J, L, W) plus the in-phase episode counter.
struct ExplorationState {
  ExplorationState(int num_states, int num_actions, int horizon, double c, double delta);

  /// J = 1, L = 0, W = 1, k = 0.
  void reset();

  int num_states;
  int num_actions;
  int horizon;
  double c;
  double delta;

  std::vector<Eigen::MatrixXd> J;  // per step, S x A
  std::vector<Eigen::MatrixXi> L;  // per step, S x A
  Eigen::MatrixXd W;               // H x S
  std::int64_t k = 0;

  bool operator==(const ExplorationState&) const = default;
};

double iota(const ExplorationState& state, std::int64_t k);

struct JUpdate {
  int step = 0;
  int state = 0;
  int action = 0;
  std::int64_t t = 0;  // visit count after increment
  double next_weight = 0.0;
  double bonus = 0.0;
  double value = 0.0;  // J after the update
};

struct ExplorationTrace {
  std::vector<int> states;  // s_0 .. s_l
  std::vector<JUpdate> updates;
};

/// Rolls from s_0 (initial_state, or a draw from mu0) to the target step, greedily on J (uniform tie breaks), updating
/// L, W and J along the way; returns the state reached at `target_step`.
/// The weight of the state reached at the target step is the stored W[target_step].
int explore_episode(const EpisodicMdp& mdp, ExplorationState& state, int target_step, Rng& rng,
                    std::optional<int> initial_state = std::nullopt, ExplorationTrace* trace = nullptr);

/// Bumps the dueling visit counter at (step, s) and refreshes W[step](s). Returns the new weight.
double target_update(ExplorationState& state, Eigen::MatrixXi& target_visits, int step, int s);

/// The weight of the i-th update in a t-step recursion (i = 0 is the initial value).
double alpha_weight(std::int64_t t, std::int64_t i, int horizon);

/// alpha_weight(t, i, H) for t = i .. last.
std::vector<double> alpha_weight_column(std::int64_t i, std::int64_t last, int horizon);

/// alpha_weight(t, i, H) for i = 0 .. t.
std::vector<double> alpha_weight_row(std::int64_t t, int horizon);

/// Rows episode,h,s,a,J,L for every entry of the tables.
void write_exploration_snapshot(std::ostream& out, const ExplorationState& state, std::int64_t episode,
                                bool header);

}  // namespace bsad
