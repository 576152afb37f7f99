#pragma once

#include <cstdint>
#include <vector>

#include "bsad/mdp.hpp"
#include "bsad/policy.hpp"
#include "bsad/reward.hpp"

namespace bsad {

struct QLearningConfig {
  double delta = 0.1;
  double c = 1.0;
  std::uint64_t seed = 0;
};

struct TracePoint {
  std::int64_t episode = 0;
  double policy_value = 0.0;
  std::int64_t queries = 0;
};

struct QLearningResult {
  std::vector<TracePoint> trace;
  DeterministicPolicy policy;  // greedy on the final Q table
};

/// Optimistic tabular Q-learning on observed per-step rewards, with learning rate
/// (H + 1) / (H + t) and bonus sqrt(H iota / t), iota = c ln(S A H T / delta).
/// The trace holds the exact value of the greedy policy every `cadence` episodes
/// (and at episode 0). Throws UnsupportedInstance for non-cumulative rewards.
QLearningResult q_learning_ucb(const EpisodicMdp& mdp, const TrajectoryReward& reward, std::int64_t episodes,
                               std::int64_t cadence, const QLearningConfig& config);

}  // namespace bsad
