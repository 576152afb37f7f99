#include "bsad/harness/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bsad/errors.hpp"
#include "bsad/exact.hpp"
#include "bsad/exploration.hpp"
#include "bsad/random.hpp"

namespace bsad {
namespace {

DeterministicPolicy greedy_policy(const EpisodicMdp& mdp, const std::vector<Eigen::MatrixXd>& q) {
  DeterministicPolicy pi(mdp.horizon(), mdp.num_states());
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      Eigen::Index best = 0;
      q[static_cast<std::size_t>(h)].row(s).head(mdp.actions_at(h, s)).maxCoeff(&best);
      pi.set(h, s, static_cast<int>(best));
    }
  }
  return pi;
}

}  // namespace

QLearningResult q_learning_ucb(const EpisodicMdp& mdp, const TrajectoryReward& reward, std::int64_t episodes,
                               std::int64_t cadence, const QLearningConfig& config) {
  if (!reward.is_cumulative()) throw UnsupportedInstance("Q-learning needs per-step rewards");
  reward.check_compatible(mdp);
  if (episodes < 1 || cadence < 1) throw std::invalid_argument("q_learning_ucb: episodes and cadence must be positive");
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  const double D = reward.bound();
  const double io = iota(S, A, H, config.c, config.delta, episodes);

  Rng rng(derive_seed(config.seed, 2));
  std::vector<Eigen::MatrixXd> q(static_cast<std::size_t>(H), Eigen::MatrixXd::Constant(S, A, D));
  std::vector<Eigen::MatrixXi> visits(static_cast<std::size_t>(H), Eigen::MatrixXi::Zero(S, A));
  auto value = [&](int h, int s) {
    if (h >= H) return 0.0;
    return std::min(D, q[static_cast<std::size_t>(h)].row(s).head(mdp.actions_at(h, s)).maxCoeff());
  };

  QLearningResult result;
  result.trace.push_back({0, initial_value(mdp, reward, greedy_policy(mdp, q)), 0});
  std::vector<int> ties;
  for (std::int64_t k = 1; k <= episodes; ++k) {
    int s = sample_categorical(mdp.initial_dist(), rng);
    for (int h = 0; h < H; ++h) {
      auto& qh = q[static_cast<std::size_t>(h)];
      const int n = mdp.actions_at(h, s);
      const double top = qh.row(s).head(n).maxCoeff();
      ties.clear();
      for (int a = 0; a < n; ++a) {
        if (qh(s, a) == top) ties.push_back(a);
      }
      const int a = ties.size() == 1 ? ties.front() : ties[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(ties.size())))];
      const int next = h + 1 < H ? sample_categorical(mdp.transition(h, s, a), rng) : 0;
      const std::int64_t t = ++visits[static_cast<std::size_t>(h)](s, a);
      const double alpha = learning_rate(t, H);
      const double target = reward.step_reward(h, s, a) + value(h + 1, next) + exploration_bonus(H, io, t);
      qh(s, a) = (1.0 - alpha) * qh(s, a) + alpha * target;
      s = next;
    }
    if (k % cadence == 0 || k == episodes) {
      result.trace.push_back({k, initial_value(mdp, reward, greedy_policy(mdp, q)), 0});
    }
  }
  result.policy = greedy_policy(mdp, q);
  return result;
}

}  // namespace bsad
