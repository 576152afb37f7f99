#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "bsad/exact.hpp"
#include "bsad/harness/environments.hpp"
#include "bsad/oracle.hpp"

namespace bsad::testing {

inline Eigen::RowVectorXd random_row(int n, Rng& rng) {
  Eigen::RowVectorXd row(n);
  for (int i = 0; i < n; ++i) row(i) = 0.05 + uniform01(rng);
  return row / row.sum();
}

/// Random instance with a random (not necessarily full) support pattern and cumulative rewards in [0, 1].
inline Instance random_cumulative(int S, int A, int H, std::uint64_t seed, bool sparse = false) {
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> kernels;
  for (int h = 0; h + 1 < H; ++h) {
    Eigen::MatrixXd k(S * A, S);
    for (int r = 0; r < S * A; ++r) {
      Eigen::RowVectorXd row = random_row(S, rng);
      if (sparse) {
        for (int n = 0; n < S; ++n) {
          if (uniform01(rng) < 0.4) row(n) = 0.0;
        }
        if (row.sum() == 0.0) row(uniform_index(rng, S)) = 1.0;
        row /= row.sum();
      }
      k.row(r) = row;
    }
    kernels.push_back(std::move(k));
  }
  const Eigen::VectorXd mu = random_row(S, rng).transpose();
  std::vector<Eigen::MatrixXd> rewards;
  for (int h = 0; h < H; ++h) {
    Eigen::MatrixXd r(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) r(s, a) = uniform01(rng);
    }
    rewards.push_back(std::move(r));
  }
  return {EpisodicMdp(S, A, H, std::move(kernels), mu), TrajectoryReward::cumulative(std::move(rewards))};
}

/// Visits every deterministic policy of the instance.
inline void for_each_policy(const EpisodicMdp& mdp, const std::function<void(const DeterministicPolicy&)>& visit) {
  DeterministicPolicy pi(mdp.horizon(), mdp.num_states());
  std::function<void(int)> rec = [&](int cell) {
    if (cell == mdp.horizon() * mdp.num_states()) {
      visit(pi);
      return;
    }
    const int h = cell / mdp.num_states();
    const int s = cell % mdp.num_states();
    for (int a = 0; a < mdp.actions_at(h, s); ++a) {
      pi.set(h, s, a);
      rec(cell + 1);
    }
  };
  rec(0);
}

/// Tabular-general copy of a cumulative reward: every suffix of every trajectory gets
/// its cumulative value, so both representations score trajectories identically.
inline TrajectoryReward tabulate(const EpisodicMdp& mdp, const TrajectoryReward& cumulative) {
  std::map<Trajectory, double> table;
  std::function<void(Trajectory&)> grow = [&](Trajectory& tau) {
    table[tau] = cumulative(tau);
    if (tau.end_step() + 1 == mdp.horizon()) return;
    for (int s = 0; s < mdp.num_states(); ++s) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        tau.steps.push_back({s, a});
        grow(tau);
        tau.steps.pop_back();
      }
    }
  };
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        Trajectory tau{h, {{s, a}}};
        grow(tau);
      }
    }
  }
  return TrajectoryReward::tabular(mdp.horizon(), std::move(table));
}

/// Fraction of fresh batch pairs in which the a0 batch wins, using the sampled oracle.
inline double monte_carlo_preference(const EpisodicMdp& mdp, const TrajectoryReward& f, int h, int s, int a0, int a1,
                                     const DeterministicPolicy& tail, int batch_size, int samples,
                                     std::uint64_t seed) {
  Rng rng(seed);
  PreferenceOracle oracle(f, TieRule::uniform_random, seed ^ 0x5eedULL);
  std::int64_t wins = 0;
  for (int i = 0; i < samples; ++i) {
    const TrajectoryBatch d0 = sample_batch(mdp, tail, h, s, a0, batch_size, rng);
    const TrajectoryBatch d1 = sample_batch(mdp, tail, h, s, a1, batch_size, rng);
    wins += oracle.human_feedback(d0, d1) == 0;
  }
  return static_cast<double>(wins) / samples;
}

/// Three non-transitive dice behind one decision: step 0, state 0 offers three actions,
/// each landing uniformly on three of nine terminal states whose step-1 reward is
/// (s + 1) / 10. Single draws beat each other in a cycle with probability 5/9.
inline Instance intransitive_dice() {
  const int S = 9, A = 3;
  const int faces[3][3] = {{1, 3, 8}, {0, 5, 7}, {2, 4, 6}};
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(S * A, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) kernel(s * A + a, s) = 1.0;
  }
  for (int a = 0; a < A; ++a) {
    kernel.row(a).setZero();
    for (int face : faces[a]) kernel(a, face) = 1.0 / 3.0;
  }
  Eigen::MatrixXi available = Eigen::MatrixXi::Ones(2, S);
  available(0, 0) = 3;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(S);
  mu(0) = 1.0;
  Eigen::MatrixXd last = Eigen::MatrixXd::Zero(S, A);
  for (int s = 0; s < S; ++s) last(s, 0) = (s + 1) / 10.0;
  return {EpisodicMdp(S, A, 2, {kernel}, mu, available),
          TrajectoryReward::cumulative({Eigen::MatrixXd::Zero(S, A), last})};
}

inline double binomial_std(double p, int n) { return std::sqrt(p * (1.0 - p) / n); }

/// Distribution of a sum of `copies` draws by direct enumeration of every tuple.
inline std::map<std::int64_t, double> brute_force_sum(const RewardDistribution& d, int copies) {
  std::map<std::int64_t, double> acc{{0, 1.0}};
  for (int c = 0; c < copies; ++c) {
    std::map<std::int64_t, double> next;
    for (const auto& [k, p] : acc) {
      for (const auto& [key, q] : d.atoms) next[k + key] += p * q;
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace bsad::testing
