#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "bsad/exact.hpp"
#include "bsad/mdp.hpp"
#include "bsad/policy.hpp"
#include "bsad/random.hpp"
#include "bsad/reward.hpp"
#include "bsad/trajectory.hpp"

namespace bsad {

/// Reward values are compared on a fixed integer grid so that batch sums and averages
/// are exact.
inline constexpr double kRewardQuantum = 1e-12;
/// Convolved batch-sum distributions refuse more atoms than this.
inline constexpr std::size_t kMaxConvolutionAtoms = 1'000'000;

std::int64_t quantize_reward(double value);

/// A set of (partial) trajectories sharing one start step.
class TrajectoryBatch {
 public:
  TrajectoryBatch() = default;
  explicit TrajectoryBatch(std::vector<Trajectory> trajectories);

  void push_back(Trajectory tau);
  void clear() { trajectories_.clear(); }

  bool empty() const { return trajectories_.empty(); }
  std::size_t size() const { return trajectories_.size(); }
  int start_step() const { return trajectories_.front().start_step; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }

 private:
  std::vector<Trajectory> trajectories_;
};

enum class TieRule { uniform_random, favor_first };

/// Simulated annotator with the 0-1 link: prefers the batch with the larger average
/// trajectory reward.
class PreferenceOracle {
 public:
  PreferenceOracle(const TrajectoryReward& reward, TieRule tie_rule, std::uint64_t seed)
      : reward_(&reward), tie_rule_(tie_rule), rng_(seed) {}

  /// Returns 0 if d0 is preferred, 1 if d1 is.
  int human_feedback(const TrajectoryBatch& d0, const TrajectoryBatch& d1);

  std::uint64_t query_count() const { return queries_; }
  TieRule tie_rule() const { return tie_rule_; }

 private:
  const TrajectoryReward* reward_;
  TieRule tie_rule_;
  Rng rng_;
  std::uint64_t queries_ = 0;
};

/// Finite distribution over quantized rewards, keys ascending and unique.
struct RewardDistribution {
  std::vector<std::pair<std::int64_t, double>> atoms;

  double mean() const;
};

/// Distribution of f over suffixes from (step, state) taking `action` first and `tail` after.
RewardDistribution suffix_reward_distribution(const EpisodicMdp& mdp, const TrajectoryReward& f,
                                              const DeterministicPolicy& tail, int step, int state, int action);

RewardDistribution convolve(const RewardDistribution& x, const RewardDistribution& y);

/// Distribution of the sum of `copies` independent draws.
RewardDistribution batch_sum_distribution(const RewardDistribution& single, int copies);

/// P(X > Y) + P(X = Y) / 2 for independent X, Y.
double win_probability(const RewardDistribution& x, const RewardDistribution& y);

/// p(a0, a1): the probability that a batch of M suffixes starting with a0 beats one
/// starting with a1 (ties count half). Exactly 1/2 when a0 == a1, and
/// p(a0, a1) + p(a1, a0) == 1 holds exactly.
double exact_preference_probability(const EpisodicMdp& mdp, const TrajectoryReward& f, int step, int state,
                                    int a0, int a1, const DeterministicPolicy& tail, int batch_size);

/// p(pi*_h(s), a) - 1/2.
double probability_gap(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& optimal,
                       int step, int state, int action, int batch_size);

/// The action beating every other one with probability > 1/2, if any.
std::optional<int> condorcet_winner(const EpisodicMdp& mdp, const TrajectoryReward& f,
                                    const DeterministicPolicy& tail, int step, int state, int batch_size);

/// ceil(8 D^2 / delta_min^2).
std::int64_t lemma1_batch_bound(double reward_bound, double delta_min);

/// Draws `count` suffixes from (step, state) taking `action` first and `tail` after.
TrajectoryBatch sample_batch(const EpisodicMdp& mdp, const DeterministicPolicy& tail, int step, int state,
                             int action, int count, Rng& rng);

struct QueryRecord {
  std::int64_t episode = 0;
  int step = 0;
  int state = 0;
  int champion = 0;
  int challenger = 0;
  int sigma = 0;
};

/// Append-only audit log of oracle queries.
class QueryTranscript {
 public:
  void append(const QueryRecord& record) { rows_.push_back(record); }
  const std::vector<QueryRecord>& rows() const { return rows_; }
  void write_csv(std::ostream& out) const;

 private:
  std::vector<QueryRecord> rows_;
};

}  // namespace bsad
