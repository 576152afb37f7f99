#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bsad/exact.hpp"
#include "bsad/mdp.hpp"
#include "bsad/oracle.hpp"
#include "bsad/policy.hpp"
#include "bsad/random.hpp"

namespace bsad {

/// Pairwise win counts w and comparison counts N per (step, state).
class PreferenceStats {
 public:
  PreferenceStats(int horizon, int num_states, int num_actions);

  int wins(int h, int s, int a, int b) const { return wins_[index(h, s)](a, b); }
  int count(int h, int s, int a, int b) const { return counts_[index(h, s)](a, b); }

  /// w / N, or 1/2 before the first comparison.
  double sigma_hat(int h, int s, int a, int b) const;

  /// sqrt(iota / max(N, 1)).
  double bonus(int h, int s, int a, int b, double iota) const;

  /// Records one comparison; sigma = 1 means the challenger's batch won.
  void record(int h, int s, int champion, int challenger, int sigma);

  /// Overwrites the counts of one ordered pair and its mirror (for tests and replay).
  void set_pair(int h, int s, int a, int b, int wins_ab, int comparisons);

  void clear_step(int h);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

 private:
  std::size_t index(int h, int s) const { return static_cast<std::size_t>(h) * num_states_ + s; }

  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<Eigen::MatrixXi> wins_;
  std::vector<Eigen::MatrixXi> counts_;
};

/// {a < n : sigma_hat(a, a') + b(a, a') >= 1/2 for every a' != a}.
std::vector<int> candidate_set(const PreferenceStats& stats, int h, int s, int num_available, double iota);

/// The action whose lower bound sigma_hat - b clears 1/2 against every rival, if any.
/// A single available action is identified immediately.
std::optional<int> identified_action(const PreferenceStats& stats, int h, int s, int num_available, double iota);

/// identified_action for every state at step h.
std::vector<std::optional<int>> stopping_check(const PreferenceStats& stats, const EpisodicMdp& mdp, int h,
                                               double iota);

/// Action with the largest mean sigma_hat against its rivals (lowest index on ties).
int sigma_leader(const PreferenceStats& stats, int h, int s, int num_available);

struct DuelSlot {
  int champion = -1;
  int challenger = -1;
  TrajectoryBatch champion_batch;
  TrajectoryBatch challenger_batch;
};

/// Champion/challenger schedule and batch accumulators for every (step, state).
class DuelState {
 public:
  DuelState(int horizon, int num_states, int batch_size);

  int batch_size() const { return batch_size_; }
  Eigen::MatrixXi& visits() { return visits_; }
  const Eigen::MatrixXi& visits() const { return visits_; }
  DuelSlot& slot(int h, int s) { return slots_[static_cast<std::size_t>(h) * num_states_ + s]; }
  const DuelSlot& slot(int h, int s) const { return slots_[static_cast<std::size_t>(h) * num_states_ + s]; }

  /// 1-based position of visit number `visit` inside its 2M block.
  int block_position(std::int64_t visit) const {
    return static_cast<int>((visit - 1) % (2 * static_cast<std::int64_t>(batch_size_))) + 1;
  }

  std::int64_t fallbacks() const { return fallbacks_; }
  void note_fallback() { ++fallbacks_; }

 private:
  int num_states_;
  int batch_size_;
  Eigen::MatrixXi visits_;
  std::vector<DuelSlot> slots_;
  std::int64_t fallbacks_ = 0;
};

struct QueryEvent {
  int step = 0;
  int state = 0;
  int champion = 0;
  int challenger = 0;
  int sigma = 0;
};

struct VisitOutcome {
  Trajectory suffix;
  int action = 0;
  std::optional<QueryEvent> query;
  bool fell_back = false;
};

/// One batched dueling visit at (h, s). The visit counter must already include this visit.
/// pihat must be set for every reachable (step, state) after h.
VisitOutcome bruc_visit(DuelState& duel, PreferenceStats& stats, const EpisodicMdp& mdp, PreferenceOracle& oracle,
                        const DeterministicPolicy& pihat, int h, int s, double iota, Rng& rng);

/// Distribution of the action the next visit at (h, s) will play, given the current
/// schedule and statistics.
std::vector<ActionChoice> next_visit_actions(const DuelState& duel, const PreferenceStats& stats,
                                             const EpisodicMdp& mdp, int h, int s, double iota);

}  // namespace bsad
