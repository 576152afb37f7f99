#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bsad/dueling.hpp"
#include "bsad/exact.hpp"
#include "bsad/exploration.hpp"
#include "bsad/mdp.hpp"
#include "bsad/oracle.hpp"
#include "bsad/policy.hpp"
#include "bsad/reward.hpp"

namespace bsad {

enum class StoppingMode {
  adaptive,      // close a step once every state has an identified action
  fixed_budget,  // close a step once every state reached visit_budget, or after step_episode_quota episodes
};

struct BsadConfig {
  int batch_size = 64;
  double delta = 0.1;
  double c = 4.0;
  std::int64_t episode_cap = 1'000'000;  // per step phase
  std::int64_t total_episode_cap = 0;    // 0: no global cap
  std::uint64_t seed = 0;
  TieRule tie_rule = TieRule::uniform_random;

  StoppingMode stopping = StoppingMode::adaptive;
  std::int64_t visit_budget = 0;
  std::int64_t step_episode_quota = 0;

  // 0 disables the per-episode rows; otherwise one row every `record_every` episodes
  // plus the final episode.
  std::int64_t record_every = 1;
  bool record_timing = true;
  bool keep_transcript = false;

  void validate() const;
};

enum class Termination { running, identified, cap };
std::string to_string(Termination t);

struct EpisodeRow {
  std::int64_t episode = 0;
  int l = 0;
  double policy_value = 0.0;
  std::int64_t queries = 0;
  std::int64_t elapsed_ns = 0;
};

struct RunRecord {
  std::vector<EpisodeRow> rows;
  std::vector<std::int64_t> step_episodes;  // K_h
  DeterministicPolicy policy;               // as identified; unset entries remain unset on cap
  Termination termination = Termination::running;
  std::int64_t episodes = 0;
  std::int64_t queries = 0;
  std::int64_t fallbacks = 0;
  double final_value = 0.0;  // value of the completed policy
  QueryTranscript transcript;
};

/// Unset entries are completed with this action (clamped to the available range) when
/// a total policy is needed for evaluation.
inline constexpr int kCompletionAction = 0;

struct EpisodeOutcome {
  int l = 0;
  int target_state = 0;
  VisitOutcome visit;
  bool step_closed = false;
};

/// Episode-by-episode driver of the backward search.
class BsadRunner {
 public:
  using QueryObserver = std::function<void(const QueryEvent&, const BsadRunner&)>;

  /// `value_reward` scores the policy-value column (defaults to `reward`).
  BsadRunner(const EpisodicMdp& mdp, const TrajectoryReward& reward, BsadConfig config,
             const TrajectoryReward* value_reward = nullptr);

  bool done() const { return record_.termination != Termination::running; }

  /// Runs one episode; `initial_state` overrides the draw from mu0.
  EpisodeOutcome run_episode(std::optional<int> initial_state = std::nullopt);

  /// Runs until identification or a cap and returns the record.
  RunRecord run();

  void set_query_observer(QueryObserver observer) { observer_ = std::move(observer); }

  int active_step() const { return l_; }
  std::int64_t episode() const { return episode_; }
  std::int64_t phase_episode() const { return exploration_.k; }
  const DeterministicPolicy& policy() const { return pihat_; }
  const ExplorationState& exploration() const { return exploration_; }
  const PreferenceStats& stats() const { return stats_; }
  const DuelState& duel() const { return duel_; }
  const PreferenceOracle& oracle() const { return oracle_; }
  const BsadConfig& config() const { return config_; }
  const EpisodicMdp& mdp() const { return mdp_; }
  const RunRecord& record() const { return record_; }
  Rng& rng() { return rng_; }

  /// Current value of the completed candidate policy under the value reward.
  double candidate_value();

  /// The randomized Markov rule the next episode will follow (for exact regret):
  /// greedy on J before the active step, the dueling schedule at it, pihat after it.
  ActionRule next_episode_rule() const;

  /// Moves the record out once done().
  RunRecord take_record();

 private:
  void close_step(const std::vector<int>& actions);
  void append_row(bool force);

  const EpisodicMdp& mdp_;
  const TrajectoryReward& reward_;
  const TrajectoryReward& value_reward_;
  BsadConfig config_;
  Rng rng_;
  PreferenceOracle oracle_;
  ExplorationState exploration_;
  PreferenceStats stats_;
  DuelState duel_;
  DeterministicPolicy pihat_;
  int l_;
  std::int64_t episode_ = 0;
  std::optional<double> cached_value_;
  RunRecord record_;
  QueryObserver observer_;
  std::chrono::steady_clock::time_point start_;
};

/// Full run of the backward search; returns the record (policy inside).
RunRecord run_bsad_episodic(const EpisodicMdp& mdp, const TrajectoryReward& reward, const BsadConfig& config);

/// Fixed-budget variant: the same machinery with the stopping rule replaced by a visit budget.
RunRecord run_peps_fixed_horizon(const EpisodicMdp& mdp, const TrajectoryReward& reward, BsadConfig config,
                                 std::int64_t visit_budget, std::int64_t step_episode_quota);

struct RegretTrace {
  std::vector<double> regret;  // instantaneous, one per episode
  std::int64_t commit_episode = -1;  // 1-based episode after which pihat is played; -1 if never
  bool identified = false;
  bool optimal = false;
  DeterministicPolicy policy;

  double cumulative() const;
};

/// Identification with delta = 1/T, then commitment to pihat for the remaining episodes.
/// Requires T >= 2.
RegretTrace explore_then_commit(const EpisodicMdp& mdp, const TrajectoryReward& reward, std::int64_t total_episodes,
                                BsadConfig config);

/// Smallest H >= 1 with 2 gamma^H / (1 - gamma)^2 <= epsilon.
int horizon_for_discounted(double gamma, double epsilon);

struct FrameInstance {
  EpisodicMdp mdp;
  TrajectoryReward oracle_reward;  // undiscounted per-step rewards
  TrajectoryReward value_reward;   // gamma^h r_h
};

/// The length-H frame MDP: the stationary kernel repeated at every step.
FrameInstance frame_instance(const DiscountedMdp& dmdp, int horizon);

struct DiscountedResult {
  Eigen::VectorXi policy;  // stationary, from the first frame step
  int horizon = 0;
  RunRecord record;
};

/// Runs the backward search over consecutive frames of a single trajectory.
/// `on_frame`, if set, sees every frame's outcome.
DiscountedResult run_bsad_discounted(const DiscountedMdp& dmdp, double epsilon, const BsadConfig& config,
                                     const std::function<void(const EpisodeOutcome&)>& on_frame = {});

}  // namespace bsad
