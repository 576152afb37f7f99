#include "bsad/algorithm.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bsad {

void BsadConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (episode_cap < 1) throw std::invalid_argument("episode_cap must be at least 1");
  if (total_episode_cap < 0) throw std::invalid_argument("total_episode_cap must be non-negative");
  if (record_every < 0) throw std::invalid_argument("record_every must be non-negative");
  if (stopping == StoppingMode::fixed_budget && visit_budget < 1 && step_episode_quota < 1) {
    throw std::invalid_argument("fixed-budget stopping needs a visit budget or an episode quota");
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::running: return "running";
    case Termination::identified: return "identified";
    case Termination::cap: return "cap";
  }
  return "unknown";
}

BsadRunner::BsadRunner(const EpisodicMdp& mdp, const TrajectoryReward& reward, BsadConfig config,
                       const TrajectoryReward* value_reward)
    : mdp_(mdp),
      reward_(reward),
      value_reward_(value_reward ? *value_reward : reward),
      config_((config.validate(), config)),
      rng_(derive_seed(config.seed, 0)),
      oracle_(reward, config.tie_rule, derive_seed(config.seed, 1)),
      exploration_(mdp.num_states(), mdp.num_actions(), mdp.horizon(), config.c, config.delta),
      stats_(mdp.horizon(), mdp.num_states(), mdp.num_actions()),
      duel_(mdp.horizon(), mdp.num_states(), config.batch_size),
      pihat_(mdp.horizon(), mdp.num_states()),
      l_(mdp.horizon() - 1),
      start_(std::chrono::steady_clock::now()) {
  reward_.check_compatible(mdp_);
  value_reward_.check_compatible(mdp_);
  record_.step_episodes.assign(static_cast<std::size_t>(mdp.horizon()), 0);
}

double BsadRunner::candidate_value() {
  if (!cached_value_) cached_value_ = initial_value(mdp_, value_reward_, pihat_.completed(mdp_, kCompletionAction));
  return *cached_value_;
}

EpisodeOutcome BsadRunner::run_episode(std::optional<int> initial_state) {
  if (done()) throw std::logic_error("run_episode: the run has already terminated");
  EpisodeOutcome out;
  out.l = l_;
  ++episode_;
  ++exploration_.k;
  ++record_.step_episodes[static_cast<std::size_t>(l_)];

  out.target_state = explore_episode(mdp_, exploration_, l_, rng_, initial_state);
  target_update(exploration_, duel_.visits(), l_, out.target_state);
  const double io = iota(exploration_, exploration_.k);
  out.visit = bruc_visit(duel_, stats_, mdp_, oracle_, pihat_, l_, out.target_state, io, rng_);

  if (out.visit.query) {
    const QueryEvent& q = *out.visit.query;
    if (config_.keep_transcript) {
      record_.transcript.append({episode_, q.step, q.state, q.champion, q.challenger, q.sigma});
    }
    if (observer_) observer_(q, *this);
  }

  const int S = mdp_.num_states();
  std::vector<int> actions(static_cast<std::size_t>(S), 0);
  bool close = true;
  if (config_.stopping == StoppingMode::adaptive) {
    const auto ids = stopping_check(stats_, mdp_, l_, io);
    for (int s = 0; s < S && close; ++s) {
      if (ids[static_cast<std::size_t>(s)]) {
        actions[static_cast<std::size_t>(s)] = *ids[static_cast<std::size_t>(s)];
      } else {
        close = false;
      }
    }
  } else {
    bool budget_met = config_.visit_budget > 0;
    for (int s = 0; s < S && budget_met; ++s) {
      if (mdp_.actions_at(l_, s) > 1 && duel_.visits()(l_, s) < config_.visit_budget) budget_met = false;
    }
    const bool quota_met = config_.step_episode_quota > 0 && exploration_.k >= config_.step_episode_quota;
    close = budget_met || quota_met;
    if (close) {
      for (int s = 0; s < S; ++s) {
        const int n = mdp_.actions_at(l_, s);
        const auto id = identified_action(stats_, l_, s, n, io);
        actions[static_cast<std::size_t>(s)] = id ? *id : sigma_leader(stats_, l_, s, n);
      }
    }
  }

  if (close) {
    close_step(actions);
    out.step_closed = true;
  }
  if (!done() && (exploration_.k >= config_.episode_cap ||
                  (config_.total_episode_cap > 0 && episode_ >= config_.total_episode_cap))) {
    record_.termination = Termination::cap;
  }

  append_row(done());
  if (done()) {
    record_.policy = pihat_;
    record_.episodes = episode_;
    record_.queries = static_cast<std::int64_t>(oracle_.query_count());
    record_.fallbacks = duel_.fallbacks();
    record_.final_value = candidate_value();
  }
  return out;
}

void BsadRunner::close_step(const std::vector<int>& actions) {
  for (int s = 0; s < mdp_.num_states(); ++s) pihat_.set(l_, s, actions[static_cast<std::size_t>(s)]);
  cached_value_.reset();
  --l_;
  if (l_ < 0) {
    l_ = 0;
    record_.termination = Termination::identified;
  } else {
    exploration_.reset();
  }
}

void BsadRunner::append_row(bool force) {
  if (config_.record_every == 0) return;
  if (!force && episode_ % config_.record_every != 0) return;
  EpisodeRow row;
  row.episode = episode_;
  row.l = l_;
  row.policy_value = candidate_value();
  row.queries = static_cast<std::int64_t>(oracle_.query_count());
  if (config_.record_timing) {
    row.elapsed_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count();
  }
  record_.rows.push_back(row);
}

RunRecord BsadRunner::run() {
  while (!done()) run_episode();
  return take_record();
}

RunRecord BsadRunner::take_record() {
  if (!done()) throw std::logic_error("take_record: the run has not terminated");
  return std::move(record_);
}

ActionRule BsadRunner::next_episode_rule() const {
  const double io = iota(exploration_, exploration_.k + 1);
  return [this, io](int h, int s) -> std::vector<ActionChoice> {
    if (h < l_) {
      const auto& J = exploration_.J[static_cast<std::size_t>(h)];
      const int n = mdp_.actions_at(h, s);
      const double best = J.row(s).head(n).maxCoeff();
      std::vector<int> ties;
      for (int a = 0; a < n; ++a) {
        if (J(s, a) == best) ties.push_back(a);
      }
      std::vector<ActionChoice> out;
      for (int a : ties) out.push_back({a, 1.0 / static_cast<double>(ties.size())});
      return out;
    }
    if (h == l_) return next_visit_actions(duel_, stats_, mdp_, h, s, io);
    if (!pihat_.is_set(h, s)) throw UnsetPolicyEntry(h, s);
    return {{pihat_(h, s), 1.0}};
  };
}

RunRecord run_bsad_episodic(const EpisodicMdp& mdp, const TrajectoryReward& reward, const BsadConfig& config) {
  BsadRunner runner(mdp, reward, config);
  return runner.run();
}

RunRecord run_peps_fixed_horizon(const EpisodicMdp& mdp, const TrajectoryReward& reward, BsadConfig config,
                                 std::int64_t visit_budget, std::int64_t step_episode_quota) {
  config.stopping = StoppingMode::fixed_budget;
  config.visit_budget = visit_budget;
  config.step_episode_quota = step_episode_quota;
  BsadRunner runner(mdp, reward, config);
  return runner.run();
}

double RegretTrace::cumulative() const { return std::accumulate(regret.begin(), regret.end(), 0.0); }

RegretTrace explore_then_commit(const EpisodicMdp& mdp, const TrajectoryReward& reward, std::int64_t total_episodes,
                                BsadConfig config) {
  if (total_episodes < 2) throw std::invalid_argument("explore_then_commit: need at least 2 episodes");
  config.delta = 1.0 / static_cast<double>(total_episodes);
  config.record_every = 0;
  const DeterministicPolicy optimal = optimal_policy_bruteforce(mdp, reward);
  const double best = initial_value(mdp, reward, optimal);

  RegretTrace trace;
  trace.regret.reserve(static_cast<std::size_t>(total_episodes));
  BsadRunner runner(mdp, reward, config);
  double committed = 0.0;
  for (std::int64_t t = 1; t <= total_episodes; ++t) {
    if (!runner.done()) {
      trace.regret.push_back(best - expected_reward(mdp, reward, runner.next_episode_rule()));
      runner.run_episode();
      if (runner.done()) {
        trace.commit_episode = t;
        trace.identified = runner.record().termination == Termination::identified;
        trace.policy = runner.policy().completed(mdp, kCompletionAction);
        trace.optimal = trace.policy == optimal;
        committed = best - initial_value(mdp, reward, trace.policy);
      }
    } else {
      trace.regret.push_back(committed);
    }
  }
  if (!runner.done()) trace.policy = runner.policy().completed(mdp, kCompletionAction);
  return trace;
}

int horizon_for_discounted(double gamma, double epsilon) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be positive");
  const double scale = 2.0 / ((1.0 - gamma) * (1.0 - gamma));
  auto satisfied = [&](int h) { return scale * std::pow(gamma, h) <= epsilon; };
  int h = std::max(1, static_cast<int>(std::ceil(std::log(scale / epsilon) / std::log(1.0 / gamma))));
  // Guard the closed form against rounding at the boundary.
  while (h > 1 && satisfied(h - 1)) --h;
  while (!satisfied(h)) ++h;
  return h;
}

FrameInstance frame_instance(const DiscountedMdp& dmdp, int horizon) {
  if (horizon < 1) throw std::invalid_argument("frame horizon must be at least 1");
  std::vector<Eigen::MatrixXd> kernels(static_cast<std::size_t>(horizon - 1), dmdp.kernel());
  std::vector<Eigen::MatrixXd> plain(static_cast<std::size_t>(horizon), dmdp.reward());
  std::vector<Eigen::MatrixXd> discounted;
  double weight = 1.0;
  for (int h = 0; h < horizon; ++h, weight *= dmdp.gamma()) discounted.push_back(weight * dmdp.reward());
  return FrameInstance{
      EpisodicMdp(dmdp.num_states(), dmdp.num_actions(), horizon, std::move(kernels), dmdp.initial_dist()),
      TrajectoryReward::cumulative(std::move(plain)), TrajectoryReward::cumulative(std::move(discounted))};
}

DiscountedResult run_bsad_discounted(const DiscountedMdp& dmdp, double epsilon, const BsadConfig& config,
                                     const std::function<void(const EpisodeOutcome&)>& on_frame) {
  DiscountedResult result;
  result.horizon = horizon_for_discounted(dmdp.gamma(), epsilon);
  const FrameInstance frame = frame_instance(dmdp, result.horizon);
  BsadRunner runner(frame.mdp, frame.oracle_reward, config, &frame.value_reward);
  std::optional<int> start;
  while (!runner.done()) {
    const EpisodeOutcome out = runner.run_episode(start);
    if (on_frame) on_frame(out);
    // The next frame continues the same trajectory from the last state-action pair.
    const StateAction& last = out.visit.suffix.back();
    start = sample_categorical(dmdp.transition(last.state, last.action), runner.rng());
  }
  result.record = runner.take_record();
  const DeterministicPolicy completed = result.record.policy.completed(frame.mdp, kCompletionAction);
  result.policy = completed.table().row(0).transpose();
  return result;
}

}  // namespace bsad
