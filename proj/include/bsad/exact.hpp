#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bsad/errors.hpp"
#include "bsad/mdp.hpp"
#include "bsad/policy.hpp"
#include "bsad/random.hpp"
#include "bsad/reward.hpp"
#include "bsad/trajectory.hpp"

namespace bsad {

/// Enumeration oracles refuse to walk more trajectory suffixes than this.
inline constexpr std::size_t kMaxEnumeratedSuffixes = 10'000'000;
/// Full policy sweeps (general rewards) refuse more candidate policies than this.
inline constexpr std::size_t kMaxPolicySweep = 1'000'000;

struct StartPoint {
  int step = 0;
  int state = 0;
};

/// Rolls out from `start` (default: step 0, s ~ mu0) to the last step.
/// `select(step, state)` returns the action to take.
template <typename Selector>
Trajectory sample_episode(const EpisodicMdp& mdp, Selector&& select, Rng& rng,
                          std::optional<StartPoint> start = std::nullopt) {
  int h = 0;
  int s = 0;
  if (start) {
    if (!mdp.valid_step(start->step)) throw std::invalid_argument("sample_episode: start step out of range");
    if (!mdp.valid_state(start->state)) throw std::invalid_argument("sample_episode: start state out of range");
    h = start->step;
    s = start->state;
  } else {
    s = sample_categorical(mdp.initial_dist(), rng);
  }
  Trajectory tau{h, {}};
  tau.steps.reserve(static_cast<std::size_t>(mdp.horizon() - h));
  for (;; ++h) {
    const int a = select(h, s);
    if (a < 0 || a >= mdp.actions_at(h, s)) {
      throw std::invalid_argument("sample_episode: action " + std::to_string(a) + " unavailable at step " +
                                  std::to_string(h) + ", state " + std::to_string(s));
    }
    tau.steps.push_back({s, a});
    if (h + 1 == mdp.horizon()) break;
    s = sample_categorical(mdp.transition(h, s, a), rng);
  }
  return tau;
}

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

struct ActionChoice {
  int action = 0;
  double probability = 1.0;
};

/// A (possibly randomized) Markov decision rule: the action distribution at (step, state).
using ActionRule = std::function<std::vector<ActionChoice>(int step, int state)>;

/// Wraps a deterministic policy; throws UnsetPolicyEntry when an unset entry is queried.
ActionRule as_rule(const DeterministicPolicy& pi);

/// All positive-probability suffixes from (step, state) under pi, optionally forcing the
/// first action. Throws InstanceTooLarge past kMaxEnumeratedSuffixes.
std::vector<WeightedTrajectory> enumerate_suffixes(const EpisodicMdp& mdp, const DeterministicPolicy& pi,
                                                   int step, int state,
                                                   std::optional<int> first_action = std::nullopt);

/// V_h^pi(s) as the probability-weighted sum of f over every suffix.
double policy_value_by_enumeration(const EpisodicMdp& mdp, const TrajectoryReward& f,
                                   const DeterministicPolicy& pi, int step, int state,
                                   std::optional<int> first_action = std::nullopt);

/// V_h^pi(s) by backward recursion over reachable states; cumulative rewards only.
double policy_value_by_dp(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi,
                          int step, int state, std::optional<int> first_action = std::nullopt);

/// V_h^pi(s): recursion for cumulative rewards, enumeration otherwise.
double exact_policy_value(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi,
                          int step, int state);

/// Q_h^pi(s, a).
double exact_q(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi, int step,
               int state, int action);

/// E_{mu0}[V_1^pi].
double initial_value(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi);

/// E_{mu0}[f(tau)] under a randomized Markov rule.
double expected_reward(const EpisodicMdp& mdp, const TrajectoryReward& f, const ActionRule& rule);

/// The uniformly optimal policy (lowest action index among exact ties).
/// Cumulative rewards use backward induction. General rewards construct the backward
/// argmax policy and then certify it against a sweep over every deterministic policy,
/// throwing AssumptionViolation with a witness (step, state) when it is beaten.
DeterministicPolicy optimal_policy_bruteforce(const EpisodicMdp& mdp, const TrajectoryReward& f);

/// Delta_h(s, a) = V*_h(s) - Q*_h(s, a), given the optimal policy.
double value_gap(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& optimal,
                 int step, int state, int action);

/// min over (h, s, a != pi*_h(s)) of Delta_h(s, a); +inf when no state has two actions.
double min_value_gap(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& optimal);

/// p_h^pi(.) by forward recursion.
Eigen::VectorXd state_visitation(const EpisodicMdp& mdp, const DeterministicPolicy& pi, int step);
double state_visitation(const EpisodicMdp& mdp, const DeterministicPolicy& pi, int step, int state);

/// max over policies of p_h^pi(s), by backward recursion on the reach probability.
double max_visitation(const EpisodicMdp& mdp, int step, int state);

/// V* of a discounted MDP by value iteration until the sup-norm update is below tol.
Eigen::VectorXd discounted_optimal_value(const DiscountedMdp& mdp, double tol = 1e-10);

/// V^pi of a stationary deterministic policy by solving (I - gamma P_pi) V = r_pi.
Eigen::VectorXd discounted_policy_value(const DiscountedMdp& mdp, const Eigen::VectorXi& pi);

}  // namespace bsad
