#include "bsad/exact.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

namespace bsad {
namespace {

void check_start(const EpisodicMdp& mdp, int step, int state) {
  if (!mdp.valid_step(step)) throw std::invalid_argument("step " + std::to_string(step) + " out of range");
  if (!mdp.valid_state(state)) throw std::invalid_argument("state " + std::to_string(state) + " out of range");
}

void check_action(const EpisodicMdp& mdp, int step, int state, int action) {
  if (action < 0 || action >= mdp.actions_at(step, state)) {
    throw std::invalid_argument("action " + std::to_string(action) + " unavailable at step " +
                                std::to_string(step) + ", state " + std::to_string(state));
  }
}

// Depth-first walk over every positive-probability suffix; `leaf` receives each
// complete suffix with its probability.
template <typename Leaf>
void walk(const EpisodicMdp& mdp, const ActionRule& rule, Leaf& leaf, Trajectory& tau, int h, int s, double prob,
          std::optional<int> forced, std::size_t& count) {
  const std::vector<ActionChoice> choices =
      forced ? std::vector<ActionChoice>{{*forced, 1.0}} : rule(h, s);
  for (const auto& [a, pa] : choices) {
    if (pa <= 0.0) continue;
    check_action(mdp, h, s, a);
    tau.steps.push_back({s, a});
    if (h + 1 == mdp.horizon()) {
      if (++count > kMaxEnumeratedSuffixes) {
        throw InstanceTooLarge("enumeration exceeds " + std::to_string(kMaxEnumeratedSuffixes) + " suffixes");
      }
      leaf(tau, prob * pa);
    } else {
      const auto row = mdp.transition(h, s, a);
      for (int next = 0; next < mdp.num_states(); ++next) {
        if (row(next) > 0.0) walk(mdp, rule, leaf, tau, h + 1, next, prob * pa * row(next), std::nullopt, count);
      }
    }
    tau.steps.pop_back();
  }
}

template <typename Leaf>
void walk_from(const EpisodicMdp& mdp, const ActionRule& rule, Leaf&& leaf, int step, int state,
               std::optional<int> forced, double prob = 1.0) {
  Trajectory tau{step, {}};
  tau.steps.reserve(static_cast<std::size_t>(mdp.horizon() - step));
  std::size_t count = 0;
  walk(mdp, rule, leaf, tau, step, state, prob, forced, count);
}

// Memoized backward recursion for cumulative rewards, restricted to reachable states.
class CumulativeRecursion {
 public:
  CumulativeRecursion(const EpisodicMdp& mdp, const TrajectoryReward& f, const ActionRule& rule)
      : mdp_(mdp),
        f_(f),
        rule_(rule),
        memo_(Eigen::MatrixXd::Constant(mdp.horizon(), mdp.num_states(), std::numeric_limits<double>::quiet_NaN())) {}

  double value(int h, int s, std::optional<int> forced = std::nullopt) {
    if (!forced && !std::isnan(memo_(h, s))) return memo_(h, s);
    const std::vector<ActionChoice> choices =
        forced ? std::vector<ActionChoice>{{*forced, 1.0}} : rule_(h, s);
    double v = 0.0;
    for (const auto& [a, pa] : choices) {
      if (pa <= 0.0) continue;
      check_action(mdp_, h, s, a);
      double q = f_.step_reward(h, s, a);
      if (h + 1 < mdp_.horizon()) {
        const auto row = mdp_.transition(h, s, a);
        for (int next = 0; next < mdp_.num_states(); ++next) {
          if (row(next) > 0.0) q += row(next) * value(h + 1, next);
        }
      }
      v += pa * q;
    }
    if (!forced) memo_(h, s) = v;
    return v;
  }

 private:
  const EpisodicMdp& mdp_;
  const TrajectoryReward& f_;
  const ActionRule& rule_;
  Eigen::MatrixXd memo_;
};

void require_cumulative(const TrajectoryReward& f) {
  if (!f.is_cumulative()) throw UnsupportedInstance("backward recursion needs a cumulative reward");
}

std::size_t policy_count(const EpisodicMdp& mdp) {
  std::size_t total = 1;
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      total *= static_cast<std::size_t>(mdp.actions_at(h, s));
      if (total > kMaxPolicySweep) {
        throw InstanceTooLarge("policy sweep exceeds " + std::to_string(kMaxPolicySweep) + " policies");
      }
    }
  }
  return total;
}

}  // namespace

ActionRule as_rule(const DeterministicPolicy& pi) {
  return [pi](int h, int s) -> std::vector<ActionChoice> {
    if (!pi.is_set(h, s)) throw UnsetPolicyEntry(h, s);
    return {{pi(h, s), 1.0}};
  };
}

std::vector<WeightedTrajectory> enumerate_suffixes(const EpisodicMdp& mdp, const DeterministicPolicy& pi, int step,
                                                   int state, std::optional<int> first_action) {
  check_start(mdp, step, state);
  std::vector<WeightedTrajectory> out;
  walk_from(
      mdp, as_rule(pi), [&](const Trajectory& tau, double p) { out.push_back({tau, p}); }, step, state,
      first_action);
  return out;
}

double policy_value_by_enumeration(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi,
                                   int step, int state, std::optional<int> first_action) {
  check_start(mdp, step, state);
  double v = 0.0;
  walk_from(
      mdp, as_rule(pi), [&](const Trajectory& tau, double p) { v += p * f(tau); }, step, state, first_action);
  return v;
}

double policy_value_by_dp(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi, int step,
                          int state, std::optional<int> first_action) {
  require_cumulative(f);
  check_start(mdp, step, state);
  const ActionRule rule = as_rule(pi);
  CumulativeRecursion rec(mdp, f, rule);
  return rec.value(step, state, first_action);
}

double exact_policy_value(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi, int step,
                          int state) {
  if (f.is_cumulative()) return policy_value_by_dp(mdp, f, pi, step, state);
  return policy_value_by_enumeration(mdp, f, pi, step, state);
}

double exact_q(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi, int step, int state,
               int action) {
  check_start(mdp, step, state);
  check_action(mdp, step, state, action);
  if (f.is_cumulative()) return policy_value_by_dp(mdp, f, pi, step, state, action);
  return policy_value_by_enumeration(mdp, f, pi, step, state, action);
}

double initial_value(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& pi) {
  return expected_reward(mdp, f, as_rule(pi));
}

double expected_reward(const EpisodicMdp& mdp, const TrajectoryReward& f, const ActionRule& rule) {
  const auto& mu = mdp.initial_dist();
  double v = 0.0;
  if (f.is_cumulative()) {
    CumulativeRecursion rec(mdp, f, rule);
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (mu(s) > 0.0) v += mu(s) * rec.value(0, s);
    }
    return v;
  }
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mu(s) <= 0.0) continue;
    walk_from(
        mdp, rule, [&](const Trajectory& tau, double p) { v += p * f(tau); }, 0, s, std::nullopt, mu(s));
  }
  return v;
}

DeterministicPolicy optimal_policy_bruteforce(const EpisodicMdp& mdp, const TrajectoryReward& f) {
  f.check_compatible(mdp);
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  DeterministicPolicy pi(H, S);

  if (f.is_cumulative()) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
    for (int h = H - 1; h >= 0; --h) {
      Eigen::VectorXd current(S);
      for (int s = 0; s < S; ++s) {
        int best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.actions_at(h, s); ++a) {
          double q = f.step_reward(h, s, a);
          if (h + 1 < H) q += mdp.transition(h, s, a).dot(next);
          if (q > best_q) {
            best_q = q;
            best = a;
          }
        }
        pi.set(h, s, best);
        current(s) = best_q;
      }
      next = current;
    }
    return pi;
  }

  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.actions_at(h, s); ++a) {
        const double q = policy_value_by_enumeration(mdp, f, pi, h, s, a);
        if (q > best_q) {
          best_q = q;
          best = a;
        }
      }
      pi.set(h, s, best);
    }
  }

  Eigen::MatrixXd best_values(H, S);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) best_values(h, s) = policy_value_by_enumeration(mdp, f, pi, h, s);
  }

  // Mixed-radix sweep over every deterministic policy.
  const std::size_t total = policy_count(mdp);
  DeterministicPolicy candidate(H, S);
  for (std::size_t index = 0; index < total; ++index) {
    std::size_t rest = index;
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        const auto n = static_cast<std::size_t>(mdp.actions_at(h, s));
        candidate.set(h, s, static_cast<int>(rest % n));
        rest /= n;
      }
    }
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        const double v = policy_value_by_enumeration(mdp, f, candidate, h, s);
        if (v > best_values(h, s) + 1e-12) {
          throw AssumptionViolation(h, s,
                                    "no uniformly optimal deterministic policy: witness step " +
                                        std::to_string(h) + ", state " + std::to_string(s));
        }
      }
    }
  }
  return pi;
}

double value_gap(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& optimal, int step,
                 int state, int action) {
  return exact_policy_value(mdp, f, optimal, step, state) - exact_q(mdp, f, optimal, step, state, action);
}

double min_value_gap(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& optimal) {
  double gap = std::numeric_limits<double>::infinity();
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (mdp.actions_at(h, s) < 2) continue;
      const double v = exact_policy_value(mdp, f, optimal, h, s);
      for (int a = 0; a < mdp.actions_at(h, s); ++a) {
        if (a == optimal(h, s)) continue;
        gap = std::min(gap, v - exact_q(mdp, f, optimal, h, s, a));
      }
    }
  }
  return gap;
}

Eigen::VectorXd state_visitation(const EpisodicMdp& mdp, const DeterministicPolicy& pi, int step) {
  if (!mdp.valid_step(step)) throw std::invalid_argument("step out of range");
  Eigen::VectorXd p = mdp.initial_dist();
  for (int h = 0; h < step; ++h) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (p(s) <= 0.0) continue;
      if (!pi.is_set(h, s)) throw UnsetPolicyEntry(h, s);
      next += p(s) * mdp.transition(h, s, pi(h, s)).transpose();
    }
    p = std::move(next);
  }
  return p;
}

double state_visitation(const EpisodicMdp& mdp, const DeterministicPolicy& pi, int step, int state) {
  check_start(mdp, step, state);
  return state_visitation(mdp, pi, step)(state);
}

double max_visitation(const EpisodicMdp& mdp, int step, int state) {
  check_start(mdp, step, state);
  Eigen::VectorXd reach = Eigen::VectorXd::Unit(mdp.num_states(), state);
  for (int h = step - 1; h >= 0; --h) {
    Eigen::VectorXd prev(mdp.num_states());
    for (int s = 0; s < mdp.num_states(); ++s) {
      double best = 0.0;
      for (int a = 0; a < mdp.actions_at(h, s); ++a) best = std::max(best, mdp.transition(h, s, a).dot(reach));
      prev(s) = best;
    }
    reach = std::move(prev);
  }
  return mdp.initial_dist().dot(reach);
}

Eigen::VectorXd discounted_optimal_value(const DiscountedMdp& mdp, double tol) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  // Stopping at an update below tol * (1 - gamma) leaves a sup-norm error below tol.
  const double threshold = tol * (1.0 - mdp.gamma());
  for (;;) {
    Eigen::VectorXd next(S);
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        best = std::max(best, mdp.reward()(s, a) + mdp.gamma() * mdp.transition(s, a).dot(v));
      }
      next(s) = best;
    }
    const double diff = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (diff < threshold) return v;
  }
}

Eigen::VectorXd discounted_policy_value(const DiscountedMdp& mdp, const Eigen::VectorXi& pi) {
  const int S = mdp.num_states();
  if (pi.size() != S) throw std::invalid_argument("stationary policy must have S entries");
  Eigen::MatrixXd p_pi(S, S);
  Eigen::VectorXd r_pi(S);
  for (int s = 0; s < S; ++s) {
    if (pi(s) < 0 || pi(s) >= mdp.num_actions()) throw std::invalid_argument("stationary policy action out of range");
    p_pi.row(s) = mdp.transition(s, pi(s));
    r_pi(s) = mdp.reward()(s, pi(s));
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.gamma() * p_pi;
  return system.partialPivLu().solve(r_pi);
}

}  // namespace bsad
