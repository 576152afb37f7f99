#pragma once

#include <cstdint>
#include <vector>

#include "bsad/instance.hpp"
#include "bsad/policy.hpp"

namespace bsad {

// Action indices of the counter-example's first-step states.
inline constexpr int kSafeArm = 0;   // deterministic reward 1
inline constexpr int kRiskyArm = 1;  // reward D w.p. 1/D, else 1 - epsilon; optimal for D > 2

/// Two-step counter-example. States 0 .. copies-1 are the first-step copies; then come the
/// jackpot state (reward D), the consolation state (reward 1 - epsilon) and the safe
/// state (reward 1), each with a single action.
Instance build_counterexample_mdp(double D, double epsilon, int copies, const std::vector<double>& initial_weights);

/// The default experiment instance: D = 10, epsilon = 0.1, two equally weighted copies.
Instance default_experiment_instance();

inline int jackpot_state(int copies) { return copies; }
inline int consolation_state(int copies) { return copies + 1; }
inline int safe_state(int copies) { return copies + 2; }

/// Random full-support instance with rewards on a 0.1 grid whose optimal actions are
/// unique with every value gap >= min_gap. Deterministic in the seed.
/// Throws GenerationError after 10^4 rejected reward draws.
Instance build_random_mdp(int S, int A, int H, std::uint64_t seed, double min_gap);

/// Smallest batch size among `candidates` (ascending) at which the optimal action is the
/// exact Condorcet winner at every (step, state), or 0 if none qualifies.
int smallest_condorcet_batch(const Instance& instance, const DeterministicPolicy& optimal,
                             const std::vector<int>& candidates);

/// Minimum exact probability gap over every (step, state, non-optimal action).
double min_probability_gap(const Instance& instance, const DeterministicPolicy& optimal, int batch_size);

/// Three-state, two-action discounted chain (gamma = 0.9): action 0 stays, action 1 moves
/// to the next state cyclically.
DiscountedMdp build_discounted_chain();

}  // namespace bsad
