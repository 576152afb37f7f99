#include "bsad/harness/environments.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bsad/errors.hpp"
#include "bsad/exact.hpp"
#include "bsad/oracle.hpp"
#include "bsad/random.hpp"

namespace bsad {

Instance build_counterexample_mdp(double D, double epsilon, int copies, const std::vector<double>& initial_weights) {
  if (!(D > 2.0) || !std::isfinite(D)) throw std::invalid_argument("counterexample: D must exceed 2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("counterexample: epsilon must lie in (0, 1)");
  if (copies < 1) throw std::invalid_argument("counterexample: copies must be at least 1");
  if (static_cast<int>(initial_weights.size()) != copies) {
    throw std::invalid_argument("counterexample: need one initial weight per copy");
  }
  for (double w : initial_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("counterexample: initial weights must be non-negative");
  }
  const double total = std::accumulate(initial_weights.begin(), initial_weights.end(), 0.0);
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    throw std::invalid_argument("counterexample: initial weights must sum to 1");
  }

  const int S = copies + 3;
  const int A = 2;
  const int jackpot = jackpot_state(copies);
  const int consolation = consolation_state(copies);
  const int safe = safe_state(copies);

  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(S * A, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) kernel(s * A + a, s) = 1.0;  // unused rows self-loop
  }
  for (int s = 0; s < copies; ++s) {
    kernel.row(s * A + kRiskyArm).setZero();
    kernel(s * A + kRiskyArm, jackpot) = 1.0 / D;
    kernel(s * A + kRiskyArm, consolation) = 1.0 - 1.0 / D;
    kernel.row(s * A + kSafeArm).setZero();
    kernel(s * A + kSafeArm, safe) = 1.0;
  }

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < copies; ++s) mu(s) = initial_weights[static_cast<std::size_t>(s)];

  Eigen::MatrixXi available = Eigen::MatrixXi::Ones(2, S);
  available.row(0).head(copies).setConstant(2);

  Eigen::MatrixXd last = Eigen::MatrixXd::Zero(S, A);
  last(jackpot, 0) = D;
  last(consolation, 0) = 1.0 - epsilon;
  last(safe, 0) = 1.0;

  return Instance{EpisodicMdp(S, A, 2, {kernel}, mu, available),
                  TrajectoryReward::cumulative({Eigen::MatrixXd::Zero(S, A), last})};
}

Instance default_experiment_instance() { return build_counterexample_mdp(10.0, 0.1, 2, {0.5, 0.5}); }

namespace {

Eigen::RowVectorXd random_distribution(int n, Rng& rng) {
  Eigen::RowVectorXd row(n);
  for (int i = 0; i < n; ++i) row(i) = 0.2 + uniform01(rng);
  return row / row.sum();
}

double grid_reward(Rng& rng) { return uniform_index(rng, 11) / 10.0; }

}  // namespace

Instance build_random_mdp(int S, int A, int H, std::uint64_t seed, double min_gap) {
  if (S < 1 || A < 1 || H < 1) throw std::invalid_argument("random instance: S, A, H must be positive");
  if (!(min_gap > 0.0)) throw std::invalid_argument("random instance: min_gap must be positive");
  Rng rng(seed);

  std::vector<Eigen::MatrixXd> kernels;
  for (int h = 0; h + 1 < H; ++h) {
    Eigen::MatrixXd k(S * A, S);
    for (int row = 0; row < S * A; ++row) k.row(row) = random_distribution(S, rng);
    kernels.push_back(std::move(k));
  }
  const Eigen::VectorXd mu = random_distribution(S, rng).transpose();

  // Draw reward rows backwards so that each (h, s) has a unique best action ahead of the
  // rest by at least min_gap, given the optimal continuation values.
  constexpr int kMaxRejections = 10'000;
  int rejections = 0;
  std::vector<Eigen::MatrixXd> rewards(static_cast<std::size_t>(H), Eigen::MatrixXd::Zero(S, A));
  Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
  for (int h = H - 1; h >= 0; --h) {
    Eigen::VectorXd current(S);
    for (int s = 0; s < S; ++s) {
      for (;;) {
        Eigen::VectorXd q(A);
        for (int a = 0; a < A; ++a) {
          rewards[static_cast<std::size_t>(h)](s, a) = grid_reward(rng);
          q(a) = rewards[static_cast<std::size_t>(h)](s, a);
          if (h + 1 < H) q(a) += kernels[static_cast<std::size_t>(h)].row(s * A + a).dot(next);
        }
        Eigen::Index best = 0;
        const double top = q.maxCoeff(&best);
        double runner_up = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
          if (a != best) runner_up = std::max(runner_up, q(a));
        }
        if (top - runner_up >= min_gap) {
          current(s) = top;
          break;
        }
        if (++rejections > kMaxRejections) {
          throw GenerationError("random instance: more than " + std::to_string(kMaxRejections) +
                                " rejected reward draws");
        }
      }
    }
    next = current;
  }

  Instance instance{EpisodicMdp(S, A, H, std::move(kernels), mu), TrajectoryReward::cumulative(std::move(rewards))};
  const DeterministicPolicy optimal = optimal_policy_bruteforce(instance.mdp, instance.reward);
  if (min_value_gap(instance.mdp, instance.reward, optimal) < min_gap) {
    throw GenerationError("random instance: certified gap below min_gap");
  }
  return instance;
}

double min_probability_gap(const Instance& instance, const DeterministicPolicy& optimal, int batch_size) {
  double gap = std::numeric_limits<double>::infinity();
  for (int h = 0; h < instance.mdp.horizon(); ++h) {
    for (int s = 0; s < instance.mdp.num_states(); ++s) {
      for (int a = 0; a < instance.mdp.actions_at(h, s); ++a) {
        if (a == optimal(h, s)) continue;
        gap = std::min(gap, probability_gap(instance.mdp, instance.reward, optimal, h, s, a, batch_size));
      }
    }
  }
  return gap;
}

int smallest_condorcet_batch(const Instance& instance, const DeterministicPolicy& optimal,
                             const std::vector<int>& candidates) {
  for (int m : candidates) {
    if (min_probability_gap(instance, optimal, m) > 0.0) return m;
  }
  return 0;
}

DiscountedMdp build_discounted_chain() {
  constexpr int S = 3;
  constexpr int A = 2;
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(S * A, S);
  for (int s = 0; s < S; ++s) {
    kernel(s * A + 0, s) = 1.0;
    kernel(s * A + 1, (s + 1) % S) = 1.0;
  }
  Eigen::MatrixXd reward(S, A);
  reward << 0.13, 0.61,
            0.22, 0.74,
            0.35, 0.83;
  return DiscountedMdp(S, A, 0.9, kernel, reward, Eigen::VectorXd::Constant(S, 1.0 / S));
}

}  // namespace bsad
