#include "bsad/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace bsad {

std::int64_t quantize_reward(double value) { return std::llround(value / kRewardQuantum); }

TrajectoryBatch::TrajectoryBatch(std::vector<Trajectory> trajectories) {
  for (auto& tau : trajectories) push_back(std::move(tau));
}

void TrajectoryBatch::push_back(Trajectory tau) {
  if (!trajectories_.empty() && tau.start_step != trajectories_.front().start_step) {
    throw std::invalid_argument("batch members must share a start step");
  }
  trajectories_.push_back(std::move(tau));
}

int PreferenceOracle::human_feedback(const TrajectoryBatch& d0, const TrajectoryBatch& d1) {
  if (d0.empty() || d1.empty()) throw std::invalid_argument("human_feedback: empty batch");
  auto total = [&](const TrajectoryBatch& batch) {
    __int128 sum = 0;
    for (const auto& tau : batch.trajectories()) sum += quantize_reward((*reward_)(tau));
    return sum;
  };
  // Compare averages sum0 / n0 and sum1 / n1 by cross-multiplying.
  const __int128 lhs = total(d0) * static_cast<__int128>(d1.size());
  const __int128 rhs = total(d1) * static_cast<__int128>(d0.size());
  ++queries_;
  if (lhs > rhs) return 0;
  if (rhs > lhs) return 1;
  return tie_rule_ == TieRule::favor_first ? 0 : uniform_index(rng_, 2);
}

double RewardDistribution::mean() const {
  double m = 0.0;
  for (const auto& [key, p] : atoms) m += p * static_cast<double>(key) * kRewardQuantum;
  return m;
}

RewardDistribution suffix_reward_distribution(const EpisodicMdp& mdp, const TrajectoryReward& f,
                                              const DeterministicPolicy& tail, int step, int state, int action) {
  std::map<std::int64_t, double> mass;
  for (const auto& [tau, p] : enumerate_suffixes(mdp, tail, step, state, action)) mass[quantize_reward(f(tau))] += p;
  RewardDistribution out;
  out.atoms.assign(mass.begin(), mass.end());
  return out;
}

namespace {

std::int64_t lattice_step(const RewardDistribution& d, std::int64_t g) {
  const std::int64_t base = d.atoms.front().first;
  for (const auto& [key, p] : d.atoms) g = std::gcd(g, key - base);
  return g;
}

void check_atoms(std::size_t n) {
  if (n > kMaxConvolutionAtoms) {
    throw InstanceTooLarge("batch-sum distribution exceeds " + std::to_string(kMaxConvolutionAtoms) + " atoms");
  }
}

}  // namespace

RewardDistribution convolve(const RewardDistribution& x, const RewardDistribution& y) {
  if (x.atoms.empty() || y.atoms.empty()) throw std::invalid_argument("convolve: empty distribution");
  const std::int64_t g = lattice_step(y, lattice_step(x, 0));
  const std::int64_t base = x.atoms.front().first + y.atoms.front().first;
  RewardDistribution out;
  if (g == 0) {
    out.atoms.push_back({base, x.atoms.front().second * y.atoms.front().second});
    return out;
  }
  const std::int64_t span = (x.atoms.back().first + y.atoms.back().first - base) / g + 1;
  const double pairs = static_cast<double>(x.atoms.size()) * static_cast<double>(y.atoms.size());

  if (static_cast<double>(span) <= std::max(4.0 * pairs, 65536.0) && span <= 64 * static_cast<std::int64_t>(kMaxConvolutionAtoms)) {
    // Dense accumulation on the common lattice.
    std::vector<double> acc(static_cast<std::size_t>(span), 0.0);
    const std::int64_t xb = x.atoms.front().first;
    const std::int64_t yb = y.atoms.front().first;
    for (const auto& [kx, px] : x.atoms) {
      const std::int64_t ix = (kx - xb) / g;
      for (const auto& [ky, py] : y.atoms) acc[static_cast<std::size_t>(ix + (ky - yb) / g)] += px * py;
    }
    for (std::int64_t i = 0; i < span; ++i) {
      if (acc[static_cast<std::size_t>(i)] > 0.0) out.atoms.push_back({base + i * g, acc[static_cast<std::size_t>(i)]});
    }
  } else {
    // Scattered support: accumulate per key, checking the guard as rows are merged.
    std::unordered_map<std::int64_t, double> mass;
    for (const auto& [kx, px] : x.atoms) {
      for (const auto& [ky, py] : y.atoms) mass[kx + ky] += px * py;
      check_atoms(mass.size());
    }
    out.atoms.assign(mass.begin(), mass.end());
    std::sort(out.atoms.begin(), out.atoms.end());
  }
  check_atoms(out.atoms.size());
  return out;
}

RewardDistribution batch_sum_distribution(const RewardDistribution& single, int copies) {
  if (copies < 1) throw std::invalid_argument("batch size must be at least 1");
  RewardDistribution result;
  RewardDistribution base = single;
  bool have = false;
  for (int n = copies;;) {
    if (n & 1) {
      result = have ? convolve(result, base) : base;
      have = true;
    }
    n >>= 1;
    if (n == 0) break;
    base = convolve(base, base);
  }
  return result;
}

double win_probability(const RewardDistribution& x, const RewardDistribution& y) {
  double below = 0.0;  // P(Y < current key)
  std::size_t j = 0;
  double win = 0.0;
  for (const auto& [kx, px] : x.atoms) {
    while (j < y.atoms.size() && y.atoms[j].first < kx) below += y.atoms[j++].second;
    const double equal = (j < y.atoms.size() && y.atoms[j].first == kx) ? y.atoms[j].second : 0.0;
    win += px * (below + 0.5 * equal);
  }
  return win;
}

double exact_preference_probability(const EpisodicMdp& mdp, const TrajectoryReward& f, int step, int state,
                                    int a0, int a1, const DeterministicPolicy& tail, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!mdp.valid_step(step) || !mdp.valid_state(state)) throw std::invalid_argument("(step, state) out of range");
  for (int a : {a0, a1}) {
    if (a < 0 || a >= mdp.actions_at(step, state)) throw std::invalid_argument("action unavailable");
  }
  if (a0 == a1) return 0.5;
  // Always evaluate in (low, high) index order and derive the reverse as an exact
  // complement, so both orders sum to exactly 1.
  const int lo = std::min(a0, a1);
  const int hi = std::max(a0, a1);
  const auto sum_lo = batch_sum_distribution(suffix_reward_distribution(mdp, f, tail, step, state, lo), batch_size);
  const auto sum_hi = batch_sum_distribution(suffix_reward_distribution(mdp, f, tail, step, state, hi), batch_size);
  const double q = std::clamp(win_probability(sum_lo, sum_hi), 0.0, 1.0);
  // For v in [1/2, 1], 1 - v is exact, so pairing v with 1 - v sums to 1 exactly.
  const double canonical = q >= 0.5 ? q : 1.0 - (1.0 - q);
  return a0 == lo ? canonical : 1.0 - canonical;
}

double probability_gap(const EpisodicMdp& mdp, const TrajectoryReward& f, const DeterministicPolicy& optimal,
                       int step, int state, int action, int batch_size) {
  if (!optimal.is_set(step, state)) throw UnsetPolicyEntry(step, state);
  return exact_preference_probability(mdp, f, step, state, optimal(step, state), action, optimal, batch_size) - 0.5;
}

std::optional<int> condorcet_winner(const EpisodicMdp& mdp, const TrajectoryReward& f,
                                    const DeterministicPolicy& tail, int step, int state, int batch_size) {
  const int n = mdp.actions_at(step, state);
  if (n == 1) return 0;
  for (int a = 0; a < n; ++a) {
    bool beats_all = true;
    for (int b = 0; b < n && beats_all; ++b) {
      if (b != a) beats_all = exact_preference_probability(mdp, f, step, state, a, b, tail, batch_size) > 0.5;
    }
    if (beats_all) return a;
  }
  return std::nullopt;
}

std::int64_t lemma1_batch_bound(double reward_bound, double delta_min) {
  if (!(reward_bound > 0.0) || !(delta_min > 0.0) || !std::isfinite(reward_bound) || !std::isfinite(delta_min)) {
    throw std::invalid_argument("lemma1_batch_bound: D and delta_min must be positive and finite");
  }
  return static_cast<std::int64_t>(std::ceil(8.0 * reward_bound * reward_bound / (delta_min * delta_min)));
}

TrajectoryBatch sample_batch(const EpisodicMdp& mdp, const DeterministicPolicy& tail, int step, int state,
                             int action, int count, Rng& rng) {
  TrajectoryBatch batch;
  for (int m = 0; m < count; ++m) {
    batch.push_back(sample_episode(
        mdp,
        [&](int h, int s) {
          if (h == step) return action;
          if (!tail.is_set(h, s)) throw UnsetPolicyEntry(h, s);
          return tail(h, s);
        },
        rng, StartPoint{step, state}));
  }
  return batch;
}

void QueryTranscript::write_csv(std::ostream& out) const {
  out << "episode,h,s,champion,challenger,sigma\n";
  for (const auto& r : rows_) {
    out << r.episode << ',' << r.step << ',' << r.state << ',' << r.champion << ',' << r.challenger << ',' << r.sigma
        << '\n';
  }
}

}  // namespace bsad
