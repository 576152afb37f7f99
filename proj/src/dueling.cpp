#include "bsad/dueling.hpp"

#include <cmath>
#include <stdexcept>

namespace bsad {

PreferenceStats::PreferenceStats(int horizon, int num_states, int num_actions)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      wins_(static_cast<std::size_t>(horizon) * num_states, Eigen::MatrixXi::Zero(num_actions, num_actions)),
      counts_(static_cast<std::size_t>(horizon) * num_states, Eigen::MatrixXi::Zero(num_actions, num_actions)) {}

double PreferenceStats::sigma_hat(int h, int s, int a, int b) const {
  const int n = count(h, s, a, b);
  return n == 0 ? 0.5 : static_cast<double>(wins(h, s, a, b)) / n;
}

double PreferenceStats::bonus(int h, int s, int a, int b, double iota) const {
  return std::sqrt(iota / std::max(count(h, s, a, b), 1));
}

void PreferenceStats::record(int h, int s, int champion, int challenger, int sigma) {
  if (champion == challenger) throw std::invalid_argument("record: champion and challenger coincide");
  if (sigma != 0 && sigma != 1) throw std::invalid_argument("record: sigma must be 0 or 1");
  auto& w = wins_[index(h, s)];
  auto& n = counts_[index(h, s)];
  w(challenger, champion) += sigma;
  w(champion, challenger) += 1 - sigma;
  n(challenger, champion) += 1;
  n(champion, challenger) += 1;
}

void PreferenceStats::set_pair(int h, int s, int a, int b, int wins_ab, int comparisons) {
  if (wins_ab < 0 || wins_ab > comparisons) throw std::invalid_argument("set_pair: need 0 <= wins <= comparisons");
  auto& w = wins_[index(h, s)];
  auto& n = counts_[index(h, s)];
  w(a, b) = wins_ab;
  w(b, a) = comparisons - wins_ab;
  n(a, b) = comparisons;
  n(b, a) = comparisons;
}

void PreferenceStats::clear_step(int h) {
  for (int s = 0; s < num_states_; ++s) {
    wins_[index(h, s)].setZero();
    counts_[index(h, s)].setZero();
  }
}

std::vector<int> candidate_set(const PreferenceStats& stats, int h, int s, int num_available, double iota) {
  std::vector<int> out;
  for (int a = 0; a < num_available; ++a) {
    bool keep = true;
    for (int b = 0; b < num_available && keep; ++b) {
      if (b != a) keep = stats.sigma_hat(h, s, a, b) + stats.bonus(h, s, a, b, iota) >= 0.5;
    }
    if (keep) out.push_back(a);
  }
  return out;
}

std::optional<int> identified_action(const PreferenceStats& stats, int h, int s, int num_available, double iota) {
  if (num_available == 1) return 0;
  for (int a = 0; a < num_available; ++a) {
    bool wins = true;
    for (int b = 0; b < num_available && wins; ++b) {
      if (b != a) wins = stats.sigma_hat(h, s, a, b) - stats.bonus(h, s, a, b, iota) >= 0.5;
    }
    if (wins) return a;
  }
  return std::nullopt;
}

std::vector<std::optional<int>> stopping_check(const PreferenceStats& stats, const EpisodicMdp& mdp, int h,
                                               double iota) {
  std::vector<std::optional<int>> out(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) out[static_cast<std::size_t>(s)] = identified_action(stats, h, s, mdp.actions_at(h, s), iota);
  return out;
}

int sigma_leader(const PreferenceStats& stats, int h, int s, int num_available) {
  int best = 0;
  double best_score = -1.0;
  for (int a = 0; a < num_available; ++a) {
    double score = 0.0;
    for (int b = 0; b < num_available; ++b) {
      if (b != a) score += stats.sigma_hat(h, s, a, b);
    }
    if (num_available > 1) score /= num_available - 1;
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

DuelState::DuelState(int horizon, int num_states, int batch_size)
    : num_states_(num_states),
      batch_size_(batch_size),
      visits_(Eigen::MatrixXi::Zero(horizon, num_states)),
      slots_(static_cast<std::size_t>(horizon) * num_states) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
}

namespace {

std::vector<int> challenger_ties(const PreferenceStats& stats, int h, int s, int n, int champion, double iota) {
  std::vector<int> ties;
  double best = -1.0;
  for (int a = 0; a < n; ++a) {
    if (a == champion) continue;
    const double ucb = stats.sigma_hat(h, s, a, champion) + stats.bonus(h, s, a, champion, iota);
    if (ties.empty() || ucb > best) {
      best = ucb;
      ties.assign(1, a);
    } else if (ucb == best) {
      ties.push_back(a);
    }
  }
  return ties;
}

int pick(const std::vector<int>& options, Rng& rng) {
  return options.size() == 1 ? options.front()
                             : options[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(options.size())))];
}

Trajectory roll_out(const EpisodicMdp& mdp, const DeterministicPolicy& pihat, int h, int s, int action, Rng& rng) {
  return sample_episode(
      mdp,
      [&](int step, int state) {
        if (step == h) return action;
        if (!pihat.is_set(step, state)) throw UnsetPolicyEntry(step, state);
        return pihat(step, state);
      },
      rng, StartPoint{h, s});
}

}  // namespace

VisitOutcome bruc_visit(DuelState& duel, PreferenceStats& stats, const EpisodicMdp& mdp, PreferenceOracle& oracle,
                        const DeterministicPolicy& pihat, int h, int s, double iota, Rng& rng) {
  VisitOutcome out;
  const int n = mdp.actions_at(h, s);
  if (n == 1) {
    out.suffix = roll_out(mdp, pihat, h, s, 0, rng);
    return out;
  }
  const std::int64_t visit = duel.visits()(h, s);
  if (visit < 1) throw std::logic_error("bruc_visit: visit counter not incremented");
  const int m = duel.batch_size();
  const int v = duel.block_position(visit);
  DuelSlot& slot = duel.slot(h, s);

  if (v == 1) {
    std::vector<int> candidates = candidate_set(stats, h, s, n, iota);
    if (candidates.empty()) {
      out.fell_back = true;
      duel.note_fallback();
      for (int a = 0; a < n; ++a) candidates.push_back(a);
    }
    slot.champion = pick(candidates, rng);
    slot.challenger = -1;
    slot.champion_batch.clear();
    slot.challenger_batch.clear();
  }

  if (v <= m) {
    out.action = slot.champion;
    out.suffix = roll_out(mdp, pihat, h, s, out.action, rng);
    slot.champion_batch.push_back(out.suffix);
    return out;
  }

  if (v == m + 1) slot.challenger = pick(challenger_ties(stats, h, s, n, slot.champion, iota), rng);
  out.action = slot.challenger;
  out.suffix = roll_out(mdp, pihat, h, s, out.action, rng);
  slot.challenger_batch.push_back(out.suffix);
  if (v == 2 * m) {
    const int sigma = oracle.human_feedback(slot.champion_batch, slot.challenger_batch);
    stats.record(h, s, slot.champion, slot.challenger, sigma);
    out.query = QueryEvent{h, s, slot.champion, slot.challenger, sigma};
  }
  return out;
}

std::vector<ActionChoice> next_visit_actions(const DuelState& duel, const PreferenceStats& stats,
                                             const EpisodicMdp& mdp, int h, int s, double iota) {
  const int n = mdp.actions_at(h, s);
  if (n == 1) return {{0, 1.0}};
  const int m = duel.batch_size();
  const int v = duel.block_position(duel.visits()(h, s) + 1);
  const DuelSlot& slot = duel.slot(h, s);
  auto uniform = [](const std::vector<int>& options) {
    std::vector<ActionChoice> out;
    for (int a : options) out.push_back({a, 1.0 / static_cast<double>(options.size())});
    return out;
  };
  if (v == 1) {
    std::vector<int> candidates = candidate_set(stats, h, s, n, iota);
    if (candidates.empty()) {
      for (int a = 0; a < n; ++a) candidates.push_back(a);
    }
    return uniform(candidates);
  }
  if (v <= m) return {{slot.champion, 1.0}};
  if (v == m + 1) return uniform(challenger_ties(stats, h, s, n, slot.champion, iota));
  return {{slot.challenger, 1.0}};
}

}  // namespace bsad
