#include "bsad/audit.hpp"

#include <cmath>

namespace bsad {

void ConcentrationAudit::attach(BsadRunner& runner) {
  runner.set_query_observer([this](const QueryEvent& q, const BsadRunner& r) { observe(q, r); });
}

void ConcentrationAudit::observe(const QueryEvent& q, const BsadRunner& runner) {
  const PreferenceStats& stats = runner.stats();
  const double io = iota(runner.exploration(), runner.phase_episode());
  const auto key = std::make_tuple(q.step, q.state, q.challenger, q.champion);
  auto it = exact_.find(key);
  if (it == exact_.end()) {
    const double p = exact_preference_probability(mdp_, reward_, q.step, q.state, q.challenger, q.champion,
                                                  runner.policy(), runner.config().batch_size);
    it = exact_.emplace(key, p).first;
  }
  ++checked_;
  const double sigma = stats.sigma_hat(q.step, q.state, q.challenger, q.champion);
  if (std::abs(sigma - it->second) > stats.bonus(q.step, q.state, q.challenger, q.champion, io)) ++violations_;

  const auto id = identified_action(stats, q.step, q.state, mdp_.actions_at(q.step, q.state), io);
  if (id) {
    const auto [pos, inserted] = identified_.emplace(std::make_pair(q.step, q.state), *id);
    if (!inserted && pos->second != *id) ++stability_violations_;
  }
}

}  // namespace bsad
