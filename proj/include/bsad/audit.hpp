#pragma once

#include <cstdint>
#include <map>
#include <tuple>

#include "bsad/algorithm.hpp"

namespace bsad {

/// Checks, at every oracle query of a run, that the updated pair's empirical preference
/// lies within its bonus of the exact preference probability, and that no state's
/// identified action ever switches to a different one.
class ConcentrationAudit {
 public:
  ConcentrationAudit(const EpisodicMdp& mdp, const TrajectoryReward& reward) : mdp_(mdp), reward_(reward) {}

  /// Installs this audit as the runner's query observer. The audit must outlive the run.
  void attach(BsadRunner& runner);

  void observe(const QueryEvent& query, const BsadRunner& runner);

  std::int64_t queries_checked() const { return checked_; }
  std::int64_t violations() const { return violations_; }
  std::int64_t stability_violations() const { return stability_violations_; }
  bool clean() const { return violations_ == 0 && stability_violations_ == 0; }

 private:
  const EpisodicMdp& mdp_;
  const TrajectoryReward& reward_;
  std::map<std::tuple<int, int, int, int>, double> exact_;
  std::map<std::pair<int, int>, int> identified_;
  std::int64_t checked_ = 0;
  std::int64_t violations_ = 0;
  std::int64_t stability_violations_ = 0;
};

}  // namespace bsad
