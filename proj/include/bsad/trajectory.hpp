#pragma once

#include <compare>
#include <vector>

namespace bsad {

struct StateAction {
  int state = 0;
  int action = 0;
  auto operator<=>(const StateAction&) const = default;
};

/// A (partial) trajectory covering steps start_step .. start_step + steps.size() - 1.
/// Steps are 0-based throughout the library.
struct Trajectory {
  int start_step = 0;
  std::vector<StateAction> steps;

  int end_step() const { return start_step + static_cast<int>(steps.size()) - 1; }
  bool empty() const { return steps.empty(); }
  const StateAction& back() const { return steps.back(); }

  auto operator<=>(const Trajectory&) const = default;
};

}  // namespace bsad
