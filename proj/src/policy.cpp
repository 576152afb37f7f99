#include "bsad/policy.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "bsad/mdp.hpp"

namespace bsad {

DeterministicPolicy DeterministicPolicy::completed(const EpisodicMdp& mdp, int fill) const {
  DeterministicPolicy out = *this;
  for (int h = 0; h < horizon(); ++h) {
    for (int s = 0; s < num_states(); ++s) {
      if (!is_set(h, s)) out.set(h, s, std::min(fill, mdp.actions_at(h, s) - 1));
    }
  }
  return out;
}

void DeterministicPolicy::validate(const EpisodicMdp& mdp) const {
  if (horizon() != mdp.horizon() || num_states() != mdp.num_states()) {
    throw std::invalid_argument("policy shape does not match the MDP");
  }
  for (int h = 0; h < horizon(); ++h) {
    for (int s = 0; s < num_states(); ++s) {
      const int a = table_(h, s);
      if (a != kUnset && (a < 0 || a >= mdp.actions_at(h, s))) {
        throw std::invalid_argument("policy entry (" + std::to_string(h) + ", " + std::to_string(s) +
                                    ") = " + std::to_string(a) + " is not an available action");
      }
    }
  }
}

}  // namespace bsad
