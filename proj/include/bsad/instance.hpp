#pragma once

#include "bsad/mdp.hpp"
#include "bsad/reward.hpp"

namespace bsad {

struct Instance {
  EpisodicMdp mdp;
  TrajectoryReward reward;
};

}  // namespace bsad
