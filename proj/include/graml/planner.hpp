#pragma once

#include <cstdint>
#include <optional>

#include "graml/env.hpp"
#include "graml/trace.hpp"

namespace graml {

struct MctsConfig {
  int iterations = 2000;  // fresh search iterations per committed action
  double exploration_c = 1.4;
  int rollout_depth = 0;  // 0 selects width + height
  std::uint64_t seed = 0;
};

// UCT search that commits one action at a time and re-roots at the successor.
// Search nodes are keyed by cell, so statistics gathered below the chosen
// child carry over to the next decision. Throws PlanningFailure
// when the goal is not reached within the episode cap.
Trace mcts_plan(const GridEnv& env, State goal, const MctsConfig& cfg);
Trace mcts_plan(const GridEnv& env, State goal, const MctsConfig& cfg, State start);

}  // namespace graml
