#pragma once

#include <cstdint>
#include <vector>

#include "graml/recognizer.hpp"
#include "graml/rl.hpp"

namespace graml {

// GR-as-RL baseline: one Q-table per active goal, built at adaptation time.
struct GraqlState {
  std::vector<QTable> qtables;   // in goal-set order
  double adaptation_time = 0.0;  // seconds
};

GraqlState graql_adapt(const GridEnv& env, const std::vector<State>& goal_set,
                       const QHyperParams& hp, std::uint64_t seed);

// score(g) = mean over observations of log softmax(Q_g(s, .) / temperature)[a].
// Observations outside a table count as uniform (log 1/4).
RecognitionResult graql_infer(const GraqlState& state, const Trace& obs, double temperature);

}  // namespace graml
