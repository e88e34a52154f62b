#include "graml/baseline.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "graml/error.hpp"
#include "graml/random.hpp"

namespace graml {

namespace {

using Clock = std::chrono::steady_clock;

double log_likelihood(const QTable& q, const Observation& o, double temperature) {
  if (!q.contains(o.state)) return -std::log(static_cast<double>(kNumActions));
  const auto values = q.values(o.state);
  double top = values[0];
  for (double v : values) top = std::max(top, v);
  double z = 0.0;
  for (double v : values) z += std::exp((v - top) / temperature);
  return (values[index_of(o.action)] - top) / temperature - std::log(z);
}

}  // namespace

GraqlState graql_adapt(const GridEnv& env, const std::vector<State>& goal_set,
                       const QHyperParams& hp, std::uint64_t seed) {
  if (goal_set.empty()) fail(ErrorKind::ContractViolation, "goal set is empty");
  const auto t0 = Clock::now();
  GraqlState state;
  state.qtables.reserve(goal_set.size());
  for (std::size_t i = 0; i < goal_set.size(); ++i) {
    state.qtables.push_back(train_q_agent(env, goal_set[i], hp, derive_seed(seed, {i})));
  }
  state.adaptation_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return state;
}

RecognitionResult graql_infer(const GraqlState& state, const Trace& obs, double temperature) {
  if (obs.empty()) fail(ErrorKind::ContractViolation, "observation trace is empty");
  if (state.qtables.empty()) fail(ErrorKind::ContractViolation, "no goals adapted");
  if (!(temperature > 0.0)) fail(ErrorKind::ContractViolation, "temperature must be positive");
  const auto t0 = Clock::now();
  RecognitionResult r;
  for (const auto& q : state.qtables) {
    double sum = 0.0;
    for (const auto& o : obs.observations) sum += log_likelihood(q, o, temperature);
    r.scores.push_back(sum / static_cast<double>(obs.size()));
  }
  r.goal_index = argmax_lowest(r.scores);
  r.goal = state.qtables[r.goal_index].goal();
  r.inference_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

}  // namespace graml
