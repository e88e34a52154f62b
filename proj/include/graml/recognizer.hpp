#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "graml/metric.hpp"
#include "graml/planner.hpp"
#include "graml/rl.hpp"

namespace graml {

struct GoalLibrary {
  State goal;
  std::vector<Trace> traces;
};

enum class AdaptStrategy { ExpertTraces, Mcts, GoalConditioned };

std::string_view to_string(AdaptStrategy s);
AdaptStrategy adapt_strategy_from_string(std::string_view name);

struct AdaptedState {
  std::vector<GoalLibrary> libraries;
  AdaptStrategy strategy = AdaptStrategy::ExpertTraces;
  double adaptation_time = 0.0;  // seconds
  // Untruncated library embeddings, filled only on request and read only by
  // non-truncating inference.
  std::vector<std::vector<Embedding>> precomputed;
};

// Exactly one member is consulted, selected by the strategy.
struct AdaptSource {
  const std::vector<GoalLibrary>* expert = nullptr;
  std::optional<MctsConfig> mcts;
  const GcQTable* gc_policy = nullptr;
  RolloutOptions rollout;
  std::uint64_t seed = 0;
};

AdaptedState adapt_goals(const MetricModel& model, const GridEnv& env,
                         const std::vector<State>& goal_set, AdaptStrategy strategy,
                         const AdaptSource& source, std::size_t library_size,
                         bool precompute_embeddings = false);

// Embeddings of each library trace cut to its first `truncate_len` steps.
std::vector<Embedding> embed_library(const MetricModel& model, const GoalLibrary& library,
                                     std::size_t truncate_len, const GridEnv& env);

struct RecognitionResult {
  State goal;
  std::size_t goal_index = 0;
  std::vector<double> scores;  // one per library, in adapted order
  double inference_time = 0.0;  // seconds
};

// Index of the largest score; the lowest index wins ties.
std::size_t argmax_lowest(const std::vector<double>& scores);

struct InferOptions {
  // Cut every library trace to the observation's length before embedding.
  // Otherwise whole library traces are compared (precomputed ones if present).
  bool truncate = true;
};

RecognitionResult infer(const MetricModel& model, const AdaptedState& adapted, const Trace& obs,
                        const GridEnv& env, const InferOptions& opts = {});

void save_adapted_state(std::ostream& out, const AdaptedState& state);
AdaptedState load_adapted_state(std::istream& in);

}  // namespace graml
