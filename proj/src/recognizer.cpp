#include "graml/recognizer.hpp"

#include <chrono>
#include <istream>
#include <ostream>
#include <string>

#include "graml/error.hpp"
#include "graml/serialize.hpp"

namespace graml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Trace> expert_traces(const std::vector<GoalLibrary>& provided, State goal,
                                 std::size_t library_size) {
  for (const auto& lib : provided) {
    if (lib.goal != goal) continue;
    if (lib.traces.size() < library_size) {
      fail(ErrorKind::ContractViolation, "expert library for " + to_string(goal) + " holds " +
                                             std::to_string(lib.traces.size()) + " traces, " +
                                             std::to_string(library_size) + " requested");
    }
    return {lib.traces.begin(), lib.traces.begin() + static_cast<std::ptrdiff_t>(library_size)};
  }
  fail(ErrorKind::ContractViolation, "no expert trace for goal " + to_string(goal));
}

}  // namespace

std::string_view to_string(AdaptStrategy s) {
  switch (s) {
    case AdaptStrategy::ExpertTraces: return "expert";
    case AdaptStrategy::Mcts: return "mcts";
    case AdaptStrategy::GoalConditioned: return "goal_conditioned";
  }
  return "?";
}

AdaptStrategy adapt_strategy_from_string(std::string_view name) {
  if (name == "expert") return AdaptStrategy::ExpertTraces;
  if (name == "mcts") return AdaptStrategy::Mcts;
  if (name == "goal_conditioned") return AdaptStrategy::GoalConditioned;
  fail(ErrorKind::Parse, "unknown adaptation strategy '" + std::string(name) + "'");
}

AdaptedState adapt_goals(const MetricModel& model, const GridEnv& env,
                         const std::vector<State>& goal_set, AdaptStrategy strategy,
                         const AdaptSource& source, std::size_t library_size,
                         bool precompute_embeddings) {
  if (goal_set.empty()) fail(ErrorKind::ContractViolation, "goal set is empty");
  if (library_size == 0) fail(ErrorKind::ContractViolation, "library size must be at least 1");
  for (std::size_t i = 0; i < goal_set.size(); ++i) {
    if (!env.is_open(goal_set[i])) {
      fail(ErrorKind::ContractViolation, "goal " + to_string(goal_set[i]) + " is not a free cell");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (goal_set[i] == goal_set[j]) {
        fail(ErrorKind::ContractViolation, "goal " + to_string(goal_set[i]) + " listed twice");
      }
    }
  }
  switch (strategy) {
    case AdaptStrategy::ExpertTraces:
      if (!source.expert) fail(ErrorKind::ContractViolation, "expert strategy without traces");
      break;
    case AdaptStrategy::Mcts:
      if (!source.mcts) fail(ErrorKind::ContractViolation, "MCTS strategy without a config");
      break;
    case AdaptStrategy::GoalConditioned:
      if (!source.gc_policy) {
        fail(ErrorKind::ContractViolation, "goal-conditioned strategy without a policy");
      }
      break;
  }

  const auto t0 = Clock::now();
  AdaptedState out;
  out.strategy = strategy;
  out.libraries.reserve(goal_set.size());
  for (std::size_t gi = 0; gi < goal_set.size(); ++gi) {
    const State goal = goal_set[gi];
    GoalLibrary lib{goal, {}};
    if (strategy == AdaptStrategy::ExpertTraces) {
      lib.traces = expert_traces(*source.expert, goal, library_size);
    } else if (strategy == AdaptStrategy::Mcts) {
      for (std::size_t j = 0; j < library_size; ++j) {
        MctsConfig cfg = *source.mcts;
        cfg.seed = derive_seed(source.mcts->seed, {gi, j});
        lib.traces.push_back(mcts_plan(env, goal, cfg));
      }
    } else {
      const auto idx = source.gc_policy->goal_index(goal);
      if (!idx) {
        fail(ErrorKind::GenerationFailure,
             "goal-conditioned policy was not trained for " + to_string(goal));
      }
      for (std::size_t j = 0; j < library_size; ++j) {
        lib.traces.push_back(stochastic_rollout(*source.gc_policy, goal, env,
                                                derive_seed(source.seed, {gi, j}), source.rollout));
      }
    }
    for (const auto& t : lib.traces) {
      if (t.empty()) fail(ErrorKind::ContractViolation, "empty library trace for " + to_string(goal));
    }
    out.libraries.push_back(std::move(lib));
  }
  if (precompute_embeddings) {
    for (const auto& lib : out.libraries) {
      out.precomputed.push_back(embed_library(model, lib, SIZE_MAX, env));
    }
  }
  out.adaptation_time = seconds_since(t0);
  return out;
}

std::vector<Embedding> embed_library(const MetricModel& model, const GoalLibrary& library,
                                     std::size_t truncate_len, const GridEnv& env) {
  if (truncate_len == 0) fail(ErrorKind::ContractViolation, "truncation length must be >= 1");
  std::vector<Embedding> out;
  out.reserve(library.traces.size());
  for (const auto& t : library.traces) out.push_back(embed(model, prefix(t, truncate_len), env));
  return out;
}

std::size_t argmax_lowest(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

RecognitionResult infer(const MetricModel& model, const AdaptedState& adapted, const Trace& obs,
                        const GridEnv& env, const InferOptions& opts) {
  if (obs.empty()) fail(ErrorKind::ContractViolation, "observation trace is empty");
  if (adapted.libraries.empty()) fail(ErrorKind::ContractViolation, "no goal libraries adapted");
  const auto t0 = Clock::now();
  const Embedding v = embed(model, obs, env);
  RecognitionResult r;
  r.scores.reserve(adapted.libraries.size());
  const bool cached = !opts.truncate && adapted.precomputed.size() == adapted.libraries.size();
  for (std::size_t i = 0; i < adapted.libraries.size(); ++i) {
    const auto& lib = adapted.libraries[i];
    if (lib.traces.empty()) fail(ErrorKind::ContractViolation, "library without traces");
    const auto members = cached ? adapted.precomputed[i]
                                : embed_library(model, lib, opts.truncate ? obs.size() : SIZE_MAX, env);
    double sum = 0.0;
    for (const auto& e : members) sum += similarity(e, v);
    r.scores.push_back(sum / static_cast<double>(members.size()));
  }
  r.goal_index = argmax_lowest(r.scores);
  r.goal = adapted.libraries[r.goal_index].goal;
  r.inference_time = seconds_since(t0);
  return r;
}

void save_adapted_state(std::ostream& out, const AdaptedState& state) {
  Json libs = Json::array();
  for (const auto& lib : state.libraries) {
    Json traces = Json::array();
    for (const auto& t : lib.traces) traces.push_back(to_json(t));
    libs.push_back({{"goal", to_json(lib.goal)}, {"traces", std::move(traces)}});
  }
  Json j = {{"format", "graml-adapted"},
            {"version", 1},
            {"strategy", to_string(state.strategy)},
            {"adaptation_time", state.adaptation_time},
            {"libraries", std::move(libs)}};
  out << j.dump() << '\n';
}

AdaptedState load_adapted_state(std::istream& in) {
  try {
    const Json j = Json::parse(in);
    if (j.at("format") != "graml-adapted" || j.at("version") != 1) {
      fail(ErrorKind::Parse, "not a version 1 adapted-state file");
    }
    AdaptedState s;
    s.strategy = adapt_strategy_from_string(j.at("strategy").get<std::string>());
    s.adaptation_time = j.at("adaptation_time").get<double>();
    for (const auto& lib : j.at("libraries")) {
      GoalLibrary g{state_from_json(lib.at("goal")), {}};
      for (const auto& t : lib.at("traces")) g.traces.push_back(trace_from_json(t));
      s.libraries.push_back(std::move(g));
    }
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed adapted state: ") + e.what());
  }
}

}  // namespace graml
