#include <set>
#include <string>

#include "graml/error.hpp"
#include "graml/harness.hpp"
#include "graml/serialize.hpp"

namespace graml {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::Config, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(ErrorKind::Config, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

QHyperParams q_from_json(const Json& j, QHyperParams hp, const std::string& where) {
  reject_unknown(j, {"alpha", "epsilon_start", "epsilon_end", "episodes", "eval_episodes",
                     "eval_jitter", "min_success_rate"}, where);
  read(j, "alpha", hp.alpha);
  read(j, "epsilon_start", hp.epsilon_start);
  read(j, "epsilon_end", hp.epsilon_end);
  read(j, "episodes", hp.episodes);
  read(j, "eval_episodes", hp.eval_episodes);
  read(j, "eval_jitter", hp.eval_jitter);
  read(j, "min_success_rate", hp.min_success_rate);
  return hp;
}

Json q_to_json(const QHyperParams& hp) {
  return {{"alpha", hp.alpha}, {"epsilon_start", hp.epsilon_start},
          {"epsilon_end", hp.epsilon_end}, {"episodes", hp.episodes},
          {"eval_episodes", hp.eval_episodes}, {"eval_jitter", hp.eval_jitter},
          {"min_success_rate", hp.min_success_rate}};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  ExperimentConfig cfg;
  try {
    const Json j = Json::parse(text);
    reject_unknown(j, {"envs", "layout_seed", "algorithms", "base_goals", "base_goal_list", "problems",
                       "active_goals", "goal_sets", "library_size", "truncate_libraries", "traces_per_goal", "pairs",
                       "balance", "dataset_jitter", "dataset_temperature",
                       "observation_temperature", "observation_jitter", "graql_temperature", "graql_timeout",
                       "train", "q", "gc_q", "mcts", "seed"},
                   "config");
    read(j, "envs", cfg.envs);
    read(j, "layout_seed", cfg.layout_seed);
    if (j.contains("algorithms")) {
      cfg.algorithms.clear();
      for (const auto& a : j["algorithms"]) {
        cfg.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
      }
    }
    read(j, "base_goals", cfg.base_goals);
    if (j.contains("base_goal_list")) {
      for (const auto& g : j["base_goal_list"]) cfg.base_goal_list.push_back(state_from_json(g));
    }
    read(j, "problems", cfg.problems);
    read(j, "active_goals", cfg.active_goals);
    if (j.contains("goal_sets")) {
      for (const auto& set : j["goal_sets"]) {
        std::vector<State> goals;
        for (const auto& g : set) goals.push_back(state_from_json(g));
        cfg.goal_sets.push_back(std::move(goals));
      }
    }
    read(j, "library_size", cfg.library_size);
    read(j, "truncate_libraries", cfg.truncate_libraries);
    read(j, "traces_per_goal", cfg.traces_per_goal);
    read(j, "pairs", cfg.pairs);
    read(j, "balance", cfg.balance);
    read(j, "dataset_jitter", cfg.dataset_jitter);
    read(j, "dataset_temperature", cfg.dataset_temperature);
    read(j, "observation_temperature", cfg.observation_temperature);
    read(j, "observation_jitter", cfg.observation_jitter);
    read(j, "graql_temperature", cfg.graql_temperature);
    read(j, "graql_timeout", cfg.graql_timeout);
    read(j, "seed", cfg.seed);
    if (j.contains("train")) {
      const Json& t = j["train"];
      reject_unknown(t, {"epochs", "batch_size", "learning_rate", "grad_clip",
                         "holdout_fraction", "hidden", "encoding", "seed"}, "train");
      read(t, "epochs", cfg.train.epochs);
      read(t, "batch_size", cfg.train.batch_size);
      read(t, "learning_rate", cfg.train.learning_rate);
      read(t, "grad_clip", cfg.train.grad_clip);
      read(t, "holdout_fraction", cfg.train.holdout_fraction);
      read(t, "hidden", cfg.train.hidden);
      read(t, "seed", cfg.train.seed);
      if (t.contains("encoding")) {
        cfg.train.encoding = encoding_from_string(t["encoding"].get<std::string>());
      }
    }
    if (j.contains("q")) cfg.q = q_from_json(j["q"], cfg.q, "q");
    if (j.contains("gc_q")) cfg.gc_q = q_from_json(j["gc_q"], cfg.gc_q, "gc_q");
    if (j.contains("mcts")) {
      const Json& m = j["mcts"];
      reject_unknown(m, {"iterations", "exploration_c", "rollout_depth", "seed"}, "mcts");
      read(m, "iterations", cfg.mcts.iterations);
      read(m, "exploration_c", cfg.mcts.exploration_c);
      read(m, "rollout_depth", cfg.mcts.rollout_depth);
      read(m, "seed", cfg.mcts.seed);
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid config: ") + e.what());
  }
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  Json algorithms = Json::array();
  for (auto a : cfg.algorithms) algorithms.push_back(to_string(a));
  Json base_list = Json::array();
  for (State s : cfg.base_goal_list) base_list.push_back(to_json(s));
  Json goal_sets = Json::array();
  for (const auto& set : cfg.goal_sets) {
    Json g = Json::array();
    for (State s : set) g.push_back(to_json(s));
    goal_sets.push_back(std::move(g));
  }
  const Json j = {
      {"envs", cfg.envs},
      {"layout_seed", cfg.layout_seed},
      {"algorithms", algorithms},
      {"base_goals", cfg.base_goals},
      {"base_goal_list", base_list},
      {"problems", cfg.problems},
      {"active_goals", cfg.active_goals},
      {"goal_sets", goal_sets},
      {"library_size", cfg.library_size},
      {"truncate_libraries", cfg.truncate_libraries},
      {"traces_per_goal", cfg.traces_per_goal},
      {"pairs", cfg.pairs},
      {"balance", cfg.balance},
      {"dataset_jitter", cfg.dataset_jitter},
      {"dataset_temperature", cfg.dataset_temperature},
      {"observation_temperature", cfg.observation_temperature},
      {"observation_jitter", cfg.observation_jitter},
      {"graql_temperature", cfg.graql_temperature},
      {"graql_timeout", cfg.graql_timeout},
      {"train", {{"epochs", cfg.train.epochs}, {"batch_size", cfg.train.batch_size},
                 {"learning_rate", cfg.train.learning_rate}, {"grad_clip", cfg.train.grad_clip},
                 {"holdout_fraction", cfg.train.holdout_fraction}, {"hidden", cfg.train.hidden},
                 {"encoding", to_string(cfg.train.encoding)}, {"seed", cfg.train.seed}}},
      {"q", q_to_json(cfg.q)},
      {"gc_q", q_to_json(cfg.gc_q)},
      {"mcts", {{"iterations", cfg.mcts.iterations}, {"exploration_c", cfg.mcts.exploration_c},
                {"rollout_depth", cfg.mcts.rollout_depth}, {"seed", cfg.mcts.seed}}},
      {"seed", cfg.seed}};
  return j.dump(2) + "\n";
}

}  // namespace graml
