// graml: domain learning, goal adaptation, inference and experiment runs.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "graml/error.hpp"
#include "graml/harness.hpp"
#include "graml/serialize.hpp"

using namespace graml;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : experiment_config_from_json(read_file(path));
}

// "x,y;x,y;..."
std::vector<State> parse_goals(const std::string& text) {
  std::vector<State> goals;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    State s;
    char comma = 0;
    std::istringstream cell(item);
    if (!(cell >> s.x >> comma >> s.y) || comma != ',') {
      fail(ErrorKind::Config, "bad goal '" + item + "', expected x,y");
    }
    goals.push_back(s);
  }
  if (goals.empty()) fail(ErrorKind::Config, "no goals given");
  return goals;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path.string());
  out << text;
}

GridEnv env_of(const MetricModel& model) {
  const auto colon = model.env_id.find(':');
  if (colon == std::string::npos) fail(ErrorKind::Parse, "bad env id " + model.env_id);
  return make_env(model.env_id.substr(0, colon), std::stoull(model.env_id.substr(colon + 1)));
}

MetricModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  return load_model(in);
}

int report_error(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal recognition as metric learning on grid domains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string model_path;
  std::string adapted_path;
  std::string policy_path;
  std::string out_path;
  std::string goals_text;
  std::string trace_path;
  std::string strategy_name = "mcts";
  std::string out_dir = ".";
  std::size_t library_size = 1;
  bool truncate = false;
  bool goal_conditioned = false;

  auto* learn = app.add_subcommand("learn", "Domain learning: train the metric model");
  learn->add_option("-c,--config", config_path, "Experiment config (JSON)");
  learn->add_option("-o,--out", out_path, "Model checkpoint")->required();
  learn->add_flag("--goal-conditioned", goal_conditioned,
                  "Use one goal-conditioned agent instead of per-base-goal agents");
  learn->add_option("--policy-out", policy_path, "Goal-conditioned table checkpoint");

  auto* adapt = app.add_subcommand("adapt", "Goal adaptation: build per-goal libraries");
  adapt->add_option("-c,--config", config_path, "Experiment config (JSON)");
  adapt->add_option("-m,--model", model_path, "Model checkpoint")->required();
  adapt->add_option("-g,--goals", goals_text, "Goal set as x,y;x,y;...")->required();
  adapt->add_option("-s,--strategy", strategy_name, "mcts, expert or goal_conditioned");
  adapt->add_option("--policy", policy_path, "Goal-conditioned table (goal_conditioned only)");
  adapt->add_option("-n,--library-size", library_size, "Traces per goal");
  adapt->add_option("-o,--out", out_path, "Adapted-state file")->required();

  auto* inf = app.add_subcommand("infer", "Recognize the goal of an observation trace");
  inf->add_option("-m,--model", model_path, "Model checkpoint")->required();
  inf->add_option("-a,--adapted", adapted_path, "Adapted-state file")->required();
  inf->add_option("-t,--trace", trace_path, "Observation trace (JSON)")->required();
  inf->add_flag("--truncate", truncate, "Cut library traces to the observation length");

  auto* eval = app.add_subcommand("eval", "Run the full observability grid");
  eval->add_option("-c,--config", config_path, "Experiment config (JSON)");
  eval->add_option("-d,--out-dir", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Accuracy over base-goal and active-goal counts");
  sweep->add_option("-c,--config", config_path, "Experiment config (JSON)");
  sweep->add_option("-d,--out-dir", out_dir, "Output directory");
  SweepConfig sc;
  sweep->add_option("--base-counts", sc.base_counts, "Base-goal counts");
  sweep->add_option("--active-counts", sc.active_counts, "Active-goal counts");
  sweep->add_option("--seeds", sc.seeds, "Seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what());
  }

  try {
    if (*learn) {
      const auto cfg = load_config(config_path);
      if (cfg.envs.size() != 1) fail(ErrorKind::Config, "learn needs exactly one environment");
      const GridEnv env = make_env(cfg.envs[0], cfg.layout_seed);
      const std::uint64_t seed = derive_seed(cfg.seed, {0});
      const auto base = cfg.base_goal_list.empty() ? choose_base_goals(env, cfg.base_goals, seed)
                                                   : cfg.base_goal_list;
      Json summary = {{"env", env.id()}};
      if (goal_conditioned) {
        if (policy_path.empty()) fail(ErrorKind::Config, "--policy-out is required");
        const auto gc = learn_gc_domain(env, base, cfg, seed);
        auto out = open_out(out_path);
        save_model(out, gc.domain.bg_model);
        auto pout = open_out(policy_path);
        save_gc_qtable(pout, gc.policy);
        summary["heldout_accuracy"] = gc.domain.bg_heldout_accuracy;
        summary["seconds"] = gc.domain.bg_train_seconds;
      } else {
        const auto d = learn_bg_domain(env, base, cfg, seed);
        auto out = open_out(out_path);
        save_model(out, d.bg_model);
        summary["heldout_accuracy"] = d.bg_heldout_accuracy;
        summary["seconds"] = d.bg_train_seconds;
      }
      Json goals = Json::array();
      for (State g : base) goals.push_back(to_json(g));
      summary["base_goals"] = goals;
      std::cout << summary.dump() << '\n';
    } else if (*adapt) {
      const auto cfg = load_config(config_path);
      const auto model = read_model(model_path);
      const GridEnv env = env_of(model);
      const auto goals = parse_goals(goals_text);
      const auto strategy = adapt_strategy_from_string(strategy_name);
      AdaptSource src;
      src.seed = cfg.seed;
      std::vector<GoalLibrary> expert;
      std::optional<GcQTable> policy;
      if (strategy == AdaptStrategy::Mcts) {
        src.mcts = cfg.mcts;
      } else if (strategy == AdaptStrategy::ExpertTraces) {
        for (State g : goals) {
          GoalLibrary lib{g, {}};
          for (std::size_t j = 0; j < library_size; ++j) {
            lib.traces.push_back(shortest_path_trace(env, env.start(), g));
          }
          expert.push_back(std::move(lib));
        }
        src.expert = &expert;
      } else {
        std::ifstream pin(policy_path);
        if (!pin) fail(ErrorKind::Io, "cannot open policy '" + policy_path + "'");
        policy.emplace(load_gc_qtable(pin));
        src.gc_policy = &*policy;
        src.rollout.temperature = cfg.dataset_temperature;
      }
      const auto ad = adapt_goals(model, env, goals, strategy, src, library_size);
      auto out = open_out(out_path);
      save_adapted_state(out, ad);
      std::cout << Json{{"goals", goals.size()}, {"adaptation_time", ad.adaptation_time}}.dump()
                << '\n';
    } else if (*inf) {
      const auto model = read_model(model_path);
      std::ifstream ain(adapted_path);
      if (!ain) fail(ErrorKind::Io, "cannot open " + adapted_path);
      const auto ad = load_adapted_state(ain);
      const GridEnv env = env_of(model);
      Json tj;
      try {
        tj = Json::parse(read_file(trace_path));
      } catch (const Json::exception& e) {
        fail(ErrorKind::Parse, std::string("trace: ") + e.what());
      }
      const auto r = infer(model, ad, trace_from_json(tj), env, {truncate});
      std::cout << Json{{"goal", to_json(r.goal)},
                        {"goal_index", r.goal_index},
                        {"confidence", r.scores[r.goal_index]},
                        {"scores", r.scores},
                        {"inference_time", r.inference_time}}
                       .dump()
                << '\n';
    } else if (*eval) {
      const auto cfg = load_config(config_path);
      const auto report = run_odgr_experiment(cfg);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      write_text(dir / "accuracy.csv", accuracy_csv(report));
      write_text(dir / "timings.json", timings_json(report));
      write_text(dir / "raw_log.jsonl", raw_log_text(report));
      std::cout << accuracy_csv(report);
      for (const auto& e : report.errors) {
        std::cerr << Json{{"error", "phase"}, {"message", e}}.dump() << '\n';
      }
      return report.errors.empty() ? 0 : 1;
    } else if (*sweep) {
      sc.base = load_config(config_path);
      const auto report = sweep_goal_counts(sc);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      write_text(dir / "sweep.csv", sweep_csv(report));
      std::string raw;
      for (const auto& line : report.raw_log) raw += line + '\n';
      write_text(dir / "sweep_raw_log.jsonl", raw);
      std::cout << sweep_csv(report);
    }
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(std::string(to_string(ErrorKind::Io)), e.what());
  }
  return 0;
}
