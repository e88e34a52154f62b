#include "graml/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <sstream>

#include "graml/error.hpp"
#include "graml/serialize.hpp"
#include "graml/text_io.hpp"

namespace graml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream tags for derive_seed.
enum Tag : std::uint64_t {
  kBaseGoals = 1,
  kGoalSet,
  kBaseAgent,
  kDatasetRollout,
  kPairs,
  kTraining,
  kGcAgent,
  kGcRollout,
  kActor,
  kObservation,
  kMask,
  kMcts,
  kGraql,
  kAdaptRollout,
};

int l1(State a, State b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

std::vector<State> reachable_free_cells(const GridEnv& env) {
  const auto dist = shortest_distances(env, env.start());
  std::vector<State> out;
  for (State s : env.open_cells()) {
    if (s != env.start() && dist[env.index(s)] > 0) out.push_back(s);
  }
  return out;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::BgGraml: return "bg-graml";
    case Algorithm::BgGramlExpert: return "bg-graml-expert";
    case Algorithm::GcGraml: return "gc-graml";
    case Algorithm::Graql: return "graql";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (auto a : {Algorithm::BgGraml, Algorithm::BgGramlExpert, Algorithm::GcGraml,
                 Algorithm::Graql}) {
    if (to_string(a) == name) return a;
  }
  fail(ErrorKind::Config, "unknown algorithm '" + std::string(name) + "'");
}

std::vector<State> choose_base_goals(const GridEnv& env, std::size_t n, std::uint64_t seed) {
  const auto cells = reachable_free_cells(env);
  if (n > cells.size()) {
    fail(ErrorKind::Config, std::to_string(n) + " base goals requested, " + env.id() + " has " +
                                std::to_string(cells.size()) + " candidate cells");
  }
  Rng rng(derive_seed(seed, {kBaseGoals}));
  // Distance from each candidate to the nearest anchor (start plus chosen goals).
  std::vector<int> nearest(cells.size());
  const auto from_start = shortest_distances(env, env.start());
  for (std::size_t i = 0; i < cells.size(); ++i) nearest[i] = from_start[env.index(cells[i])];
  std::vector<State> goals;
  std::vector<bool> taken(cells.size(), false);
  while (goals.size() < n) {
    int best = -1;
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (taken[i]) continue;
      if (nearest[i] > best) {
        best = nearest[i];
        ties.clear();
      }
      if (nearest[i] == best) ties.push_back(i);
    }
    const auto pick = ties[uniform_index(rng, ties.size())];
    taken[pick] = true;
    goals.push_back(cells[pick]);
    const auto d = shortest_distances(env, cells[pick]);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const int di = d[env.index(cells[i])];
      if (di >= 0) nearest[i] = std::min(nearest[i], di);
    }
  }
  return goals;
}

std::vector<State> sample_goal_set(const GridEnv& env, std::size_t n,
                                   const std::vector<State>& excluded, std::uint64_t seed,
                                   int min_separation) {
  const auto dist = shortest_distances(env, env.start());
  std::vector<State> candidates;
  for (State s : reachable_free_cells(env)) {
    if (dist[env.index(s)] < min_separation) continue;
    if (std::find(excluded.begin(), excluded.end(), s) != excluded.end()) continue;
    candidates.push_back(s);
  }
  Rng rng(derive_seed(seed, {kGoalSet}));
  constexpr int kAttempts = 200;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<State> pool = candidates;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<State> chosen;
    for (State s : pool) {
      if (chosen.size() == n) break;
      const bool apart = std::all_of(chosen.begin(), chosen.end(),
                                     [&](State c) { return l1(c, s) >= min_separation; });
      if (apart) chosen.push_back(s);
    }
    if (chosen.size() == n) return chosen;
  }
  fail(ErrorKind::Config, "cannot place " + std::to_string(n) + " goals " +
                              std::to_string(min_separation) + " cells apart on " + env.id());
}

Trace shortest_path_trace(const GridEnv& env, State start, State goal) {
  if (!env.is_open(start) || !env.is_open(goal) || start == goal) {
    fail(ErrorKind::ContractViolation, "shortest path needs distinct free endpoints");
  }
  const auto to_goal = shortest_distances(env, goal);
  if (to_goal[env.index(start)] < 0) {
    fail(ErrorKind::PlanningFailure, "goal " + to_string(goal) + " unreachable");
  }
  Trace t;
  t.goal = goal;
  State s = start;
  while (s != goal) {
    for (Action a : kAllActions) {
      const State next = env.move(s, a);
      if (env.is_open(next) && to_goal[env.index(next)] == to_goal[env.index(s)] - 1) {
        t.observations.push_back({s, a});
        s = next;
        break;
      }
    }
  }
  return t;
}

std::string_view column_name(std::size_t column) {
  static constexpr std::array<std::string_view, kReportColumns> kNames = {
      "consecutive_30", "consecutive_50", "consecutive_70", "nonconsecutive_30",
      "nonconsecutive_50", "nonconsecutive_70", "full_100"};
  return kNames.at(column);
}

std::size_t column_of(MaskKind kind, double ratio) {
  if (kind == MaskKind::Full || ratio >= 1.0) return 6;
  std::size_t r = 0;
  while (r < 3 && std::abs(kObservabilityRatios[r] - ratio) > 1e-9) ++r;
  if (r == 3) fail(ErrorKind::ContractViolation, "ratio is not a report column");
  return (kind == MaskKind::Consecutive ? 0 : 3) + r;
}

double CellStats::stddev() const {
  if (per_problem.size() < 2) return 0.0;
  const double mean =
      std::accumulate(per_problem.begin(), per_problem.end(), 0.0) / per_problem.size();
  double ss = 0.0;
  for (double a : per_problem) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / static_cast<double>(per_problem.size()));
}

namespace {

struct DomainModel {
  MetricModel model;
  double heldout_accuracy = 0.0;
  double seconds = 0.0;
};

DomainModel learn_from_pool(const GridEnv& env, const std::vector<GoalTraces>& pool,
                            const ExperimentConfig& cfg, std::uint64_t seed,
                            Clock::time_point t0) {
  Rng rng(derive_seed(seed, {kPairs}));
  const auto pairs = generate_pairs(pool, cfg.pairs, cfg.balance, rng);
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, {kTraining, cfg.train.seed});
  auto trained = train(pairs, tc, env);
  return {std::move(trained.model), trained.heldout_accuracy, seconds_since(t0)};
}

RolloutOptions dataset_rollout(const ExperimentConfig& cfg) {
  RolloutOptions o;
  o.temperature = cfg.dataset_temperature;
  o.jitter_steps = cfg.dataset_jitter;
  return o;
}

DomainModel learn_bg(const GridEnv& env, const std::vector<State>& base_goals,
                     const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::vector<GoalTraces> pool;
  for (std::size_t i = 0; i < base_goals.size(); ++i) {
    const auto q = train_q_agent(env, base_goals[i], cfg.q, derive_seed(seed, {kBaseAgent, i}));
    GoalTraces g{base_goals[i], {}};
    for (std::size_t j = 0; j < cfg.traces_per_goal; ++j) {
      g.traces.push_back(stochastic_rollout(q, env, derive_seed(seed, {kDatasetRollout, i, j}),
                                            dataset_rollout(cfg)));
    }
    pool.push_back(std::move(g));
  }
  return learn_from_pool(env, pool, cfg, seed, t0);
}

struct GcDomain {
  DomainModel metric;
  std::optional<GcQTable> policy;
};

// The tabular goal-conditioned agent cannot generalize to unseen goals, so it
// is trained over every reachable cell; the metric dataset still comes from
// the base goals only.
GcDomain learn_gc(const GridEnv& env, const std::vector<State>& base_goals,
                  const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = Clock::now();
  GcDomain out;
  out.policy.emplace(train_gc_q_agent(env, reachable_free_cells(env), cfg.gc_q,
                                      derive_seed(seed, {kGcAgent})));
  std::vector<GoalTraces> pool;
  for (std::size_t i = 0; i < base_goals.size(); ++i) {
    GoalTraces g{base_goals[i], {}};
    for (std::size_t j = 0; j < cfg.traces_per_goal; ++j) {
      g.traces.push_back(stochastic_rollout(*out.policy, base_goals[i], env,
                                            derive_seed(seed, {kGcRollout, i, j}),
                                            dataset_rollout(cfg)));
    }
    pool.push_back(std::move(g));
  }
  out.metric = learn_from_pool(env, pool, cfg, seed, t0);
  return out;
}

// Suboptimal actor trace from a jittered start, then masked.
Trace make_observation(const QTable& actor, const GridEnv& env, const ExperimentConfig& cfg,
                       std::uint64_t oseed, MaskKind kind, double ratio, std::size_t* full_len) {
  RolloutOptions ro;
  ro.temperature = cfg.observation_temperature;
  ro.jitter_steps = cfg.observation_jitter;
  const Trace full = stochastic_rollout(actor, env, oseed, ro);
  if (full_len) *full_len = full.size();
  Rng mask_rng(derive_seed(oseed, {kMask}));
  return kind == MaskKind::Consecutive ? mask_consecutive(full, ratio)
                                       : mask_nonconsecutive(full, ratio, mask_rng);
}

bool uses(const ExperimentConfig& cfg, Algorithm a) {
  return std::find(cfg.algorithms.begin(), cfg.algorithms.end(), a) != cfg.algorithms.end();
}

struct PhaseOutcome {
  std::optional<State> predicted;
  std::string error;
};

// Accuracy accumulator for one env before it is folded into the report.
using EnvCells = std::map<std::string, std::array<CellStats, kReportColumns>>;

void close_problem(EnvCells& cells, const EnvCells& problem) {
  for (const auto& [alg, cols] : problem) {
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      auto& dst = cells[alg][c];
      dst.correct += cols[c].correct;
      dst.total += cols[c].total;
      if (cols[c].total > 0) dst.per_problem.push_back(cols[c].accuracy());
    }
  }
}

void run_environment(const ExperimentConfig& cfg, std::size_t env_slot, AccuracyReport& report) {
  const GridEnv env = make_env(cfg.envs[env_slot], cfg.layout_seed);
  const std::uint64_t seed = derive_seed(cfg.seed, {env_slot});
  PhaseTimings& timings = report.timings[env.id()];
  EnvCells cells;

  std::vector<State> base_goals = cfg.base_goal_list;
  if (base_goals.empty()) {
    base_goals = choose_base_goals(env, cfg.base_goals, seed);
  } else {
    for (State g : base_goals) {
      if (!env.is_open(g) || g == env.start()) {
        fail(ErrorKind::Config, "base goal " + to_string(g) + " is not a free cell of " + env.id());
      }
    }
  }
  std::vector<std::vector<State>> goal_sets = cfg.goal_sets;
  if (goal_sets.empty()) {
    for (std::size_t p = 0; p < cfg.problems; ++p) {
      goal_sets.push_back(sample_goal_set(env, cfg.active_goals, base_goals,
                                          derive_seed(seed, {kGoalSet, p})));
    }
  }

  // Domain learning, before any goal set is revealed.
  std::optional<DomainModel> bg;
  std::optional<GcDomain> gc;
  if (uses(cfg, Algorithm::BgGraml) || uses(cfg, Algorithm::BgGramlExpert)) {
    bg = learn_bg(env, base_goals, cfg, seed);
    timings.domain_learning[std::string(to_string(Algorithm::BgGraml))] = bg->seconds;
    timings.domain_learning[std::string(to_string(Algorithm::BgGramlExpert))] = bg->seconds;
    report.domains.push_back({env.id(), base_goals, bg->model, bg->heldout_accuracy, bg->seconds});
  }
  if (uses(cfg, Algorithm::GcGraml)) {
    gc = learn_gc(env, base_goals, cfg, seed);
    timings.domain_learning[std::string(to_string(Algorithm::GcGraml))] = gc->metric.seconds;
  }
  if (uses(cfg, Algorithm::Graql)) timings.domain_learning["graql"] = 0.0;

  for (std::size_t p = 0; p < goal_sets.size(); ++p) {
    const auto& goals = goal_sets[p];
    for (State g : goals) {
      if (!env.is_open(g)) {
        fail(ErrorKind::Config, "goal " + to_string(g) + " is not a free cell of " + env.id());
      }
    }
    const std::uint64_t pseed = derive_seed(seed, {kGoalSet, p, 0x9});

    // Observed actors are independent of every recognizer.
    std::vector<QTable> actors;
    for (std::size_t gi = 0; gi < goals.size(); ++gi) {
      actors.push_back(train_q_agent(env, goals[gi], cfg.q, derive_seed(pseed, {kActor, gi})));
    }
    std::vector<GoalLibrary> expert;
    if (uses(cfg, Algorithm::BgGramlExpert)) {
      for (State g : goals) expert.push_back({g, {shortest_path_trace(env, env.start(), g)}});
    }

    // Goal adaptation.
    std::map<Algorithm, AdaptedState> adapted;
    std::optional<GraqlState> graql;
    std::map<Algorithm, std::string> adapt_error;
    for (Algorithm alg : cfg.algorithms) {
      const std::string name(to_string(alg));
      try {
        double seconds = 0.0;
        if (alg == Algorithm::Graql) {
          graql = graql_adapt(env, goals, cfg.q, derive_seed(pseed, {kGraql}));
          seconds = graql->adaptation_time;
          if (seconds > cfg.graql_timeout) {
            graql.reset();
            fail(ErrorKind::TrainingFailure, "adaptation exceeded the " +
                                                 text_io::format_double(cfg.graql_timeout) +
                                                 " s timeout");
          }
        } else {
          AdaptSource src;
          AdaptStrategy strategy = AdaptStrategy::Mcts;
          const MetricModel* model = &bg->model;
          if (alg == Algorithm::BgGraml) {
            src.mcts = cfg.mcts;
            src.mcts->seed = derive_seed(pseed, {kMcts});
          } else if (alg == Algorithm::BgGramlExpert) {
            strategy = AdaptStrategy::ExpertTraces;
            src.expert = &expert;
          } else {
            strategy = AdaptStrategy::GoalConditioned;
            src.gc_policy = &*gc->policy;
            src.rollout = dataset_rollout(cfg);
            src.rollout.jitter_steps = 0;
            src.seed = derive_seed(pseed, {kAdaptRollout});
            model = &gc->metric.model;
          }
          adapted[alg] = adapt_goals(*model, env, goals, strategy, src, cfg.library_size);
          seconds = adapted[alg].adaptation_time;
        }
        timings.goal_adaptation[name].push_back(seconds);
      } catch (const Error& e) {
        adapt_error[alg] = e.what();
        report.errors.push_back(env.id() + " problem " + std::to_string(p) + " " + name +
                                " adaptation: " + e.what());
      }
    }

    EnvCells problem_cells;
    for (std::size_t gi = 0; gi < goals.size(); ++gi) {
      for (MaskKind kind : {MaskKind::Consecutive, MaskKind::NonConsecutive}) {
        for (std::size_t ri = 0; ri < kObservabilityRatios.size(); ++ri) {
          const double ratio = kObservabilityRatios[ri];
          const std::uint64_t oseed =
              derive_seed(pseed, {kObservation, gi, static_cast<std::uint64_t>(kind), ri});
          Json base = {{"env", env.id()}, {"seed", cfg.seed}, {"problem", p},
                       {"true_goal", to_json(goals[gi])}, {"mask", to_string(kind)},
                       {"ratio", ratio}};
          std::optional<Trace> obs;
          std::string obs_error;
          try {
            std::size_t full_len = 0;
            obs = make_observation(actors[gi], env, cfg, oseed, kind, ratio, &full_len);
            base["full_len"] = full_len;
            base["obs_len"] = obs->size();
          } catch (const Error& e) {
            obs_error = e.what();
          }

          for (Algorithm alg : cfg.algorithms) {
            const std::string name(to_string(alg));
            Json rec = base;
            rec["algorithm"] = name;
            PhaseOutcome out;
            if (!obs) {
              out.error = "observation: " + obs_error;
            } else if (adapt_error.count(alg)) {
              out.error = "adaptation: " + adapt_error[alg];
            } else {
              try {
                RecognitionResult r;
                if (alg == Algorithm::Graql) {
                  r = graql_infer(*graql, *obs, cfg.graql_temperature);
                } else {
                  const MetricModel& model =
                      alg == Algorithm::GcGraml ? gc->metric.model : bg->model;
                  r = infer(model, adapted.at(alg), *obs, env, {cfg.truncate_libraries});
                }
                out.predicted = r.goal;
                timings.inference[name].push_back(r.inference_time);
              } catch (const Error& e) {
                out.error = e.what();
              }
            }
            const bool correct = out.predicted && *out.predicted == goals[gi];
            rec["predicted"] = out.predicted ? to_json(*out.predicted) : Json(nullptr);
            rec["correct"] = correct;
            if (!out.error.empty()) {
              rec["error"] = out.error;
              report.errors.push_back(env.id() + " problem " + std::to_string(p) + " " + name +
                                      ": " + out.error);
            }
            auto& cell = problem_cells[name][column_of(kind, ratio)];
            ++cell.total;
            if (correct) ++cell.correct;
            report.raw_log.push_back(rec.dump());
          }
        }
      }
    }
    close_problem(cells, problem_cells);
  }
  report.cells[env.id()] = std::move(cells);
}

}  // namespace

LearnedDomain learn_bg_domain(const GridEnv& env, const std::vector<State>& base_goals,
                              const ExperimentConfig& cfg, std::uint64_t seed) {
  auto d = learn_bg(env, base_goals, cfg, seed);
  return {env.id(), base_goals, std::move(d.model), d.heldout_accuracy, d.seconds};
}

GcLearnedDomain learn_gc_domain(const GridEnv& env, const std::vector<State>& base_goals,
                                const ExperimentConfig& cfg, std::uint64_t seed) {
  auto d = learn_gc(env, base_goals, cfg, seed);
  return {{env.id(), base_goals, std::move(d.metric.model), d.metric.heldout_accuracy,
           d.metric.seconds},
          std::move(*d.policy)};
}

AccuracyReport run_odgr_experiment(const ExperimentConfig& cfg) {
  if (cfg.envs.empty()) fail(ErrorKind::Config, "no environments configured");
  if (cfg.algorithms.empty()) fail(ErrorKind::Config, "no algorithms configured");
  if (!cfg.goal_sets.empty() && cfg.envs.size() != 1) {
    fail(ErrorKind::Config, "explicit goal sets require a single environment");
  }
  if (!cfg.base_goal_list.empty() && cfg.envs.size() != 1) {
    fail(ErrorKind::Config, "an explicit base goal list requires a single environment");
  }
  const std::size_t n_base = cfg.base_goal_list.empty() ? cfg.base_goals : cfg.base_goal_list.size();
  if (n_base < 2) fail(ErrorKind::Config, "at least 2 base goals are needed");
  AccuracyReport report;
  if (cfg.goal_sets.empty() && cfg.problems == 0) return report;
  for (std::size_t e = 0; e < cfg.envs.size(); ++e) run_environment(cfg, e, report);

  if (cfg.envs.size() > 1) {
    auto& avg = report.cells["average"];
    for (const auto& [env_id, algs] : report.cells) {
      if (env_id == "average") continue;
      for (const auto& [alg, cols] : algs) {
        for (std::size_t c = 0; c < kReportColumns; ++c) {
          auto& dst = avg[alg][c];
          dst.correct += cols[c].correct;
          dst.total += cols[c].total;
          dst.per_problem.insert(dst.per_problem.end(), cols[c].per_problem.begin(),
                                 cols[c].per_problem.end());
        }
      }
    }
  }
  return report;
}

std::string accuracy_csv(const AccuracyReport& report) {
  std::ostringstream out;
  out << "env,algorithm";
  for (std::size_t c = 0; c < kReportColumns; ++c) {
    out << ',' << column_name(c) << "_mean," << column_name(c) << "_std";
  }
  out << ",phases\n";
  auto emit = [&](const std::string& env_id) {
    const auto it = report.cells.find(env_id);
    if (it == report.cells.end()) return;
    for (const auto& [alg, cols] : it->second) {
      out << env_id << ',' << alg;
      std::size_t phases = 0;
      for (const auto& cell : cols) {
        out << ',' << text_io::format_double(cell.accuracy()) << ','
            << text_io::format_double(cell.stddev());
        phases += cell.total;
      }
      out << ',' << phases << '\n';
    }
  };
  for (const auto& [env_id, _] : report.cells) {
    if (env_id != "average") emit(env_id);
  }
  emit("average");
  return out.str();
}

std::string timings_json(const AccuracyReport& report) {
  Json j = Json::object();
  for (const auto& [env_id, t] : report.timings) {
    j[env_id] = {{"domain_learning", t.domain_learning},
                 {"goal_adaptation", t.goal_adaptation},
                 {"inference", t.inference}};
  }
  return j.dump(2) + "\n";
}

std::string raw_log_text(const AccuracyReport& report) {
  std::string out;
  for (const auto& line : report.raw_log) out += line + '\n';
  return out;
}

std::map<std::string, std::array<CellStats, kReportColumns>> tally_raw_log(
    const std::vector<std::string>& raw_log, const std::string& env_id) {
  std::map<std::string, std::array<CellStats, kReportColumns>> out;
  for (const auto& line : raw_log) {
    const Json j = Json::parse(line);
    if (env_id != "average" && j.at("env").get<std::string>() != env_id) continue;
    auto& cell = out[j.at("algorithm").get<std::string>()]
                    [column_of(mask_kind_from_string(j.at("mask").get<std::string>()),
                               j.at("ratio").get<double>())];
    ++cell.total;
    if (j.at("correct").get<bool>()) ++cell.correct;
  }
  return out;
}

double trace_overlap(const Trace& a, const Trace& b) {
  const auto sa = states_of(a);
  const auto sb = states_of(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<std::size_t> prev(sb.size() + 1);
  std::vector<std::size_t> cur(sb.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= sa.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= sb.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (sa[i - 1] == sb[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  const double longest = static_cast<double>(std::max(sa.size(), sb.size()));
  return 1.0 - static_cast<double>(prev[sb.size()]) / longest;
}

ConfusionMatrices emit_confusion_matrices(const AdaptedState& adapted, const MetricModel& model,
                                          const std::vector<Trace>& probes, const GridEnv& env) {
  if (probes.size() != adapted.libraries.size()) {
    fail(ErrorKind::ContractViolation, "need exactly one probe trace per adapted goal");
  }
  ConfusionMatrices m;
  for (const auto& probe : probes) {
    m.embedding_similarity.push_back(infer(model, adapted, probe, env, {false}).scores);
    std::vector<double> row;
    for (const auto& lib : adapted.libraries) {
      double sum = 0.0;
      for (const auto& t : lib.traces) sum += trace_overlap(probe, t);
      row.push_back(sum / static_cast<double>(lib.traces.size()));
    }
    m.trace_similarity.push_back(std::move(row));
  }
  return m;
}

std::string matrix_csv(const Matrix& m) {
  std::ostringstream out;
  for (const auto& row : m) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? "," : "") << text_io::format_double(row[j]);
    }
    out << '\n';
  }
  return out.str();
}

double SweepCell::mean() const {
  if (per_seed.empty()) return 0.0;
  return std::accumulate(per_seed.begin(), per_seed.end(), 0.0) /
         static_cast<double>(per_seed.size());
}

const SweepCell& SweepReport::at(std::size_t base_count, std::size_t active_count) const {
  for (const auto& c : cells) {
    if (c.base_count == base_count && c.active_count == active_count) return c;
  }
  fail(ErrorKind::ContractViolation, "no sweep cell for the requested counts");
}

std::vector<double> SweepReport::base_marginals(const SweepConfig& cfg) const {
  std::vector<double> out;
  for (auto b : cfg.base_counts) {
    double sum = 0.0;
    for (auto a : cfg.active_counts) sum += at(b, a).mean();
    out.push_back(sum / static_cast<double>(cfg.active_counts.size()));
  }
  return out;
}

std::vector<double> SweepReport::active_marginals(const SweepConfig& cfg) const {
  std::vector<double> out;
  for (auto a : cfg.active_counts) {
    double sum = 0.0;
    for (auto b : cfg.base_counts) sum += at(b, a).mean();
    out.push_back(sum / static_cast<double>(cfg.base_counts.size()));
  }
  return out;
}

SweepReport sweep_goal_counts(const SweepConfig& cfg) {
  if (cfg.base.envs.size() != 1) fail(ErrorKind::Config, "a sweep runs on one environment");
  SweepReport report;
  for (auto b : cfg.base_counts) {
    for (auto a : cfg.active_counts) report.cells.push_back({b, a, {}});
  }
  auto cell_at = [&](std::size_t b, std::size_t a) -> SweepCell& {
    return report.cells[static_cast<std::size_t>(&report.at(b, a) - report.cells.data())];
  };
  for (auto b : cfg.base_counts) {
    for (auto seed : cfg.seeds) {
      ExperimentConfig ec = cfg.base;
      ec.algorithms = {Algorithm::BgGraml};
      ec.base_goals = b;
      ec.seed = seed;
      ec.goal_sets.clear();
      ec.base_goal_list.clear();
      ec.problems = 0;
      const GridEnv env = make_env(ec.envs[0], ec.layout_seed);
      const std::uint64_t s = derive_seed(seed, {0});
      const auto base_goals = choose_base_goals(env, b, s);
      // Check every requested active size up front so the error is immediate.
      for (auto a : cfg.active_counts) {
        sample_goal_set(env, a, base_goals, derive_seed(s, {kGoalSet, a}));
      }
      const DomainModel model = learn_bg(env, base_goals, ec, s);
      for (auto a : cfg.active_counts) {
        ec.goal_sets.clear();
        for (std::size_t p = 0; p < cfg.base.problems; ++p) {
          ec.goal_sets.push_back(
              sample_goal_set(env, a, base_goals, derive_seed(s, {kGoalSet, a, p})));
        }
        std::size_t correct = 0;
        std::size_t total = 0;
        for (std::size_t p = 0; p < ec.goal_sets.size(); ++p) {
          const auto& goals = ec.goal_sets[p];
          const std::uint64_t pseed = derive_seed(s, {kGoalSet, a, p, 0x9});
          AdaptSource src;
          src.mcts = ec.mcts;
          src.mcts->seed = derive_seed(pseed, {kMcts});
          const auto adapted =
              adapt_goals(model.model, env, goals, AdaptStrategy::Mcts, src, ec.library_size);
          for (std::size_t gi = 0; gi < goals.size(); ++gi) {
            const auto actor =
                train_q_agent(env, goals[gi], ec.q, derive_seed(pseed, {kActor, gi}));
            for (MaskKind kind : {MaskKind::Consecutive, MaskKind::NonConsecutive}) {
              for (std::size_t ri = 0; ri < kObservabilityRatios.size(); ++ri) {
                const std::uint64_t oseed =
                    derive_seed(pseed, {kObservation, gi, static_cast<std::uint64_t>(kind), ri});
                const double ratio = kObservabilityRatios[ri];
                const Trace obs = make_observation(actor, env, ec, oseed, kind, ratio, nullptr);
                const auto res = infer(model.model, adapted, obs, env, {ec.truncate_libraries});
                const bool ok = res.goal == goals[gi];
                correct += ok ? 1 : 0;
                ++total;
                Json rec = {{"base_goals", b}, {"active_goals", a}, {"seed", seed},
                            {"problem", p}, {"true_goal", to_json(goals[gi])},
                            {"predicted", to_json(res.goal)}, {"mask", to_string(kind)},
                            {"ratio", ratio}, {"correct", ok}};
                report.raw_log.push_back(rec.dump());
              }
            }
          }
        }
        cell_at(b, a).per_seed.push_back(total ? static_cast<double>(correct) / total : 0.0);
      }
    }
  }
  return report;
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "base_goals,active_goals,mean_accuracy,seeds\n";
  for (const auto& c : report.cells) {
    out << c.base_count << ',' << c.active_count << ',' << text_io::format_double(c.mean()) << ','
        << c.per_seed.size() << '\n';
  }
  return out.str();
}

bool monotone_with_slack(const std::vector<double>& values, bool increasing, double slack) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double step = values[i] - values[i - 1];
    if (increasing ? step < -slack : step > slack) return false;
  }
  return true;
}

}  // namespace graml
