#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "graml/baseline.hpp"
#include "graml/dataset.hpp"
#include "graml/metric.hpp"
#include "graml/recognizer.hpp"

namespace graml {

enum class Algorithm { BgGraml, BgGramlExpert, GcGraml, Graql };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

// Farthest-point sampling over lava-free BFS distances, anchored at the start
// cell; ties broken by the seeded generator.
std::vector<State> choose_base_goals(const GridEnv& env, std::size_t n, std::uint64_t seed);

// Random goal set: free cells at BFS distance >= min_separation from the
// start, pairwise L1 distance >= min_separation, none in `excluded`.
std::vector<State> sample_goal_set(const GridEnv& env, std::size_t n,
                                   const std::vector<State>& excluded, std::uint64_t seed,
                                   int min_separation = 3);

// Shortest lava-free path as a trace (ties: lowest action index).
Trace shortest_path_trace(const GridEnv& env, State start, State goal);

struct OdgrProblem {
  std::vector<State> base_goals;
  std::vector<std::vector<State>> goal_sets;
};

struct ExperimentConfig {
  std::vector<std::string> envs = {"simple_crossing"};
  std::uint64_t layout_seed = 0;
  std::vector<Algorithm> algorithms = {Algorithm::BgGraml, Algorithm::GcGraml, Algorithm::Graql};
  std::size_t base_goals = 20;
  // Manually chosen base goals; when non-empty they replace farthest-point
  // sampling and `base_goals` is ignored (single-environment runs only).
  std::vector<State> base_goal_list;
  std::size_t problems = 5;
  std::size_t active_goals = 5;
  // When non-empty these replace sampling (single-environment runs only).
  std::vector<std::vector<State>> goal_sets;
  std::size_t library_size = 1;
  bool truncate_libraries = false;
  std::size_t traces_per_goal = 50;
  std::size_t pairs = 10'000;
  double balance = 0.5;
  int dataset_jitter = 2;
  double dataset_temperature = kDatasetTemperature;
  double observation_temperature = kSuboptimalTemperature;
  int observation_jitter = 2;
  double graql_temperature = kSuboptimalTemperature;
  // GRAQL adaptation taking longer than this counts as a failed phase.
  double graql_timeout = 1800.0;
  TrainConfig train = {.encoding = Encoding::Coordinates};
  QHyperParams q;
  QHyperParams gc_q;
  MctsConfig mcts;
  std::uint64_t seed = 0;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// Seven report columns: consecutive and non-consecutive at 30/50/70% plus a
// pooled 100% column.
inline constexpr std::size_t kReportColumns = 7;
std::string_view column_name(std::size_t column);
std::size_t column_of(MaskKind kind, double ratio);

struct CellStats {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<double> per_problem;  // accuracy of each goal set

  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
  double stddev() const;
};

struct PhaseTimings {
  std::map<std::string, double> domain_learning;             // per algorithm
  std::map<std::string, std::vector<double>> goal_adaptation;  // per goal set
  std::map<std::string, std::vector<double>> inference;        // per phase
};

// One domain-learning run's outputs kept for later analysis.
struct LearnedDomain {
  std::string env_id;
  std::vector<State> base_goals;
  MetricModel bg_model;
  double bg_heldout_accuracy = 0.0;
  double bg_train_seconds = 0.0;
};

struct AccuracyReport {
  // env id (or "average") -> algorithm -> column
  std::map<std::string, std::map<std::string, std::array<CellStats, kReportColumns>>> cells;
  std::map<std::string, PhaseTimings> timings;  // per env id
  std::vector<std::string> raw_log;             // one JSON record per inference phase
  std::vector<std::string> errors;
  std::vector<LearnedDomain> domains;

  std::size_t phases() const { return raw_log.size(); }
};

AccuracyReport run_odgr_experiment(const ExperimentConfig& cfg);

struct GcLearnedDomain {
  LearnedDomain domain;
  GcQTable policy;
};

// BG-GRAML domain learning alone: per-base-goal agents, rollouts, pairs, training.
LearnedDomain learn_bg_domain(const GridEnv& env, const std::vector<State>& base_goals,
                              const ExperimentConfig& cfg, std::uint64_t seed);
// GC-GRAML domain learning: one goal-conditioned agent, rollouts to the base goals.
GcLearnedDomain learn_gc_domain(const GridEnv& env, const std::vector<State>& base_goals,
                                const ExperimentConfig& cfg, std::uint64_t seed);

// One row per env and algorithm, then mean and std per column.
std::string accuracy_csv(const AccuracyReport& report);
std::string timings_json(const AccuracyReport& report);
std::string raw_log_text(const AccuracyReport& report);

// Recomputes correct/total per cell from the raw log.
std::map<std::string, std::array<CellStats, kReportColumns>> tally_raw_log(
    const std::vector<std::string>& raw_log, const std::string& env_id);

using Matrix = std::vector<std::vector<double>>;

struct ConfusionMatrices {
  Matrix trace_similarity;      // normalized edit overlap of state sequences
  Matrix embedding_similarity;  // averaged similarity of probe i to library j
};

// 1 - Levenshtein(a, b) / max(|a|, |b|) over the state sequences.
double trace_overlap(const Trace& a, const Trace& b);

ConfusionMatrices emit_confusion_matrices(const AdaptedState& adapted, const MetricModel& model,
                                          const std::vector<Trace>& probes, const GridEnv& env);
std::string matrix_csv(const Matrix& m);

struct SweepConfig {
  ExperimentConfig base;  // env, hyperparameters; algorithms forced to BG-GRAML
  std::vector<std::size_t> base_counts = {3, 5, 10, 20};
  std::vector<std::size_t> active_counts = {3, 5, 7, 9};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
};

struct SweepCell {
  std::size_t base_count = 0;
  std::size_t active_count = 0;
  std::vector<double> per_seed;  // accuracy pooled over all phases of that seed

  double mean() const;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::vector<std::string> raw_log;

  const SweepCell& at(std::size_t base_count, std::size_t active_count) const;
  // Means over the other axis.
  std::vector<double> base_marginals(const SweepConfig& cfg) const;
  std::vector<double> active_marginals(const SweepConfig& cfg) const;
};

SweepReport sweep_goal_counts(const SweepConfig& cfg);
std::string sweep_csv(const SweepReport& report);

// True when each value is at least the previous one minus `slack`
// (`increasing`), or at most the previous one plus `slack`.
bool monotone_with_slack(const std::vector<double>& values, bool increasing, double slack);

}  // namespace graml
