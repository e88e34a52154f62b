#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graml/env.hpp"
#include "graml/trace.hpp"

namespace graml {

using ActionValues = std::array<double, kNumActions>;

struct QHyperParams {
  double alpha = 0.1;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  // Zero episodes returns the untrained (all-zero) table without evaluation.
  std::uint64_t episodes = 50'000;
  // Greedy evaluation after training, from jittered starts.
  int eval_episodes = 100;
  int eval_jitter = 4;
  double min_success_rate = 0.95;
};

// Dense per-cell action values for one goal. Wall cells keep zero rows and
// are never visited.
class QTable {
 public:
  QTable(int width, int height, State goal);

  int width() const { return width_; }
  int height() const { return height_; }
  State goal() const { return goal_; }
  std::uint64_t trained_steps() const { return trained_steps_; }
  void set_trained_steps(std::uint64_t n) { trained_steps_ = n; }

  bool contains(State s) const {
    return s.x >= 0 && s.y >= 0 && s.x < width_ && s.y < height_;
  }
  ActionValues values(State s) const;
  double& at(State s, Action a) { return values_[slot(s, a)]; }
  double at(State s, Action a) const { return values_[slot(s, a)]; }
  // Lowest-index action among the maxima.
  Action greedy(State s) const;

  std::span<const double> raw() const { return values_; }
  std::span<double> raw() { return values_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t slot(State s, Action a) const {
    return (static_cast<std::size_t>(s.y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(s.x)) * kNumActions + index_of(a);
  }

  int width_;
  int height_;
  State goal_;
  std::uint64_t trained_steps_ = 0;
  std::vector<double> values_;
};

// Goal-conditioned table: one dense value block per goal in `goal_set`.
class GcQTable {
 public:
  GcQTable(int width, int height, std::vector<State> goal_set);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<State>& goal_set() const { return goal_set_; }
  std::optional<std::size_t> goal_index(State goal) const;
  std::uint64_t trained_steps() const { return trained_steps_; }
  void set_trained_steps(std::uint64_t n) { trained_steps_ = n; }

  ActionValues values(std::size_t goal, State s) const;
  double& at(std::size_t goal, State s, Action a) { return values_[slot(goal, s, a)]; }
  double at(std::size_t goal, State s, Action a) const { return values_[slot(goal, s, a)]; }
  Action greedy(std::size_t goal, State s) const;

  std::span<const double> raw() const { return values_; }
  std::span<double> raw() { return values_; }

  friend bool operator==(const GcQTable&, const GcQTable&) = default;

 private:
  std::size_t cells() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t slot(std::size_t goal, State s, Action a) const {
    return ((goal * cells()) +
            static_cast<std::size_t>(s.y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(s.x)) * kNumActions + index_of(a);
  }

  int width_;
  int height_;
  std::vector<State> goal_set_;
  std::uint64_t trained_steps_ = 0;
  std::vector<double> values_;
};

// Q-learning with exploring starts (uniform over open cells) and a linearly
// annealed epsilon-greedy behaviour policy. Throws TrainingFailure when the
// greedy policy misses `hp.min_success_rate`.
QTable train_q_agent(const GridEnv& env, State goal, const QHyperParams& hp,
                     std::uint64_t seed);

// Each episode pursues a goal drawn uniformly from `goal_set`; every
// transition updates the values of all goals in the set.
GcQTable train_gc_q_agent(const GridEnv& env, const std::vector<State>& goal_set,
                          const QHyperParams& hp, std::uint64_t seed);

// Fraction of greedy episodes from jittered starts that reach the goal.
double greedy_success_rate(const GridEnv& env, const QTable& q, int episodes,
                           int jitter, std::uint64_t seed);
double greedy_success_rate(const GridEnv& env, const GcQTable& q, std::size_t goal,
                           int episodes, int jitter, std::uint64_t seed);

// Softmax over action values with the given temperature; sums to one.
ActionValues softmax(const ActionValues& q, double temperature);

// Q-value gaps between neighbouring actions are about 0.01 to 0.05 on these
// layouts, so useful temperatures sit at that scale.
inline constexpr double kDatasetTemperature = 0.01;
inline constexpr double kSuboptimalTemperature = 0.02;

struct RolloutOptions {
  double temperature = kDatasetTemperature;
  int jitter_steps = 0;
  int max_attempts = 50;
};

// Samples actions from softmax(Q/temperature) until the goal is reached.
// Attempts ending in lava or timeout are discarded; GenerationFailure once
// `max_attempts` is exhausted.
Trace stochastic_rollout(const QTable& policy, const GridEnv& env,
                         std::uint64_t seed, const RolloutOptions& opts);
Trace stochastic_rollout(const GcQTable& policy, State goal, const GridEnv& env,
                         std::uint64_t seed, const RolloutOptions& opts);

// Structured text checkpoints (goal, dims, row-major values).
void save_qtable(std::ostream& out, const QTable& q);
QTable load_qtable(std::istream& in);
void save_gc_qtable(std::ostream& out, const GcQTable& q);
GcQTable load_gc_qtable(std::istream& in);

}  // namespace graml
