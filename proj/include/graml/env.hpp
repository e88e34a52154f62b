#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "graml/random.hpp"

namespace graml {

struct State {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const State&, const State&) = default;
};

std::string to_string(State s);

// Fixed enumeration order; the numeric value is the action index used by
// Q-tables and the one-hot encoder. y grows downwards.
enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::size_t kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions{
    Action::Up, Action::Down, Action::Left, Action::Right};

constexpr std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }
Action action_from_index(std::size_t i);
std::string_view to_string(Action a);

enum class DoneReason { Running, GoalReached, Lava, Timeout };

std::string_view to_string(DoneReason r);

struct StepResult {
  State next_state;
  double reward = 0.0;
  bool done = false;
  DoneReason done_reason = DoneReason::Running;
};

struct RewardModel {
  double step_reward = -0.01;
  double goal_reward = 1.0;
  double lava_reward = -1.0;
  double gamma = 0.95;
};

enum class Cell : std::uint8_t { Free, Wall, Lava };

// Deterministic episodic grid MDP. Immutable once built; every query is a
// pure function of its arguments.
class GridEnv {
 public:
  // max_steps == 0 selects the default cap of 4 * width * height.
  GridEnv(std::string id, int width, int height, std::vector<Cell> cells,
          State start, RewardModel rewards = {}, int max_steps = 0);

  // Text layout: '#' wall, 'L' lava, '.' free, 'S' start (free). One row per
  // line, top row first.
  static GridEnv from_text(std::string_view text, std::string id = "custom",
                           RewardModel rewards = {}, int max_steps = 0);
  std::string to_text() const;

  const std::string& id() const { return id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  State start() const { return start_; }
  int max_steps() const { return max_steps_; }
  const RewardModel& rewards() const { return rewards_; }
  double gamma() const { return rewards_.gamma; }
  std::size_t num_cells() const { return cells_.size(); }

  bool in_bounds(State s) const {
    return s.x >= 0 && s.y >= 0 && s.x < width_ && s.y < height_;
  }
  Cell cell(State s) const { return cells_[index(s)]; }
  bool is_wall(State s) const { return cell(s) == Cell::Wall; }
  bool is_lava(State s) const { return cell(s) == Cell::Lava; }
  // In bounds and not a wall.
  bool is_valid(State s) const { return in_bounds(s) && !is_wall(s); }
  // Valid and lava-free: the cells an episode can pass through or end at.
  bool is_open(State s) const { return in_bounds(s) && cell(s) == Cell::Free; }

  std::size_t index(State s) const {
    return static_cast<std::size_t>(s.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(s.x);
  }
  State state_at(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width_)),
            static_cast<int>(index / static_cast<std::size_t>(width_))};
  }

  std::vector<State> open_cells() const;
  std::size_t count(Cell c) const;

  // One-cell move; bumping a wall leaves the state unchanged.
  State move(State s, Action a) const;

  StepResult step(State s, Action a, State goal, int t) const;

  // Moves whose target is neither a wall nor lava.
  std::vector<Action> safe_actions(State s) const;

  State initial_state(Rng& rng, int jitter_steps) const;

 private:
  std::string id_;
  int width_;
  int height_;
  std::vector<Cell> cells_;
  State start_;
  RewardModel rewards_;
  int max_steps_;
};

GridEnv make_simple_crossing(std::uint64_t seed);
GridEnv make_lava_crossing(std::uint64_t seed);

// "simple_crossing" or "lava_crossing".
GridEnv make_env(std::string_view name, std::uint64_t seed);

// Lava-avoiding BFS distances from `from`; -1 marks unreachable cells.
std::vector<int> shortest_distances(const GridEnv& env, State from);

}  // namespace graml

template <>
struct std::hash<graml::State> {
  std::size_t operator()(const graml::State& s) const noexcept {
    return std::hash<std::uint64_t>{}(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.x)) << 32) |
        static_cast<std::uint32_t>(s.y));
  }
};
