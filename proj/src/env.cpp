#include "graml/env.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "graml/error.hpp"

namespace graml {

std::string to_string(State s) {
  return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ")";
}

Action action_from_index(std::size_t i) {
  if (i >= kNumActions) {
    fail(ErrorKind::ContractViolation, "action index out of range: " + std::to_string(i));
  }
  return static_cast<Action>(i);
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
  }
  return "?";
}

std::string_view to_string(DoneReason r) {
  switch (r) {
    case DoneReason::Running: return "running";
    case DoneReason::GoalReached: return "goal";
    case DoneReason::Lava: return "lava";
    case DoneReason::Timeout: return "timeout";
  }
  return "?";
}

GridEnv::GridEnv(std::string id, int width, int height, std::vector<Cell> cells,
                 State start, RewardModel rewards, int max_steps)
    : id_(std::move(id)),
      width_(width),
      height_(height),
      cells_(std::move(cells)),
      start_(start),
      rewards_(rewards),
      max_steps_(max_steps > 0 ? max_steps : 4 * width * height) {
  require(width_ >= 3 && height_ >= 3, "grid must be at least 3x3");
  require(cells_.size() == static_cast<std::size_t>(width_ * height_),
          "cell count does not match grid dimensions");
  require(rewards_.gamma > 0.0 && rewards_.gamma < 1.0,
          "discount must lie in (0,1)");
  for (int x = 0; x < width_; ++x) {
    require(is_wall({x, 0}) && is_wall({x, height_ - 1}),
            "border cells must be walls");
  }
  for (int y = 0; y < height_; ++y) {
    require(is_wall({0, y}) && is_wall({width_ - 1, y}),
            "border cells must be walls");
  }
  require(is_open(start_), "start must be a free, lava-free cell");
}

GridEnv GridEnv::from_text(std::string_view text, std::string id,
                           RewardModel rewards, int max_steps) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) fail(ErrorKind::Parse, "empty layout");
  const int width = static_cast<int>(rows.front().size());
  const int height = static_cast<int>(rows.size());
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(width * height));
  State start{-1, -1};
  for (int y = 0; y < height; ++y) {
    if (static_cast<int>(rows[y].size()) != width) {
      fail(ErrorKind::Parse, "ragged layout row " + std::to_string(y));
    }
    for (int x = 0; x < width; ++x) {
      switch (rows[y][x]) {
        case '#': cells.push_back(Cell::Wall); break;
        case 'L': cells.push_back(Cell::Lava); break;
        case '.': cells.push_back(Cell::Free); break;
        case 'S':
          if (start.x >= 0) fail(ErrorKind::Parse, "layout has two starts");
          start = {x, y};
          cells.push_back(Cell::Free);
          break;
        default:
          fail(ErrorKind::Parse,
               std::string("unknown layout character '") + rows[y][x] + "'");
      }
    }
  }
  if (start.x < 0) fail(ErrorKind::Parse, "layout has no start");
  return GridEnv(std::move(id), width, height, std::move(cells), start,
                 rewards, max_steps);
}

std::string GridEnv::to_text() const {
  std::string out;
  out.reserve(static_cast<std::size_t>((width_ + 1) * height_));
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const State s{x, y};
      if (s == start_) {
        out += 'S';
        continue;
      }
      switch (cell(s)) {
        case Cell::Wall: out += '#'; break;
        case Cell::Lava: out += 'L'; break;
        case Cell::Free: out += '.'; break;
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<State> GridEnv::open_cells() const {
  std::vector<State> out;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i] == Cell::Free) out.push_back(state_at(i));
  }
  return out;
}

std::size_t GridEnv::count(Cell c) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), c));
}

State GridEnv::move(State s, Action a) const {
  State n = s;
  switch (a) {
    case Action::Up: --n.y; break;
    case Action::Down: ++n.y; break;
    case Action::Left: --n.x; break;
    case Action::Right: ++n.x; break;
  }
  if (!in_bounds(n) || is_wall(n)) return s;
  return n;
}

StepResult GridEnv::step(State s, Action a, State goal, int t) const {
  if (!is_valid(s)) {
    fail(ErrorKind::ContractViolation, "step from invalid state " + to_string(s));
  }
  if (index_of(a) >= kNumActions) fail(ErrorKind::ContractViolation, "invalid action");
  if (t < 0 || t >= max_steps_) {
    fail(ErrorKind::ContractViolation, "step count outside [0, max_steps)");
  }

  StepResult r;
  r.next_state = move(s, a);
  if (is_lava(r.next_state)) {
    r.reward = rewards_.lava_reward;
    r.done = true;
    r.done_reason = DoneReason::Lava;
  } else if (r.next_state == goal) {
    r.reward = rewards_.goal_reward;
    r.done = true;
    r.done_reason = DoneReason::GoalReached;
  } else {
    r.reward = rewards_.step_reward;
    if (t + 1 >= max_steps_) {
      r.done = true;
      r.done_reason = DoneReason::Timeout;
    }
  }
  return r;
}

std::vector<Action> GridEnv::safe_actions(State s) const {
  std::vector<Action> out;
  for (Action a : kAllActions) {
    const State n = move(s, a);
    if (n != s && !is_lava(n)) out.push_back(a);
  }
  return out;
}

State GridEnv::initial_state(Rng& rng, int jitter_steps) const {
  require(jitter_steps >= 0, "jitter_steps must be non-negative");
  State s = start_;
  for (int i = 0; i < jitter_steps; ++i) {
    const auto moves = safe_actions(s);
    if (moves.empty()) break;
    s = move(s, moves[uniform_index(rng, moves.size())]);
  }
  return s;
}

namespace {

std::vector<Cell> bordered(int width, int height) {
  std::vector<Cell> cells(static_cast<std::size_t>(width * height), Cell::Free);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x == 0 || y == 0 || x == width - 1 || y == height - 1) {
        cells[static_cast<std::size_t>(y * width + x)] = Cell::Wall;
      }
    }
  }
  return cells;
}

int pick(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

// Four rooms formed by a vertical and a horizontal wall crossing at the
// centre. Each wall half has one seed-chosen gap, so the far room is
// reachable through two different doors.
GridEnv make_simple_crossing(std::uint64_t seed) {
  constexpr int kSize = 13;
  constexpr int kMid = 6;
  Rng rng(derive_seed(seed, {0x5c}));
  auto cells = bordered(kSize, kSize);
  auto at = [&](int x, int y) -> Cell& {
    return cells[static_cast<std::size_t>(y * kSize + x)];
  };
  for (int i = 1; i < kSize - 1; ++i) {
    at(kMid, i) = Cell::Wall;
    at(i, kMid) = Cell::Wall;
  }
  at(kMid, pick(rng, 1, kMid - 1)) = Cell::Free;
  at(kMid, pick(rng, kMid + 1, kSize - 2)) = Cell::Free;
  at(pick(rng, 1, kMid - 1), kMid) = Cell::Free;
  at(pick(rng, kMid + 1, kSize - 2), kMid) = Cell::Free;
  return GridEnv("simple_crossing:" + std::to_string(seed), kSize, kSize,
                 std::move(cells), {1, 1});
}

// Two vertical lava rivers, each with one seed-chosen safe crossing.
GridEnv make_lava_crossing(std::uint64_t seed) {
  constexpr int kSize = 9;
  constexpr std::array<int, 2> kRivers{3, 6};
  Rng rng(derive_seed(seed, {0x1a}));
  auto cells = bordered(kSize, kSize);
  for (int x : kRivers) {
    const int gap = pick(rng, 1, kSize - 2);
    for (int y = 1; y < kSize - 1; ++y) {
      if (y != gap) cells[static_cast<std::size_t>(y * kSize + x)] = Cell::Lava;
    }
  }
  return GridEnv("lava_crossing:" + std::to_string(seed), kSize, kSize,
                 std::move(cells), {1, 1});
}

GridEnv make_env(std::string_view name, std::uint64_t seed) {
  if (name == "simple_crossing") return make_simple_crossing(seed);
  if (name == "lava_crossing") return make_lava_crossing(seed);
  fail(ErrorKind::Config, "unknown environment '" + std::string(name) + "'");
}

std::vector<int> shortest_distances(const GridEnv& env, State from) {
  std::vector<int> dist(env.num_cells(), -1);
  if (!env.is_open(from)) return dist;
  std::deque<State> frontier{from};
  dist[env.index(from)] = 0;
  while (!frontier.empty()) {
    const State s = frontier.front();
    frontier.pop_front();
    for (Action a : kAllActions) {
      const State n = env.move(s, a);
      if (env.is_lava(n) || dist[env.index(n)] >= 0) continue;
      dist[env.index(n)] = dist[env.index(s)] + 1;
      frontier.push_back(n);
    }
  }
  return dist;
}

}  // namespace graml
