#include "graml/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "dynamics.hpp"
#include "graml/error.hpp"

namespace graml {

namespace {

constexpr std::int32_t kNone = -1;
// Search past the per-action budget, by at most this multiple, while no
// backed-up value at the root has seen the goal yet.
constexpr int kExtendFactor = 20;

struct Edge {
  std::uint32_t visits = 0;
  double value = 0.0;  // reward + discounted value of the successor
  bool reaches_goal = false;
};

struct Node {
  std::uint32_t cell = 0;
  std::uint32_t visits = 0;
  std::uint32_t rollouts = 0;
  double rollout_sum = 0.0;
  std::uint8_t num_actions = 0;
  std::array<std::uint8_t, kNumActions> actions{};
  std::array<Edge, kNumActions> edges{};
};

class Search {
 public:
  Search(const GridEnv& env, State goal, const MctsConfig& cfg)
      : env_(env),
        dyn_(env),
        cfg_(cfg),
        goal_cell_(static_cast<std::uint32_t>(env.index(goal))),
        rollout_depth_(cfg.rollout_depth > 0 ? cfg.rollout_depth
                                             : env.width() + env.height()),
        gamma_(env.gamma()),
        rng_(cfg.seed),
        lookup_(env.num_cells(), kNone),
        on_path_(env.num_cells(), 0) {}

  // Root action with the highest backed-up value after the search batch.
  std::size_t decide(std::uint32_t cell, std::int32_t t) {
    const std::int32_t root = node_at(cell);
    for (int i = 0; i < cfg_.iterations; ++i) iterate(root, t);
    const int extra = kExtendFactor * cfg_.iterations;
    for (int i = 0; i < extra && !best_edge(nodes_[static_cast<std::size_t>(root)]).second; ++i) {
      iterate(root, t);
    }
    const Node& n = nodes_[static_cast<std::size_t>(root)];
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n.num_actions; ++k) {
      const auto& e = n.edges[k];
      if (e.visits == 0) continue;
      if (e.value > best_value) {
        best_value = e.value;
        best = k;
      }
    }
    return n.actions[best];
  }

  std::uint32_t next_cell(std::uint32_t cell, std::size_t action) const {
    return dyn_.next[cell * kNumActions + action];
  }

 private:
  struct PathStep {
    std::int32_t node;
    std::uint8_t slot;
    double reward;
    std::int32_t child;  // kNone when the move ends the episode
    bool goal;
  };

  std::int32_t node_at(std::uint32_t cell) {
    auto& slot = lookup_[cell];
    if (slot != kNone) return slot;
    Node n;
    n.cell = cell;
    // Moves that leave the cell unchanged are never useful in a
    // deterministic grid, so they are not offered to the search.
    for (std::size_t a = 0; a < kNumActions; ++a) {
      if (next_cell(cell, a) != cell) n.actions[n.num_actions++] = static_cast<std::uint8_t>(a);
    }
    slot = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(n);
    return slot;
  }

  // Reward of entering `cell`, and whether the episode stops there.
  std::pair<double, bool> enter(std::uint32_t cell) const {
    const auto& rw = env_.rewards();
    if (dyn_.lava[cell]) return {rw.lava_reward, true};
    if (cell == goal_cell_) return {rw.goal_reward, true};
    return {rw.step_reward, false};
  }

  // Uniformly random playout over moves that change the cell and do not
  // enter lava; a cell with no such move ends the playout.
  double rollout(std::uint32_t cell, std::int32_t t) {
    double ret = 0.0;
    double discount = 1.0;
    const int depth = std::min(rollout_depth_, env_.max_steps() - t);
    for (int d = 0; d < depth; ++d) {
      std::array<std::uint32_t, kNumActions> moves{};
      std::size_t num_moves = 0;
      for (std::size_t a = 0; a < kNumActions; ++a) {
        const std::uint32_t n = next_cell(cell, a);
        if (n != cell && !dyn_.lava[n]) moves[num_moves++] = n;
      }
      if (num_moves == 0) break;
      const std::uint32_t n = moves[uniform_index(rng_, num_moves)];
      const auto [r, terminal] = enter(n);
      ret += discount * r;
      if (terminal) break;
      discount *= gamma_;
      cell = n;
    }
    return ret;
  }

  std::size_t select(const Node& n) {
    std::array<std::uint8_t, kNumActions> untried{};
    std::size_t num_untried = 0;
    for (std::size_t k = 0; k < n.num_actions; ++k) {
      if (n.edges[k].visits == 0) untried[num_untried++] = static_cast<std::uint8_t>(k);
    }
    if (num_untried > 0) return untried[uniform_index(rng_, num_untried)];
    const double log_n = std::log(static_cast<double>(std::max<std::uint32_t>(n.visits, 1)));
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n.num_actions; ++k) {
      const auto& e = n.edges[k];
      const double score = e.value + cfg_.exploration_c * std::sqrt(log_n / e.visits);
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    return best;
  }

  // One selection/expansion/rollout/backup pass. The dynamics are
  // stationary, so there is one node per cell and values are backed up with
  // max over tried edges (exact for a deterministic model). A path stops when
  // it revisits a cell or reaches an edge tried for the first time.
  void iterate(std::int32_t root, std::int32_t t) {
    path_.clear();
    ++stamp_;
    std::int32_t cur = root;
    on_path_[nodes_[static_cast<std::size_t>(root)].cell] = stamp_;
    while (true) {
      Node& n = nodes_[static_cast<std::size_t>(cur)];
      if (n.num_actions == 0 || t >= env_.max_steps()) break;
      const std::size_t k = select(n);
      const bool fresh = n.edges[k].visits == 0;
      const std::uint32_t cell = next_cell(n.cell, n.actions[k]);
      ++t;
      const auto [r, terminal] = enter(cell);
      if (terminal || t >= env_.max_steps()) {
        path_.push_back({cur, static_cast<std::uint8_t>(k), r, kNone, cell == goal_cell_});
        break;
      }
      const std::int32_t child = node_at(cell);
      path_.push_back({cur, static_cast<std::uint8_t>(k), r, child, false});
      Node& c = nodes_[static_cast<std::size_t>(child)];
      if (c.rollouts == 0 && c.visits == 0) {
        c.rollout_sum += rollout(cell, t);
        c.rollouts = 1;
        break;
      }
      if (fresh || on_path_[cell] == stamp_) break;
      on_path_[cell] = stamp_;
      cur = child;
    }
    for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
      Node& n = nodes_[static_cast<std::size_t>(it->node)];
      auto& e = n.edges[it->slot];
      e.value = it->reward;
      e.reaches_goal = it->goal;
      if (it->child != kNone) {
        const auto [v, seen] = best_edge(nodes_[static_cast<std::size_t>(it->child)]);
        e.value += gamma_ * v;
        e.reaches_goal = seen;
      }
      ++e.visits;
      ++n.visits;
    }
  }

  // Value of the best tried edge (or the mean rollout return of an
  // unexpanded node) and whether that value stems from reaching the goal.
  static std::pair<double, bool> best_edge(const Node& n) {
    double best = -std::numeric_limits<double>::infinity();
    bool seen = false;
    for (std::size_t k = 0; k < n.num_actions; ++k) {
      if (n.edges[k].visits > 0 && n.edges[k].value > best) {
        best = n.edges[k].value;
        seen = n.edges[k].reaches_goal;
      }
    }
    if (best > -std::numeric_limits<double>::infinity()) return {best, seen};
    if (n.rollouts == 0) return {0.0, false};
    return {n.rollout_sum / n.rollouts, false};
  }

  const GridEnv& env_;
  detail::Dynamics dyn_;
  MctsConfig cfg_;
  std::uint32_t goal_cell_;
  int rollout_depth_;
  double gamma_;
  Rng rng_;
  std::vector<std::int32_t> lookup_;
  std::vector<std::uint32_t> on_path_;
  std::uint32_t stamp_ = 0;
  std::vector<Node> nodes_;
  std::vector<PathStep> path_;
};

}  // namespace

Trace mcts_plan(const GridEnv& env, State goal, const MctsConfig& cfg) {
  return mcts_plan(env, goal, cfg, env.start());
}

Trace mcts_plan(const GridEnv& env, State goal, const MctsConfig& cfg, State start) {
  if (cfg.iterations <= 0) fail(ErrorKind::ContractViolation, "MCTS needs iterations > 0");
  if (!(cfg.exploration_c > 0.0)) {
    fail(ErrorKind::ContractViolation, "MCTS exploration constant must be positive");
  }
  if (!env.is_open(goal)) {
    fail(ErrorKind::ContractViolation, "goal " + to_string(goal) + " is not a free cell");
  }
  if (!env.is_open(start)) {
    fail(ErrorKind::ContractViolation, "start " + to_string(start) + " is not a free cell");
  }
  if (start == goal) fail(ErrorKind::ContractViolation, "start already is the goal");

  Search search(env, goal, cfg);
  Trace trace;
  trace.goal = goal;
  State s = start;
  for (int t = 0; t < env.max_steps(); ++t) {
    const auto cell = static_cast<std::uint32_t>(env.index(s));
    const Action a = action_from_index(search.decide(cell, t));
    trace.observations.push_back({s, a});
    const auto r = env.step(s, a, goal, t);
    if (r.done_reason == DoneReason::GoalReached) return trace;
    if (r.done) break;
    s = r.next_state;
  }
  fail(ErrorKind::PlanningFailure, "MCTS did not reach goal " + to_string(goal));
}

}  // namespace graml
