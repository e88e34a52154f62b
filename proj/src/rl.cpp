#include "graml/rl.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "dynamics.hpp"
#include "graml/error.hpp"
#include "graml/text_io.hpp"

namespace graml {

QTable::QTable(int width, int height, State goal)
    : width_(width),
      height_(height),
      goal_(goal),
      values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                  kNumActions,
              0.0) {}

ActionValues QTable::values(State s) const {
  ActionValues out{};
  const auto base = slot(s, Action::Up);
  std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(base), kNumActions, out.begin());
  return out;
}

namespace {

Action argmax_lowest(const ActionValues& v) {
  return action_from_index(static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin()));
}

}  // namespace

Action QTable::greedy(State s) const { return argmax_lowest(values(s)); }

GcQTable::GcQTable(int width, int height, std::vector<State> goal_set)
    : width_(width), height_(height), goal_set_(std::move(goal_set)) {
  values_.assign(goal_set_.size() * cells() * kNumActions, 0.0);
}

std::optional<std::size_t> GcQTable::goal_index(State goal) const {
  const auto it = std::find(goal_set_.begin(), goal_set_.end(), goal);
  if (it == goal_set_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - goal_set_.begin());
}

ActionValues GcQTable::values(std::size_t goal, State s) const {
  ActionValues out{};
  const auto base = slot(goal, s, Action::Up);
  std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(base), kNumActions, out.begin());
  return out;
}

Action GcQTable::greedy(std::size_t goal, State s) const {
  return argmax_lowest(values(goal, s));
}

namespace {

using detail::Dynamics;

double epsilon_at(const QHyperParams& hp, std::uint64_t episode) {
  if (hp.episodes <= 1) return hp.epsilon_end;
  const double frac = static_cast<double>(episode) / static_cast<double>(hp.episodes - 1);
  return hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * frac;
}

// Greedy with uniform tie-breaking, for the behaviour policy only.
std::size_t behaviour_greedy(const double* q, Rng& rng) {
  const double best = *std::max_element(q, q + kNumActions);
  std::array<std::size_t, kNumActions> ties{};
  std::size_t n = 0;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (q[a] == best) ties[n++] = a;
  }
  return n == 1 ? ties[0] : ties[uniform_index(rng, n)];
}

std::size_t select_action(const double* q, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_index(rng, kNumActions);
  return behaviour_greedy(q, rng);
}

double max4(const double* q) { return std::max(std::max(q[0], q[1]), std::max(q[2], q[3])); }

void check_goal(const GridEnv& env, State goal) {
  if (!env.is_open(goal)) {
    fail(ErrorKind::ContractViolation,
         "goal " + to_string(goal) + " is not a free lava-free cell");
  }
}

}  // namespace

QTable train_q_agent(const GridEnv& env, State goal, const QHyperParams& hp,
                     std::uint64_t seed) {
  check_goal(env, goal);
  require(hp.alpha > 0.0 && hp.alpha <= 1.0, "alpha must lie in (0,1]");
  QTable q(env.width(), env.height(), goal);
  if (hp.episodes == 0) return q;

  const Dynamics dyn(env);
  const auto goal_cell = static_cast<std::uint32_t>(env.index(goal));
  std::vector<std::uint32_t> starts;
  std::copy_if(dyn.open.begin(), dyn.open.end(), std::back_inserter(starts),
               [&](std::uint32_t c) { return c != goal_cell; });
  if (starts.empty()) fail(ErrorKind::TrainingFailure, "no start cell besides the goal");

  const auto& rw = env.rewards();
  double* values = q.raw().data();
  Rng rng(seed);
  std::uint64_t steps = 0;
  for (std::uint64_t ep = 0; ep < hp.episodes; ++ep) {
    const double eps = epsilon_at(hp, ep);
    std::uint32_t s = starts[uniform_index(rng, starts.size())];
    for (int t = 0; t < env.max_steps(); ++t) {
      double* qs = values + s * kNumActions;
      const std::size_t a = select_action(qs, eps, rng);
      const std::uint32_t n = dyn.next[s * kNumActions + a];
      double target = 0.0;
      bool terminal = true;
      if (dyn.lava[n]) {
        target = rw.lava_reward;
      } else if (n == goal_cell) {
        target = rw.goal_reward;
      } else {
        target = rw.step_reward + rw.gamma * max4(values + n * kNumActions);
        terminal = false;
      }
      qs[a] += hp.alpha * (target - qs[a]);
      ++steps;
      if (terminal) break;
      s = n;
    }
  }
  q.set_trained_steps(steps);

  const double rate = greedy_success_rate(env, q, hp.eval_episodes, hp.eval_jitter,
                                          derive_seed(seed, {0xe7a1}));
  if (rate < hp.min_success_rate) {
    fail(ErrorKind::TrainingFailure,
         "greedy policy for goal " + to_string(goal) + " succeeded on " +
             text_io::format_double(rate) + " of evaluation episodes");
  }
  return q;
}

GcQTable train_gc_q_agent(const GridEnv& env, const std::vector<State>& goal_set,
                          const QHyperParams& hp, std::uint64_t seed) {
  require(!goal_set.empty(), "goal set must not be empty");
  for (State g : goal_set) check_goal(env, g);
  require(hp.alpha > 0.0 && hp.alpha <= 1.0, "alpha must lie in (0,1]");
  GcQTable q(env.width(), env.height(), goal_set);
  if (hp.episodes == 0) return q;

  const Dynamics dyn(env);
  const std::size_t cells = env.num_cells();
  std::vector<std::uint32_t> goal_cells;
  for (State g : goal_set) goal_cells.push_back(static_cast<std::uint32_t>(env.index(g)));

  const auto& rw = env.rewards();
  double* values = q.raw().data();
  Rng rng(seed);
  std::uint64_t steps = 0;
  for (std::uint64_t ep = 0; ep < hp.episodes; ++ep) {
    const double eps = epsilon_at(hp, ep);
    const std::size_t g = uniform_index(rng, goal_set.size());
    std::uint32_t s = goal_cells[g];
    while (s == goal_cells[g]) s = dyn.open[uniform_index(rng, dyn.open.size())];
    for (int t = 0; t < env.max_steps(); ++t) {
      const std::size_t a = select_action(values + (g * cells + s) * kNumActions, eps, rng);
      const std::uint32_t n = dyn.next[s * kNumActions + a];
      for (std::size_t k = 0; k < goal_cells.size(); ++k) {
        if (s == goal_cells[k]) continue;
        double* qs = values + (k * cells + s) * kNumActions;
        double target = 0.0;
        if (dyn.lava[n]) {
          target = rw.lava_reward;
        } else if (n == goal_cells[k]) {
          target = rw.goal_reward;
        } else {
          target = rw.step_reward + rw.gamma * max4(values + (k * cells + n) * kNumActions);
        }
        qs[a] += hp.alpha * (target - qs[a]);
      }
      ++steps;
      if (dyn.lava[n] || n == goal_cells[g]) break;
      s = n;
    }
  }
  q.set_trained_steps(steps);

  std::string failures;
  for (std::size_t k = 0; k < goal_set.size(); ++k) {
    const double rate = greedy_success_rate(env, q, k, hp.eval_episodes, hp.eval_jitter,
                                            derive_seed(seed, {0xe7a1, k}));
    if (rate < hp.min_success_rate) {
      failures += " " + to_string(goal_set[k]) + "=" + text_io::format_double(rate);
    }
  }
  if (!failures.empty()) {
    fail(ErrorKind::TrainingFailure, "goal-conditioned policy below success rate for" + failures);
  }
  return q;
}

namespace {

template <typename GreedyFn>
double greedy_success(const GridEnv& env, State goal, GreedyFn greedy, int episodes,
                      int jitter, std::uint64_t seed) {
  if (episodes <= 0) return 1.0;
  Rng rng(seed);
  int successes = 0;
  for (int i = 0; i < episodes; ++i) {
    const int j = std::uniform_int_distribution<int>(0, std::max(jitter, 0))(rng);
    State s = env.initial_state(rng, j);
    if (s == goal) {
      ++successes;
      continue;
    }
    for (int t = 0; t < env.max_steps(); ++t) {
      const auto r = env.step(s, greedy(s), goal, t);
      if (r.done) {
        if (r.done_reason == DoneReason::GoalReached) ++successes;
        break;
      }
      s = r.next_state;
    }
  }
  return static_cast<double>(successes) / static_cast<double>(episodes);
}

}  // namespace

double greedy_success_rate(const GridEnv& env, const QTable& q, int episodes, int jitter,
                           std::uint64_t seed) {
  return greedy_success(env, q.goal(), [&](State s) { return q.greedy(s); }, episodes,
                        jitter, seed);
}

double greedy_success_rate(const GridEnv& env, const GcQTable& q, std::size_t goal,
                           int episodes, int jitter, std::uint64_t seed) {
  require(goal < q.goal_set().size(), "goal index out of range");
  return greedy_success(env, q.goal_set()[goal], [&](State s) { return q.greedy(goal, s); },
                        episodes, jitter, seed);
}

ActionValues softmax(const ActionValues& q, double temperature) {
  if (!(temperature > 0.0)) {
    fail(ErrorKind::ContractViolation, "softmax temperature must be positive");
  }
  const double m = *std::max_element(q.begin(), q.end());
  ActionValues p{};
  double z = 0.0;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    p[a] = std::exp((q[a] - m) / temperature);
    z += p[a];
  }
  for (auto& v : p) v /= z;
  return p;
}

namespace {

template <typename ValuesFn>
Trace rollout(const GridEnv& env, State goal, ValuesFn values_of, std::uint64_t seed,
              const RolloutOptions& opts) {
  check_goal(env, goal);
  require(opts.temperature > 0.0, "rollout temperature must be positive");
  Rng rng(seed);
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    State s = env.initial_state(rng, opts.jitter_steps);
    if (s == goal) continue;
    Trace trace;
    trace.goal = goal;
    for (int t = 0; t < env.max_steps(); ++t) {
      const auto p = softmax(values_of(s), opts.temperature);
      const double u = uniform01(rng);
      std::size_t a = 0;
      double acc = p[0];
      while (a + 1 < kNumActions && u >= acc) acc += p[++a];
      const Action act = action_from_index(a);
      trace.observations.push_back({s, act});
      const auto r = env.step(s, act, goal, t);
      if (r.done) {
        if (r.done_reason == DoneReason::GoalReached) return trace;
        break;
      }
      s = r.next_state;
    }
  }
  fail(ErrorKind::GenerationFailure,
       "no goal-reaching rollout for " + to_string(goal) + " within " +
           std::to_string(opts.max_attempts) + " attempts");
}

}  // namespace

Trace stochastic_rollout(const QTable& policy, const GridEnv& env, std::uint64_t seed,
                         const RolloutOptions& opts) {
  return rollout(env, policy.goal(), [&](State s) { return policy.values(s); }, seed, opts);
}

Trace stochastic_rollout(const GcQTable& policy, State goal, const GridEnv& env,
                         std::uint64_t seed, const RolloutOptions& opts) {
  const auto g = policy.goal_index(goal);
  if (!g) {
    fail(ErrorKind::GenerationFailure,
         "goal " + to_string(goal) + " is outside the goal-conditioned policy's goal set");
  }
  return rollout(env, goal, [&](State s) { return policy.values(*g, s); }, seed, opts);
}

namespace {

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); i += kNumActions) {
    for (std::size_t a = 0; a < kNumActions; ++a) {
      out << (a ? " " : "") << text_io::format_double(values[i + a]);
    }
    out << '\n';
  }
}

void read_values(text_io::TokenReader& in, std::span<double> values) {
  for (auto& v : values) v = in.next_double();
}

}  // namespace

void save_qtable(std::ostream& out, const QTable& q) {
  out << "graml-qtable 1\n";
  out << "goal " << q.goal().x << ' ' << q.goal().y << '\n';
  out << "dims " << q.width() << ' ' << q.height() << ' ' << kNumActions << '\n';
  out << "trained_steps " << q.trained_steps() << '\n';
  out << "values\n";
  write_values(out, q.raw());
}

QTable load_qtable(std::istream& in) {
  text_io::TokenReader r(in);
  r.expect("graml-qtable");
  r.expect("1");
  r.expect("goal");
  State goal;
  goal.x = static_cast<int>(r.next_int());
  goal.y = static_cast<int>(r.next_int());
  r.expect("dims");
  const auto w = static_cast<int>(r.next_int());
  const auto h = static_cast<int>(r.next_int());
  if (r.next_int() != static_cast<long long>(kNumActions)) {
    fail(ErrorKind::Parse, "unsupported action count in Q-table");
  }
  if (w <= 0 || h <= 0) fail(ErrorKind::Parse, "bad Q-table dimensions");
  r.expect("trained_steps");
  QTable q(w, h, goal);
  q.set_trained_steps(static_cast<std::uint64_t>(r.next_int()));
  r.expect("values");
  read_values(r, q.raw());
  return q;
}

void save_gc_qtable(std::ostream& out, const GcQTable& q) {
  out << "graml-gcqtable 1\n";
  out << "dims " << q.width() << ' ' << q.height() << ' ' << kNumActions << '\n';
  out << "trained_steps " << q.trained_steps() << '\n';
  out << "goals " << q.goal_set().size() << '\n';
  for (State g : q.goal_set()) out << g.x << ' ' << g.y << '\n';
  out << "values\n";
  write_values(out, q.raw());
}

GcQTable load_gc_qtable(std::istream& in) {
  text_io::TokenReader r(in);
  r.expect("graml-gcqtable");
  r.expect("1");
  r.expect("dims");
  const auto w = static_cast<int>(r.next_int());
  const auto h = static_cast<int>(r.next_int());
  if (r.next_int() != static_cast<long long>(kNumActions)) {
    fail(ErrorKind::Parse, "unsupported action count in Q-table");
  }
  if (w <= 0 || h <= 0) fail(ErrorKind::Parse, "bad Q-table dimensions");
  r.expect("trained_steps");
  const auto steps = static_cast<std::uint64_t>(r.next_int());
  r.expect("goals");
  const auto n = r.next_int();
  if (n <= 0) fail(ErrorKind::Parse, "bad goal count");
  std::vector<State> goals(static_cast<std::size_t>(n));
  for (auto& g : goals) {
    g.x = static_cast<int>(r.next_int());
    g.y = static_cast<int>(r.next_int());
  }
  GcQTable q(w, h, std::move(goals));
  q.set_trained_steps(steps);
  r.expect("values");
  read_values(r, q.raw());
  return q;
}

}  // namespace graml
