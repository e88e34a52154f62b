#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "graml/error.hpp"
#include "graml/rl.hpp"
#include "oracles.hpp"

using namespace graml;

namespace {

GridEnv empty_5x5() {
  return GridEnv::from_text(
      "#####\n"
      "#S..#\n"
      "#...#\n"
      "#...#\n"
      "#####\n");
}

QHyperParams quick(std::uint64_t episodes = 3000) {
  QHyperParams hp;
  hp.episodes = episodes;
  return hp;
}

int greedy_length(const GridEnv& env, const QTable& q) {
  State s = env.start();
  for (int t = 0; t < env.max_steps(); ++t) {
    const auto r = env.step(s, q.greedy(s), q.goal(), t);
    if (r.done_reason == DoneReason::GoalReached) return t + 1;
    if (r.done) return -1;
    s = r.next_state;
  }
  return -1;
}

}  // namespace

TEST(QLearning, GreedyPathMatchesBfsOn5x5) {
  const auto env = empty_5x5();
  const auto q = train_q_agent(env, {3, 3}, quick(), 1);
  EXPECT_EQ(greedy_length(env, q), oracle::bfs_distance(oracle::parse(env.to_text()), 1, 1, 3, 3));
  EXPECT_EQ(greedy_length(env, q), 4);
}

TEST(QLearning, ZeroEpisodesGivesZeroTable) {
  const auto q = train_q_agent(empty_5x5(), {3, 3}, quick(0), 1);
  for (double v : q.raw()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(q.trained_steps(), 0u);
}

TEST(QLearning, Deterministic) {
  const auto env = make_simple_crossing(0);
  const auto a = train_q_agent(env, {11, 11}, quick(5000), 9);
  const auto b = train_q_agent(env, {11, 11}, quick(5000), 9);
  EXPECT_TRUE(a == b);
}

TEST(QLearning, ValuesStayFinite) {
  const auto q = train_q_agent(make_lava_crossing(0), {7, 7}, QHyperParams{}, 3);
  for (double v : q.raw()) EXPECT_TRUE(std::isfinite(v));
}

TEST(QLearning, MeetsSuccessCriterionOnBothEnvironments) {
  for (const auto& env : {make_simple_crossing(0), make_lava_crossing(0)}) {
    const State goal{env.width() - 2, env.height() - 2};
    const auto q = train_q_agent(env, goal, QHyperParams{}, 5);
    EXPECT_GE(greedy_success_rate(env, q, 100, 4, 99), 0.95);
  }
}

TEST(QLearning, InvalidGoalRejected) {
  EXPECT_THROW(train_q_agent(empty_5x5(), {0, 0}, quick(), 1), Error);
}

TEST(QLearning, UnreachableGoalIsTrainingFailure) {
  const auto env = GridEnv::from_text(
      "#######\n"
      "#S.#..#\n"
      "#..#..#\n"
      "#######\n");
  try {
    train_q_agent(env, {5, 2}, quick(500), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TrainingFailure);
  }
}

TEST(GcQLearning, SingleGoalMatchesSuccessCriterion) {
  const auto env = empty_5x5();
  const auto gc = train_gc_q_agent(env, {{3, 3}}, quick(), 2);
  EXPECT_GE(greedy_success_rate(env, gc, 0, 50, 2, 4), 0.95);
}

TEST(GcQLearning, TwentyGoalsAllReached) {
  const auto env = make_simple_crossing(0);
  const auto g = oracle::parse(env.to_text());
  std::vector<State> goals;
  for (State s : env.open_cells()) {
    if (goals.size() == 20) break;
    if ((s.x * 7 + s.y * 3) % 4 == 0 && s != env.start()) goals.push_back(s);
  }
  ASSERT_EQ(goals.size(), 20u);
  for (State s : goals) ASSERT_GT(oracle::bfs_distance(g, 1, 1, s.x, s.y), 0);
  QHyperParams hp;
  hp.episodes = 20'000;
  const auto gc = train_gc_q_agent(env, goals, hp, 11);
  for (std::size_t i = 0; i < goals.size(); ++i) {
    EXPECT_GE(greedy_success_rate(env, gc, i, 50, 2, 5), 0.95) << to_string(goals[i]);
  }
}

TEST(GcQLearning, ConditioningChangesPolicy) {
  const auto env = make_simple_crossing(0);
  const auto gc = train_gc_q_agent(env, {{11, 1}, {1, 11}}, quick(5000), 3);
  int differing = 0;
  for (State s : env.open_cells()) differing += gc.greedy(0, s) != gc.greedy(1, s);
  EXPECT_GT(differing, 0);
}

TEST(Softmax, SumsToOneAndKeepsArgmax) {
  const ActionValues q = {0.3, -1.2, 0.9, 0.85};
  for (double temp : {0.001, 0.02, 0.5, 1.0, 10.0}) {
    const auto p = softmax(q, temp);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), 2);
  }
}

TEST(Rollout, SameSeedSameTrace) {
  const auto env = make_simple_crossing(0);
  const auto q = train_q_agent(env, {11, 11}, QHyperParams{}, 1);
  RolloutOptions o;
  o.jitter_steps = 2;
  const auto a = stochastic_rollout(q, env, 17, o);
  const auto b = stochastic_rollout(q, env, 17, o);
  EXPECT_EQ(a.observations, b.observations);
}

TEST(Rollout, TinyTemperatureIsGreedy) {
  // Down and Right tie exactly on the diagonal, so "greedy" means any
  // maximizing action.
  const auto env = make_simple_crossing(0);
  const auto q = train_q_agent(env, {11, 11}, QHyperParams{}, 1);
  RolloutOptions o;
  o.temperature = 1e-6;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = stochastic_rollout(q, env, seed, o);
    State s = env.start();
    for (const auto& obs : t.observations) {
      EXPECT_EQ(obs.state, s);
      const auto v = q.values(s);
      EXPECT_EQ(q.at(s, obs.action), *std::max_element(v.begin(), v.end()));
      s = env.move(s, obs.action);
    }
    EXPECT_EQ(s, (State{11, 11}));
  }
}

TEST(Rollout, TracesEndAtGoal) {
  const auto env = make_lava_crossing(0);
  const State goal{7, 7};
  const auto q = train_q_agent(env, goal, QHyperParams{}, 1);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RolloutOptions o;
    o.temperature = kSuboptimalTemperature;
    o.jitter_steps = 3;
    const auto t = stochastic_rollout(q, env, seed, o);
    ASSERT_FALSE(t.empty());
    EXPECT_TRUE(reaches_goal(env, t, goal));
    EXPECT_EQ(t.goal, goal);
    EXPECT_EQ(t.mask_kind, MaskKind::Full);
  }
}

TEST(Rollout, HighTemperatureTracesDiffer) {
  const auto env = make_simple_crossing(0);
  const auto q = train_q_agent(env, {11, 11}, QHyperParams{}, 1);
  RolloutOptions o;
  o.temperature = 1.0;
  o.max_attempts = 200;
  int differ = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto a = stochastic_rollout(q, env, 2 * i, o);
    const auto b = stochastic_rollout(q, env, 2 * i + 1, o);
    differ += a.observations != b.observations;
  }
  EXPECT_GE(differ, 90);
}

TEST(Rollout, ExhaustedRetriesAreGenerationFailure) {
  // The goal cell is walled off, so every attempt times out.
  const auto env = GridEnv::from_text("#######\n#S..#.#\n#...###\n#.....#\n#######\n");
  const auto q = train_q_agent(env, {5, 1}, quick(0), 1);
  RolloutOptions o;
  o.max_attempts = 3;
  try {
    stochastic_rollout(q, env, 1, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GenerationFailure);
  }
}

TEST(Checkpoint, QTableRoundTripIsExact) {
  const auto q = train_q_agent(make_lava_crossing(0), {7, 7}, QHyperParams{}, 8);
  std::stringstream ss;
  save_qtable(ss, q);
  const auto back = load_qtable(ss);
  EXPECT_TRUE(back == q);
}

TEST(Checkpoint, GcQTableRoundTripIsExact) {
  const auto gc = train_gc_q_agent(make_lava_crossing(0), {{7, 7}, {7, 1}}, quick(2000), 8);
  std::stringstream ss;
  save_gc_qtable(ss, gc);
  const auto back = load_gc_qtable(ss);
  EXPECT_TRUE(back == gc);
}

TEST(Checkpoint, MalformedInputIsParseError) {
  std::stringstream ss("graml-qtable 1\ngoal 3 x\n");
  try {
    load_qtable(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}
