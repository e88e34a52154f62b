#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "graml/error.hpp"
#include "graml/recognizer.hpp"

using namespace graml;

namespace {

GridEnv env5() { return GridEnv::from_text("#####\n#S..#\n#...#\n#...#\n#####\n"); }

Trace walk(const GridEnv& env, State from, std::vector<Action> acts, State goal) {
  Trace t;
  t.goal = goal;
  State s = from;
  for (Action a : acts) {
    t.observations.push_back({s, a});
    s = env.move(s, a);
  }
  return t;
}

// Test-side replay: every recorded state follows from the previous action and
// the final move lands on the goal.
bool replay_ends_at(const GridEnv& env, const Trace& t, State goal) {
  if (t.empty() || t.observations.front().state != env.start()) return false;
  State s = env.start();
  for (const auto& o : t.observations) {
    if (o.state != s) return false;
    s = env.move(s, o.action);
  }
  return s == goal;
}

std::vector<GoalLibrary> expert_libs(const GridEnv& env) {
  using A = Action;
  return {{{3, 1}, {walk(env, {1, 1}, {A::Right, A::Right}, {3, 1})}},
          {{1, 3}, {walk(env, {1, 1}, {A::Down, A::Down}, {1, 3})}},
          {{3, 3}, {walk(env, {1, 1}, {A::Right, A::Down, A::Right, A::Down}, {3, 3}),
                    walk(env, {1, 1}, {A::Down, A::Right, A::Down, A::Right}, {3, 3}),
                    walk(env, {1, 1}, {A::Down, A::Down, A::Right, A::Right}, {3, 3})}}};
}

MetricModel model5(std::uint64_t seed = 1) { return make_model(env5(), Encoding::OneHot, 8, seed); }

// Independent scoring: re-embed the truncated members, average, take the first maximum.
std::size_t brute_force(const MetricModel& m, const AdaptedState& ad, const Trace& obs,
                        const GridEnv& env) {
  const Embedding v = lstm_forward(m.params, encode_trace(obs, env, m.encoding));
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < ad.libraries.size(); ++i) {
    double total = 0.0;
    for (const auto& t : ad.libraries[i].traces) {
      Trace cut = t;
      if (cut.observations.size() > obs.size()) cut.observations.resize(obs.size());
      const Embedding u = lstm_forward(m.params, encode_trace(cut, env, m.encoding));
      double d = 0.0;
      for (Eigen::Index j = 0; j < u.size(); ++j) d += std::abs(u(j) - v(j));
      total += std::exp(-d);
    }
    const double score = total / static_cast<double>(ad.libraries[i].traces.size());
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST(Adapt, ExpertTracesAreInstant) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  const auto ad = adapt_goals(model5(), env, {{3, 3}, {3, 1}}, AdaptStrategy::ExpertTraces, src, 1);
  ASSERT_EQ(ad.libraries.size(), 2u);
  EXPECT_EQ(ad.libraries[0].goal, (State{3, 3}));
  EXPECT_EQ(ad.libraries[0].traces.size(), 1u);
  EXPECT_EQ(ad.libraries[0].traces[0].observations, libs[2].traces[0].observations);
  EXPECT_LT(ad.adaptation_time, 0.01);
  EXPECT_EQ(ad.strategy, AdaptStrategy::ExpertTraces);
}

TEST(Adapt, MctsLibrariesReachTheirGoals) {
  const auto env = env5();
  AdaptSource src;
  src.mcts = MctsConfig{};
  const auto ad = adapt_goals(model5(), env, {{3, 3}, {3, 1}}, AdaptStrategy::Mcts, src, 1);
  ASSERT_EQ(ad.libraries.size(), 2u);
  for (const auto& lib : ad.libraries) {
    ASSERT_EQ(lib.traces.size(), 1u);
    EXPECT_TRUE(replay_ends_at(env, lib.traces[0], lib.goal));
  }
}

TEST(Adapt, GoalConditionedRollouts) {
  const auto env = env5();
  QHyperParams hp;
  hp.episodes = 3000;
  const auto gc = train_gc_q_agent(env, {{3, 3}, {3, 1}, {1, 3}}, hp, 1);
  AdaptSource src;
  src.gc_policy = &gc;
  const auto ad = adapt_goals(model5(), env, {{1, 3}, {3, 3}}, AdaptStrategy::GoalConditioned, src, 3);
  for (const auto& lib : ad.libraries) {
    EXPECT_EQ(lib.traces.size(), 3u);
    for (const auto& t : lib.traces) EXPECT_TRUE(replay_ends_at(env, t, lib.goal));
  }
  try {
    adapt_goals(model5(), env, {{2, 2}}, AdaptStrategy::GoalConditioned, src, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GenerationFailure);
  }
}

TEST(Adapt, Errors) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  EXPECT_THROW(adapt_goals(model5(), env, {}, AdaptStrategy::ExpertTraces, src, 1), Error);
  EXPECT_THROW(adapt_goals(model5(), env, {{2, 2}}, AdaptStrategy::ExpertTraces, src, 1), Error);
  EXPECT_THROW(adapt_goals(model5(), env, {{3, 1}}, AdaptStrategy::ExpertTraces, src, 2), Error);
  EXPECT_THROW(adapt_goals(model5(), env, {{3, 1}}, AdaptStrategy::Mcts, src, 1), Error);
  EXPECT_THROW(adapt_goals(model5(), env, {{3, 1}, {3, 1}}, AdaptStrategy::ExpertTraces, src, 1),
               Error);
}

TEST(EmbedLibrary, TruncationBehaviour) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  const auto m = model5();
  const auto full = embed_library(m, libs[2], 100, env);
  ASSERT_EQ(full.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(full[i], embed(m, libs[2].traces[i], env));
  const auto cut = embed_library(m, libs[2], 1, env);
  EXPECT_GT((cut[0] - full[0]).cwiseAbs().sum(), 1e-9);
  EXPECT_THROW(embed_library(m, libs[2], 0, env), Error);
}

TEST(Infer, SingleGoalAlwaysWins) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  const auto ad = adapt_goals(model5(), env, {{3, 1}}, AdaptStrategy::ExpertTraces, src, 1);
  const auto r = infer(model5(), ad, libs[1].traces[0], env);
  EXPECT_EQ(r.goal, (State{3, 1}));
  EXPECT_EQ(r.scores.size(), 1u);
}

TEST(Infer, AveragingExample) {
  // Means 0.8 and 0.55.
  EXPECT_EQ(argmax_lowest({(0.9 + 0.7) / 2, (0.5 + 0.6) / 2}), 0u);
  EXPECT_EQ(argmax_lowest({0.4, 0.7, 0.7}), 1u);
}

TEST(Infer, ObservationEqualToLibraryMemberScoresOne) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  const auto m = model5(3);
  const auto ad = adapt_goals(m, env, {{3, 1}, {1, 3}, {3, 3}}, AdaptStrategy::ExpertTraces, src, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = infer(m, ad, ad.libraries[i].traces[0], env);
    EXPECT_DOUBLE_EQ(r.scores[i], 1.0);
    EXPECT_EQ(r.goal_index, i);
    for (double s : r.scores) {
      EXPECT_GT(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(Infer, TiesGoToLowestIndex) {
  const auto env = env5();
  auto libs = expert_libs(env);
  libs[0].traces = libs[1].traces;  // two goals, identical libraries
  AdaptSource src;
  src.expert = &libs;
  const auto m = model5();
  const auto ad = adapt_goals(m, env, {{1, 3}, {3, 1}}, AdaptStrategy::ExpertTraces, src, 1);
  const auto r = infer(m, ad, libs[2].traces[0], env);
  EXPECT_EQ(r.scores[0], r.scores[1]);
  EXPECT_EQ(r.goal_index, 0u);
}

TEST(Infer, MatchesBruteForceAndIsPermutationInvariant) {
  const auto env = make_simple_crossing(0);
  Rng rng(5);
  for (int c = 0; c < 30; ++c) {
    const auto m = make_model(env, Encoding::OneHot, 6, static_cast<std::uint64_t>(c));
    std::vector<GoalLibrary> libs;
    std::vector<State> goals = {{11, 11}, {11, 1}, {1, 11}, {5, 9}};
    for (State g : goals) {
      GoalLibrary lib{g, {}};
      MctsConfig cfg;
      cfg.iterations = 200;
      cfg.seed = static_cast<std::uint64_t>(c);
      lib.traces.push_back(mcts_plan(env, g, cfg));
      libs.push_back(lib);
    }
    AdaptSource src;
    src.expert = &libs;
    auto ad = adapt_goals(m, env, goals, AdaptStrategy::ExpertTraces, src, 1);
    Trace obs = libs[uniform_index(rng, 4)].traces[0];
    obs.observations.resize(1 + uniform_index(rng, obs.size()));
    const auto r = infer(m, ad, obs, env);
    EXPECT_EQ(r.goal_index, brute_force(m, ad, obs, env));

    std::reverse(ad.libraries.begin(), ad.libraries.end());
    const auto r2 = infer(m, ad, obs, env);
    const auto sorted = [](std::vector<double> v) { std::sort(v.begin(), v.end()); return v; };
    EXPECT_EQ(sorted(r.scores), sorted(r2.scores));
    if (std::count(r.scores.begin(), r.scores.end(), r.scores[r.goal_index]) == 1) {
      EXPECT_EQ(r.goal, r2.goal);
    }
  }
}

TEST(Infer, UntruncatedUsesWholeLibraries) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  const auto m = model5(4);
  const auto plain =
      adapt_goals(m, env, {{3, 1}, {1, 3}, {3, 3}}, AdaptStrategy::ExpertTraces, src, 1);
  const auto cached =
      adapt_goals(m, env, {{3, 1}, {1, 3}, {3, 3}}, AdaptStrategy::ExpertTraces, src, 1, true);
  ASSERT_EQ(cached.precomputed.size(), 3u);
  Trace obs = libs[2].traces[0];
  obs.observations.resize(1);
  const auto a = infer(m, plain, obs, env, {false});
  const auto b = infer(m, cached, obs, env, {false});
  EXPECT_EQ(a.scores, b.scores);
  const Embedding v = embed(m, obs, env);
  EXPECT_DOUBLE_EQ(a.scores[2], similarity(embed(m, libs[2].traces[0], env), v));
  const auto t = infer(m, plain, obs, env);
  EXPECT_NE(a.scores, t.scores);
}

TEST(Infer, Errors) {
  const auto env = env5();
  EXPECT_THROW(infer(model5(), AdaptedState{}, expert_libs(env)[0].traces[0], env), Error);
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  const auto ad = adapt_goals(model5(), env, {{3, 1}}, AdaptStrategy::ExpertTraces, src, 1);
  EXPECT_THROW(infer(model5(), ad, Trace{}, env), Error);
  Trace off;
  off.observations.push_back({{7, 7}, Action::Up});
  try {
    infer(model5(), ad, off, env);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Encoding);
  }
}

TEST(Infer, Deterministic) {
  const auto env = env5();
  const auto libs = expert_libs(env);
  AdaptSource src;
  src.expert = &libs;
  const auto m = model5();
  const auto ad = adapt_goals(m, env, {{3, 1}, {3, 3}}, AdaptStrategy::ExpertTraces, src, 1);
  const auto a = infer(m, ad, libs[1].traces[0], env);
  const auto b = infer(m, ad, libs[1].traces[0], env);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.goal, b.goal);
}

TEST(AdaptedStateIo, RoundTrip) {
  const auto env = env5();
  AdaptSource src;
  src.mcts = MctsConfig{};
  const auto ad = adapt_goals(model5(), env, {{3, 3}, {3, 1}}, AdaptStrategy::Mcts, src, 2);
  std::stringstream ss;
  save_adapted_state(ss, ad);
  const auto back = load_adapted_state(ss);
  EXPECT_EQ(back.strategy, ad.strategy);
  EXPECT_EQ(back.adaptation_time, ad.adaptation_time);
  ASSERT_EQ(back.libraries.size(), ad.libraries.size());
  for (std::size_t i = 0; i < ad.libraries.size(); ++i) {
    EXPECT_EQ(back.libraries[i].goal, ad.libraries[i].goal);
    ASSERT_EQ(back.libraries[i].traces.size(), 2u);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(back.libraries[i].traces[j].observations, ad.libraries[i].traces[j].observations);
      EXPECT_EQ(back.libraries[i].traces[j].goal, ad.libraries[i].traces[j].goal);
    }
  }
  std::stringstream again;
  save_adapted_state(again, back);
  std::stringstream first;
  save_adapted_state(first, ad);
  EXPECT_EQ(again.str(), first.str());
}

TEST(AdaptedStateIo, MalformedIsParseError) {
  std::stringstream ss("{\"format\": \"graml-adapted\", \"version\": 1}");
  try {
    load_adapted_state(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}
