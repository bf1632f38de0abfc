#include "asaf/envs.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "asaf/error.hpp"
#include "asaf/numkit.hpp"

namespace asaf {
namespace {

TabularMdp two_state_mdp(double gamma, int horizon) {
  TabularMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.gamma = gamma;
  m.horizon = horizon;
  m.initial = {0.6, 0.4};
  // [s][a][s']
  m.transition = {0.9, 0.1, 0.3, 0.7,
                  0.5, 0.5, 0.0, 1.0};
  m.reward = {1.0, 0.0,
              -0.5, 2.0};
  return m;
}

// Soft expectimax over the full action tree, evaluated recursively without
// any tables.
double soft_tree_value(const TabularMdp& m, double alpha, int t, int s) {
  if (t == m.horizon) return 0.0;
  double acc = 0.0;
  for (int a = 0; a < m.n_actions; ++a) {
    double q = m.r(s, a);
    for (int s2 = 0; s2 < m.n_states; ++s2) {
      if (m.p(s, a, s2) > 0.0) q += m.gamma * m.p(s, a, s2) * soft_tree_value(m, alpha, t + 1, s2);
    }
    acc += std::exp(q / alpha);
  }
  return alpha * std::log(acc);
}

TEST(TabularMdpTest, ValidateCatchesBadRows) {
  TabularMdp m = two_state_mdp(0.9, 3);
  EXPECT_NO_THROW(m.validate());
  m.transition[0] = 0.8;
  EXPECT_THROW(m.validate(), ValidationError);
  m = two_state_mdp(0.9, 3);
  m.initial = {0.5, 0.4};
  EXPECT_THROW(m.validate(), ValidationError);
  m = two_state_mdp(1.5, 3);
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(SoftValueIterationTest, SingleStateSingleAction) {
  TabularMdp m;
  m.n_states = 1;
  m.n_actions = 1;
  m.gamma = 0.0;
  m.horizon = 1;
  m.initial = {1.0};
  m.transition = {1.0};
  m.reward = {1.0};
  const SoftQTable q = soft_value_iteration(m, 1.0);
  EXPECT_DOUBLE_EQ(q.q_at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(q.v_at(0, 0), 1.0);
}

TEST(SoftValueIterationTest, SymmetricActionsGiveUniformPolicy) {
  TabularMdp m;
  m.n_states = 1;
  m.n_actions = 2;
  m.gamma = 0.7;
  m.horizon = 4;
  m.initial = {1.0};
  m.transition = {1.0, 1.0};
  m.reward = {0.0, 0.0};
  const SoftQTable q = soft_value_iteration(m, 1.0);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(q.q_at(t, 0, 0), q.q_at(t, 0, 1));
    const std::vector<double> pi = maxent_policy(q, t, 0);
    EXPECT_DOUBLE_EQ(pi[0], 0.5);
  }
}

TEST(SoftValueIterationTest, MatchesRecursiveTreeOracle) {
  const TabularMdp m = two_state_mdp(0.9, 3);
  const SoftQTable q = soft_value_iteration(m, 0.5);
  for (int t = 0; t <= 3; ++t) {
    for (int s = 0; s < 2; ++s) {
      EXPECT_NEAR(q.v_at(t, s), soft_tree_value(m, 0.5, t, s), 1e-9) << "t=" << t << " s=" << s;
    }
  }
}

TEST(SoftValueIterationTest, DeterministicUndiscountedSumsOverSequences) {
  // With deterministic dynamics and gamma = 1, V0(s0) = alpha * log of the
  // sum over all 2^3 action sequences of exp(return / alpha).
  TabularMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.gamma = 1.0;
  m.horizon = 3;
  m.initial = {1.0, 0.0};
  m.transition = {1.0, 0.0, 0.0, 1.0,
                  1.0, 0.0, 0.0, 1.0};  // action a moves to state a
  m.reward = {0.3, -1.0,
              2.0, 0.5};
  const double alpha = 0.5;
  double acc = 0.0;
  for (int seq = 0; seq < 8; ++seq) {
    int s = 0;
    double ret = 0.0;
    for (int t = 0; t < 3; ++t) {
      const int a = (seq >> t) & 1;
      ret += m.r(s, a);
      s = a;
    }
    acc += std::exp(ret / alpha);
  }
  EXPECT_NEAR(soft_value_iteration(m, alpha).v_at(0, 0), alpha * std::log(acc), 1e-9);
}

TEST(SoftValueIterationTest, LastStageEqualsReward) {
  const TabularMdp m = chain_mdp();
  const SoftQTable q = soft_value_iteration(m, 1.0);
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) EXPECT_EQ(q.q_at(m.horizon - 1, s, a), m.r(s, a));
  }
  for (double v : q.v) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(soft_value_iteration(m, 0.0), ArgumentError);
}

TEST(MaxentPolicyTest, HandValues) {
  SoftQTable q;
  q.alpha = 1.0;
  q.horizon = 1;
  q.n_states = 1;
  q.n_actions = 2;
  q.q = {std::log(3.0), 0.0};
  q.v = {0.0, 0.0};
  const std::vector<double> pi = maxent_policy(q, 0, 0);
  EXPECT_NEAR(pi[0], 0.75, 1e-15);
  EXPECT_NEAR(pi[1], 0.25, 1e-15);

  q.q = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(maxent_policy(q, 0, 0)[0], 0.5);
}

TEST(MaxentPolicyTest, ShiftInvariant) {
  for (double alpha : {0.1, 1.0, 4.0}) {
    SoftQTable q;
    q.alpha = alpha;
    q.horizon = 1;
    q.n_states = 1;
    q.n_actions = 3;
    q.q = {0.2, -1.0, 0.7};
    const std::vector<double> a = maxent_policy(q, 0, 0);
    q.q = {100.2, 99.0, 100.7};
    const std::vector<double> b = maxent_policy(q, 0, 0);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(GridworldTest, LayoutAndMoves) {
  EXPECT_TRUE(gridworld_is_wall(6));
  EXPECT_FALSE(gridworld_is_wall(kGridStart));
  EXPECT_EQ(gridworld_move(0, 0), 0);   // up off the grid
  EXPECT_EQ(gridworld_move(1, 2), 1);   // down into a wall
  EXPECT_EQ(gridworld_move(0, 1), 1);
  EXPECT_NO_THROW(gridworld_mdp(20).validate());
}

TEST(GridworldTest, WallBumpCostsOneStep) {
  EnvInstance env(gridworld_env());
  env.reset_to_state(1);
  const StepResult r = env.step(Action{2});
  EXPECT_EQ(env.state(), 1);
  EXPECT_EQ(r.reward, -1.0);
  EXPECT_FALSE(r.done);
}

TEST(GridworldTest, ShortestPathEarnsThree) {
  EnvInstance env(gridworld_env());
  env.reset(0);
  // right x4 along the top row, then down x4 along the right column.
  double total = 0.0;
  StepResult r;
  for (int a : {1, 1, 1, 1, 2, 2, 2, 2}) {
    r = env.step(Action{a});
    total += r.reward;
  }
  EXPECT_TRUE(r.done);
  EXPECT_EQ(total, 3.0);
  EXPECT_THROW(env.step(Action{0}), StateError);
}

TEST(PointmassTest, StepArithmetic) {
  EnvInstance env(pointmass_env());
  env.reset_to_position(0.5);
  const StepResult r = env.step(Action{std::vector<double>{-1.0}});
  EXPECT_NEAR(env.position(), 0.4, 1e-15);
  EXPECT_NEAR(r.reward, -0.16, 1e-15);
  EXPECT_NEAR(r.observation[1], -1.0, 1e-12);
}

TEST(PointmassTest, ActionAndPositionClamped) {
  EnvInstance env(pointmass_env());
  env.reset_to_position(1.95);
  env.step(Action{std::vector<double>{5.0}});
  EXPECT_EQ(env.position(), 2.0);
}

TEST(PointmassTest, ResetDistribution) {
  EnvInstance env(pointmass_env());
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Observation obs = env.reset(seed);
    EXPECT_GE(obs[0], -1.0);
    EXPECT_LE(obs[0], 1.0);
    EXPECT_EQ(obs[1], 0.0);
  }
  EXPECT_EQ(env.reset(17), env.reset(17));
}

TEST(PointmassTest, ScriptedExpert) {
  EXPECT_EQ(scripted_pointmass_expert({0.0, 0.0})[0], 0.0);
  EXPECT_DOUBLE_EQ(scripted_pointmass_expert({0.1, 0.0})[0], -0.5);
  EXPECT_EQ(scripted_pointmass_expert({-1.0, 0.0})[0], 1.0);
}

TEST(EnvInstanceTest, DegenerateInitialAndDeterministicSuccessor) {
  TabularMdp m;
  m.n_states = 2;
  m.n_actions = 1;
  m.horizon = 3;
  m.initial = {1.0, 0.0};
  m.transition = {0.0, 1.0, 1.0, 0.0};
  m.reward = {0.0, 0.0};
  EnvInstance env(tabular_env("flip", m));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.reset(seed);
    EXPECT_EQ(env.state(), 0);
    env.step(Action{0});
    EXPECT_EQ(env.state(), 1);
  }
}

TEST(EnvInstanceTest, StepRulesEnforced) {
  EnvInstance env(make_env("chain"));
  EXPECT_THROW(env.step(Action{0}), StateError);
  env.reset(1);
  EXPECT_THROW(env.step(Action{2}), ArgumentError);
  EXPECT_THROW(env.step(Action{std::vector<double>{0.0}}), ArgumentError);
  for (int t = 0; t < 5; ++t) env.step(Action{1});
  EXPECT_TRUE(env.done());
  EXPECT_EQ(env.steps(), 5);
  EXPECT_THROW(env.step(Action{1}), StateError);
  EXPECT_THROW(make_env("cartpole"), ArgumentError);
}

TEST(RolloutTest, DeterministicEverythingIgnoresSeed) {
  const EnvSpec env = gridworld_env();
  const ActionSampler always_right = [](const Observation&, int, Rng&) -> Action { return 1; };
  const Episode a = rollout(env, always_right, 1);
  const Episode b = rollout(env, always_right, 2);
  EXPECT_EQ(a.trajectory.observations, b.trajectory.observations);
  EXPECT_EQ(a.trajectory.size(), 20u);
  EXPECT_EQ(rollout(env, always_right, 3, 1).trajectory.size(), 1u);
}

TEST(RolloutTest, UniformPolicyActionFrequency) {
  TabularMdp m = two_state_mdp(1.0, 1);
  const EnvSpec env = tabular_env("two", m);
  const ActionSampler uniform = [](const Observation&, int, Rng& rng) -> Action {
    return static_cast<int>(rng.uniform_index(2));
  };
  int ones = 0;
  constexpr int kN = 10000;
  for (int i = 0; i < kN; ++i) {
    ones += std::get<int>(rollout(env, uniform, static_cast<std::uint64_t>(i)).trajectory.actions[0]);
  }
  // 0.02 is more than 4 binomial standard deviations at n = 10^4.
  EXPECT_NEAR(static_cast<double>(ones) / kN, 0.5, 0.02);
}

TEST(RolloutTest, StageIndexPassedToSampler) {
  std::vector<int> seen;
  const ActionSampler record = [&](const Observation&, int t, Rng&) -> Action {
    seen.push_back(t);
    return 0;
  };
  rollout(make_env("chain"), record, 0);
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(TrajectoryTest, ValidateRejectsMixedActions) {
  Trajectory t;
  t.observations = {{1.0}, {1.0}};
  t.actions = {Action{0}, Action{std::vector<double>{0.0}}};
  EXPECT_THROW(t.validate(), ValidationError);
  t.actions = {Action{0}};
  EXPECT_THROW(t.validate(), ValidationError);
}

}  // namespace
}  // namespace asaf
