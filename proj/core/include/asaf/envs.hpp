#ifndef ASAF_ENVS_HPP_
#define ASAF_ENVS_HPP_

// Desk-scale environments and their exact expert oracles.
//
// Three environment kinds are provided:
//   * tabular   - an arbitrary finite-horizon TabularMdp, observed as a one-hot
//                 state vector ("chain" is the shipped instance);
//   * gridworld - a fixed 5x5 maze, deterministic 4-neighbour moves;
//   * pointmass - a 1-D continuous point mass with a scripted controller.
//
// The tabular and gridworld kinds both expose a TabularMdp view so experts can
// be computed by finite-horizon soft value iteration.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asaf/rng.hpp"

namespace asaf {

using Observation = std::vector<double>;
// Discrete action id or continuous action vector.
using Action = std::variant<int, std::vector<double>>;

enum class ActionKind { kDiscrete, kContinuous };

struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // [s][a][s'], row-major
  std::vector<double> initial;     // [s]
  std::vector<double> reward;      // [s][a]
  double gamma = 1.0;
  int horizon = 1;

  double p(int s, int a, int s_next) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

  // Throws ValidationError when shapes, probabilities, gamma or horizon are invalid.
  void validate() const;
};

// Stage-indexed soft Q-values and state values of a finite-horizon MDP.
struct SoftQTable {
  double alpha = 1.0;
  int horizon = 0;
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> q;  // [t][s][a]
  std::vector<double> v;  // [t][s], t in 0..horizon (v at horizon is 0)

  double q_at(int t, int s, int a) const {
    return q[(static_cast<std::size_t>(t) * n_states + s) * n_actions + a];
  }
  double v_at(int t, int s) const { return v[static_cast<std::size_t>(t) * n_states + s]; }
};

// Action probabilities per (stage, state). A table with one stage is stationary
// and answers every stage with the same rows.
class PolicyTable {
 public:
  PolicyTable() = default;
  PolicyTable(int n_stages, int n_states, int n_actions, std::vector<double> probs);
  static PolicyTable uniform(int n_states, int n_actions);

  int n_stages() const { return n_stages_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  bool stationary() const { return n_stages_ == 1; }

  double prob(int t, int s, int a) const {
    return probs_[index(t, s) * static_cast<std::size_t>(n_actions_) + a];
  }
  std::span<const double> row(int t, int s) const {
    return std::span<const double>(probs_).subspan(index(t, s) * n_actions_, n_actions_);
  }
  const std::vector<double>& data() const { return probs_; }

 private:
  std::size_t index(int t, int s) const {
    const int stage = stationary() ? 0 : t;
    return static_cast<std::size_t>(stage) * n_states_ + s;
  }

  int n_stages_ = 0;
  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> probs_;
};

// Backward recursion: Q[t] = r + gamma * P V[t+1], V[t] = alpha * lse(Q[t] / alpha),
// V[horizon] = 0. Throws ArgumentError for alpha <= 0, ValidationError for bad MDPs.
SoftQTable soft_value_iteration(const TabularMdp& mdp, double alpha);

// pi(a|s) = exp((Q[t][s][a] - V[t][s]) / alpha) at one stage and state.
std::vector<double> maxent_policy(const SoftQTable& table, int t, int s);

// All stages of maxent_policy collected into a stage-indexed table.
PolicyTable maxent_policy_table(const SoftQTable& table);

// 4-state, 2-action chain used throughout the tests: action 0 moves left,
// action 1 moves right, each move slips (stays put) with probability 0.2.
// Reward 1 for choosing "right" plus 1 for acting in the rightmost state.
// Starts in state 0, gamma = 0.5, horizon 5.
TabularMdp chain_mdp();

// ---------------------------------------------------------------------------
// Gridworld

inline constexpr int kGridSize = 5;
inline constexpr int kGridCells = kGridSize * kGridSize;
inline constexpr int kGridStart = 0;
inline constexpr int kGridGoal = kGridCells - 1;
inline constexpr double kGridStepReward = -1.0;
inline constexpr double kGridGoalReward = 10.0;

// Layout rows, '#' = wall, 'S' = start, 'G' = goal.
std::span<const std::string_view> gridworld_layout();
bool gridworld_is_wall(int cell);
// Deterministic move (0 up, 1 right, 2 down, 3 left); blocked moves stay put.
int gridworld_move(int cell, int action);
// Tabular view with the goal made absorbing and reward-free, start cell fixed.
TabularMdp gridworld_mdp(int horizon);

// ---------------------------------------------------------------------------
// Point mass

inline constexpr double kPointDt = 0.1;
inline constexpr double kPointBound = 2.0;

// a = clamp(-5 x, -1, 1) on observation [x, v].
std::vector<double> scripted_pointmass_expert(const Observation& obs);

// ---------------------------------------------------------------------------
// Environment instances

enum class EnvKind { kTabular, kGridworld, kPointmass };

std::string_view to_string(EnvKind kind);

struct EnvSpec {
  EnvKind kind = EnvKind::kTabular;
  std::string id;
  int horizon = 1;
  // Tabular view for the discrete kinds; null for pointmass.
  std::shared_ptr<const TabularMdp> mdp;

  ActionKind action_kind() const {
    return kind == EnvKind::kPointmass ? ActionKind::kContinuous : ActionKind::kDiscrete;
  }
  int obs_dim() const;
  // Number of discrete actions, or 0 for continuous envs.
  int n_actions() const;
  // Continuous action dimension, or 0 for discrete envs.
  int action_dim() const;
};

EnvSpec tabular_env(std::string id, TabularMdp mdp);
EnvSpec gridworld_env(int horizon = 20);
EnvSpec pointmass_env(int horizon = 50);
// "chain", "gridworld" or "pointmass". Unknown ids throw ArgumentError.
EnvSpec make_env(std::string_view id);

std::vector<double> one_hot(int index, int n);
// Index of the single non-zero entry; throws ArgumentError otherwise.
int decode_one_hot(std::span<const double> obs);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

// One running episode. Each instance owns its RNG stream.
class EnvInstance {
 public:
  explicit EnvInstance(EnvSpec spec);

  // Deterministic given seed. Tabular/gridworld sample s0 ~ P0; the point mass
  // starts at x ~ U[-1, 1] with zero velocity.
  Observation reset(std::uint64_t seed);
  // Starts an episode from a chosen state (tabular, gridworld) or position
  // (pointmass, velocity 0). Throws ArgumentError for the wrong kind or range.
  Observation reset_to_state(int state, std::uint64_t seed = 0);
  Observation reset_to_position(double x, std::uint64_t seed = 0);
  // Throws StateError after the episode has ended (or before reset) and
  // ArgumentError for an action of the wrong kind or range.
  StepResult step(const Action& action);

  bool done() const { return done_; }
  int steps() const { return t_; }
  // Current discrete state; only valid for tabular and gridworld.
  int state() const { return state_; }
  // Current point-mass position.
  double position() const { return x_; }
  const EnvSpec& spec() const { return spec_; }

 private:
  Observation observe() const;

  EnvSpec spec_;
  Rng rng_;
  bool started_ = false;
  bool done_ = false;
  int t_ = 0;
  int state_ = 0;
  double x_ = 0.0;
  double v_ = 0.0;
};

// (observation, action) pairs of one episode.
struct Trajectory {
  std::string env;
  std::vector<Observation> observations;
  std::vector<Action> actions;
  std::optional<Observation> final_observation;

  std::size_t size() const { return actions.size(); }
  // Throws ValidationError if lengths or dimensions are inconsistent.
  void validate() const;
};

struct Episode {
  Trajectory trajectory;
  double total_reward = 0.0;
};

// Chooses the action at stage t (0-based step index within the episode).
using ActionSampler = std::function<Action(const Observation&, int t, Rng&)>;

// Runs reset + (sample, step) until done or max_steps (default: env horizon).
// The env stream and the policy stream are both derived from seed.
Episode rollout(const EnvSpec& spec, const ActionSampler& policy, std::uint64_t seed,
                int max_steps = -1);

}  // namespace asaf

#endif  // ASAF_ENVS_HPP_
