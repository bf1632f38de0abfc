#include "asaf/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "asaf/error.hpp"
#include "asaf/numkit.hpp"

namespace asaf {
namespace {

constexpr double kProbTol = 1e-9;

constexpr std::array<std::string_view, kGridSize> kLayout = {
    "S....",
    ".##..",
    "...#.",
    ".#.#.",
    ".#..G",
};

constexpr int kRowDelta[4] = {-1, 0, 1, 0};
constexpr int kColDelta[4] = {0, 1, 0, -1};

}  // namespace

void TabularMdp::validate() const {
  if (n_states < 1) throw ValidationError("mdp: n_states must be >= 1");
  if (n_actions < 1) throw ValidationError("mdp: n_actions must be >= 1");
  if (horizon < 1) throw ValidationError("mdp: horizon must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("mdp: gamma must lie in [0, 1]");
  const auto ns = static_cast<std::size_t>(n_states);
  const auto na = static_cast<std::size_t>(n_actions);
  if (transition.size() != ns * na * ns) throw ValidationError("mdp: transition tensor shape");
  if (initial.size() != ns) throw ValidationError("mdp: initial distribution shape");
  if (reward.size() != ns * na) throw ValidationError("mdp: reward table shape");
  if (!all_finite(reward)) throw ValidationError("mdp: reward must be finite");

  auto check_dist = [](std::span<const double> d, const std::string& what) {
    double sum = 0.0;
    for (double p : d) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(what + ": entry outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol) throw ValidationError(what + ": does not sum to 1");
  };
  check_dist(initial, "mdp initial distribution");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const std::size_t off = (static_cast<std::size_t>(s) * na + a) * ns;
      check_dist(std::span<const double>(transition).subspan(off, ns),
                 "mdp transition row (" + std::to_string(s) + "," + std::to_string(a) + ")");
    }
  }
}

PolicyTable::PolicyTable(int n_stages, int n_states, int n_actions, std::vector<double> probs)
    : n_stages_(n_stages), n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  if (n_stages < 1 || n_states < 1 || n_actions < 1) {
    throw ArgumentError("PolicyTable: dimensions must be positive");
  }
  if (probs_.size() != static_cast<std::size_t>(n_stages) * n_states * n_actions) {
    throw ShapeError("PolicyTable: probability array has the wrong size");
  }
}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  return PolicyTable(1, n_states, n_actions,
                     std::vector<double>(static_cast<std::size_t>(n_states) * n_actions,
                                         1.0 / n_actions));
}

SoftQTable soft_value_iteration(const TabularMdp& mdp, double alpha) {
  if (!(alpha > 0.0)) throw ArgumentError("soft_value_iteration: alpha must be positive");
  mdp.validate();
  SoftQTable out;
  out.alpha = alpha;
  out.horizon = mdp.horizon;
  out.n_states = mdp.n_states;
  out.n_actions = mdp.n_actions;
  const auto ns = static_cast<std::size_t>(mdp.n_states);
  const auto na = static_cast<std::size_t>(mdp.n_actions);
  out.q.assign(static_cast<std::size_t>(mdp.horizon) * ns * na, 0.0);
  out.v.assign(static_cast<std::size_t>(mdp.horizon + 1) * ns, 0.0);

  std::vector<double> scaled(na);
  for (int t = mdp.horizon - 1; t >= 0; --t) {
    const double* v_next = out.v.data() + static_cast<std::size_t>(t + 1) * ns;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        double expected = 0.0;
        for (int s2 = 0; s2 < mdp.n_states; ++s2) expected += mdp.p(s, a, s2) * v_next[s2];
        const double q = mdp.r(s, a) + mdp.gamma * expected;
        out.q[(static_cast<std::size_t>(t) * ns + s) * na + a] = q;
        scaled[a] = q / alpha;
      }
      out.v[static_cast<std::size_t>(t) * ns + s] = alpha * logsumexp(scaled);
    }
  }
  return out;
}

std::vector<double> maxent_policy(const SoftQTable& table, int t, int s) {
  if (t < 0 || t >= table.horizon) throw ArgumentError("maxent_policy: stage out of range");
  if (s < 0 || s >= table.n_states) throw ArgumentError("maxent_policy: state out of range");
  std::vector<double> scaled(table.n_actions);
  for (int a = 0; a < table.n_actions; ++a) scaled[a] = table.q_at(t, s, a) / table.alpha;
  // softmax(Q/alpha) is exp((Q - V)/alpha) with V recomputed in the same
  // shifted form, which keeps the row normalized to rounding.
  return softmax(scaled);
}

PolicyTable maxent_policy_table(const SoftQTable& table) {
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(table.horizon) * table.n_states * table.n_actions);
  for (int t = 0; t < table.horizon; ++t) {
    for (int s = 0; s < table.n_states; ++s) {
      const std::vector<double> row = maxent_policy(table, t, s);
      probs.insert(probs.end(), row.begin(), row.end());
    }
  }
  return PolicyTable(table.horizon, table.n_states, table.n_actions, std::move(probs));
}

TabularMdp chain_mdp() {
  constexpr int kStates = 4;
  constexpr double kSlip = 0.2;
  TabularMdp mdp;
  mdp.n_states = kStates;
  mdp.n_actions = 2;
  mdp.gamma = 0.5;
  mdp.horizon = 5;
  mdp.transition.assign(kStates * 2 * kStates, 0.0);
  mdp.reward.assign(kStates * 2, 0.0);
  mdp.initial.assign(kStates, 0.0);
  mdp.initial[0] = 1.0;
  for (int s = 0; s < kStates; ++s) {
    for (int a = 0; a < 2; ++a) {
      const int target = a == 0 ? std::max(0, s - 1) : std::min(kStates - 1, s + 1);
      double* row = mdp.transition.data() + (s * 2 + a) * kStates;
      row[target] += 1.0 - kSlip;
      row[s] += kSlip;
      mdp.reward[s * 2 + a] = (a == 1 ? 1.0 : 0.0) + (s == kStates - 1 ? 1.0 : 0.0);
    }
  }
  return mdp;
}

std::span<const std::string_view> gridworld_layout() { return kLayout; }

bool gridworld_is_wall(int cell) {
  if (cell < 0 || cell >= kGridCells) return true;
  return kLayout[cell / kGridSize][cell % kGridSize] == '#';
}

int gridworld_move(int cell, int action) {
  if (action < 0 || action >= 4) throw ArgumentError("gridworld: action must be in [0, 4)");
  if (cell < 0 || cell >= kGridCells) throw ArgumentError("gridworld: cell out of range");
  const int r = cell / kGridSize + kRowDelta[action];
  const int c = cell % kGridSize + kColDelta[action];
  if (r < 0 || r >= kGridSize || c < 0 || c >= kGridSize) return cell;
  const int next = r * kGridSize + c;
  return gridworld_is_wall(next) ? cell : next;
}

TabularMdp gridworld_mdp(int horizon) {
  TabularMdp mdp;
  mdp.n_states = kGridCells;
  mdp.n_actions = 4;
  mdp.gamma = 1.0;
  mdp.horizon = horizon;
  mdp.transition.assign(static_cast<std::size_t>(kGridCells) * 4 * kGridCells, 0.0);
  mdp.reward.assign(static_cast<std::size_t>(kGridCells) * 4, 0.0);
  mdp.initial.assign(kGridCells, 0.0);
  mdp.initial[kGridStart] = 1.0;
  for (int s = 0; s < kGridCells; ++s) {
    for (int a = 0; a < 4; ++a) {
      const std::size_t row = (static_cast<std::size_t>(s) * 4 + a) * kGridCells;
      if (s == kGridGoal || gridworld_is_wall(s)) {
        // Absorbing and silent: the live episode has already ended here (or
        // can never be here).
        mdp.transition[row + s] = 1.0;
        continue;
      }
      const int next = gridworld_move(s, a);
      mdp.transition[row + next] = 1.0;
      mdp.reward[static_cast<std::size_t>(s) * 4 + a] =
          next == kGridGoal ? kGridGoalReward : kGridStepReward;
    }
  }
  return mdp;
}

std::vector<double> scripted_pointmass_expert(const Observation& obs) {
  if (obs.empty()) throw ShapeError("pointmass expert: empty observation");
  return {std::clamp(-5.0 * obs[0], -1.0, 1.0)};
}

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kTabular:
      return "tabular";
    case EnvKind::kGridworld:
      return "gridworld";
    case EnvKind::kPointmass:
      return "pointmass";
  }
  return "unknown";
}

int EnvSpec::obs_dim() const {
  if (kind == EnvKind::kPointmass) return 2;
  return mdp->n_states;
}

int EnvSpec::n_actions() const { return kind == EnvKind::kPointmass ? 0 : mdp->n_actions; }

int EnvSpec::action_dim() const { return kind == EnvKind::kPointmass ? 1 : 0; }

EnvSpec tabular_env(std::string id, TabularMdp mdp) {
  mdp.validate();
  EnvSpec spec;
  spec.kind = EnvKind::kTabular;
  spec.id = std::move(id);
  spec.horizon = mdp.horizon;
  spec.mdp = std::make_shared<const TabularMdp>(std::move(mdp));
  return spec;
}

EnvSpec gridworld_env(int horizon) {
  if (horizon < 1) throw ArgumentError("gridworld: horizon must be >= 1");
  EnvSpec spec;
  spec.kind = EnvKind::kGridworld;
  spec.id = "gridworld";
  spec.horizon = horizon;
  spec.mdp = std::make_shared<const TabularMdp>(gridworld_mdp(horizon));
  return spec;
}

EnvSpec pointmass_env(int horizon) {
  if (horizon < 1) throw ArgumentError("pointmass: horizon must be >= 1");
  EnvSpec spec;
  spec.kind = EnvKind::kPointmass;
  spec.id = "pointmass";
  spec.horizon = horizon;
  return spec;
}

EnvSpec make_env(std::string_view id) {
  if (id == "chain") return tabular_env("chain", chain_mdp());
  if (id == "gridworld") return gridworld_env();
  if (id == "pointmass") return pointmass_env();
  throw ArgumentError("unknown environment '" + std::string(id) + "'");
}

std::vector<double> one_hot(int index, int n) {
  if (index < 0 || index >= n) throw ArgumentError("one_hot: index out of range");
  std::vector<double> v(n, 0.0);
  v[index] = 1.0;
  return v;
}

int decode_one_hot(std::span<const double> obs) {
  int found = -1;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i] == 0.0) continue;
    if (obs[i] != 1.0 || found >= 0) throw ArgumentError("observation is not one-hot");
    found = static_cast<int>(i);
  }
  if (found < 0) throw ArgumentError("observation is not one-hot");
  return found;
}

EnvInstance::EnvInstance(EnvSpec spec) : spec_(std::move(spec)) {
  if (spec_.kind != EnvKind::kPointmass && !spec_.mdp) {
    throw ValidationError("discrete environment without a tabular model");
  }
}

Observation EnvInstance::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  started_ = true;
  done_ = false;
  t_ = 0;
  if (spec_.kind == EnvKind::kPointmass) {
    x_ = rng_.uniform(-1.0, 1.0);
    v_ = 0.0;
  } else {
    state_ = rng_.categorical(spec_.mdp->initial);
  }
  return observe();
}

Observation EnvInstance::reset_to_state(int state, std::uint64_t seed) {
  if (spec_.kind == EnvKind::kPointmass) throw ArgumentError("pointmass has no discrete state");
  if (state < 0 || state >= spec_.mdp->n_states) throw ArgumentError("start state out of range");
  if (spec_.kind == EnvKind::kGridworld && gridworld_is_wall(state)) {
    throw ArgumentError("cannot start inside a wall");
  }
  reset(seed);
  state_ = state;
  return observe();
}

Observation EnvInstance::reset_to_position(double x, std::uint64_t seed) {
  if (spec_.kind != EnvKind::kPointmass) throw ArgumentError("only the pointmass has a position");
  if (!(std::abs(x) <= kPointBound)) throw ArgumentError("start position out of range");
  reset(seed);
  x_ = x;
  return observe();
}

Observation EnvInstance::observe() const {
  if (spec_.kind == EnvKind::kPointmass) return {x_, v_};
  return one_hot(state_, spec_.mdp->n_states);
}

StepResult EnvInstance::step(const Action& action) {
  if (!started_) throw StateError("step called before reset");
  if (done_) throw StateError("step called on a finished episode");
  StepResult out;

  if (spec_.kind == EnvKind::kPointmass) {
    const auto* a = std::get_if<std::vector<double>>(&action);
    if (a == nullptr || a->size() != 1) {
      throw ArgumentError("pointmass expects a 1-D continuous action");
    }
    if (!std::isfinite((*a)[0])) throw ArgumentError("pointmass action is not finite");
    const double u = std::clamp((*a)[0], -1.0, 1.0);
    const double x_next = std::clamp(x_ + kPointDt * u, -kPointBound, kPointBound);
    v_ = (x_next - x_) / kPointDt;
    x_ = x_next;
    out.reward = -x_ * x_;
  } else {
    const auto* a = std::get_if<int>(&action);
    const TabularMdp& mdp = *spec_.mdp;
    if (a == nullptr || *a < 0 || *a >= mdp.n_actions) {
      throw ArgumentError("invalid discrete action for " + spec_.id);
    }
    if (spec_.kind == EnvKind::kGridworld) {
      const int next = gridworld_move(state_, *a);
      out.reward = next == kGridGoal ? kGridGoalReward : kGridStepReward;
      state_ = next;
      if (state_ == kGridGoal) done_ = true;
    } else {
      out.reward = mdp.r(state_, *a);
      const std::size_t off =
          (static_cast<std::size_t>(state_) * mdp.n_actions + *a) * mdp.n_states;
      state_ = rng_.categorical(std::span<const double>(mdp.transition).subspan(off, mdp.n_states));
    }
  }
  ++t_;
  if (t_ >= spec_.horizon) done_ = true;
  out.done = done_;
  out.observation = observe();
  return out;
}

void Trajectory::validate() const {
  if (actions.empty()) throw ValidationError("trajectory must contain at least one step");
  if (observations.size() != actions.size()) {
    throw ValidationError("trajectory observation and action counts differ");
  }
  const std::size_t obs_dim = observations.front().size();
  for (const Observation& o : observations) {
    if (o.size() != obs_dim) throw ValidationError("trajectory observation dimensions differ");
  }
  if (final_observation && final_observation->size() != obs_dim) {
    throw ValidationError("final observation dimension differs");
  }
  const bool discrete = std::holds_alternative<int>(actions.front());
  std::size_t act_dim = discrete ? 0 : std::get<std::vector<double>>(actions.front()).size();
  for (const Action& a : actions) {
    if (std::holds_alternative<int>(a) != discrete) {
      throw ValidationError("trajectory mixes discrete and continuous actions");
    }
    if (!discrete && std::get<std::vector<double>>(a).size() != act_dim) {
      throw ValidationError("trajectory action dimensions differ");
    }
  }
}

Episode rollout(const EnvSpec& spec, const ActionSampler& policy, std::uint64_t seed,
                int max_steps) {
  const int limit = max_steps < 0 ? spec.horizon : std::min(max_steps, spec.horizon);
  if (limit < 1) throw ArgumentError("rollout: step limit must be >= 1");
  EnvInstance env(spec);
  Rng policy_rng(derive_seed(seed, 1));
  Episode ep;
  ep.trajectory.env = spec.id;
  Observation obs = env.reset(derive_seed(seed, 0));
  for (int t = 0; t < limit && !env.done(); ++t) {
    Action a = policy(obs, t, policy_rng);
    StepResult res = env.step(a);
    ep.trajectory.observations.push_back(std::move(obs));
    ep.trajectory.actions.push_back(std::move(a));
    ep.total_reward += res.reward;
    obs = std::move(res.observation);
  }
  ep.trajectory.final_observation = std::move(obs);
  return ep;
}

}  // namespace asaf
