#include "asaf/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "asaf/error.hpp"
#include "asaf/eval.hpp"

namespace asaf {
namespace {

// Independent RNG streams under one run seed.
constexpr std::uint64_t kStreamInit = 0;
constexpr std::uint64_t kStreamCollect = 1;
constexpr std::uint64_t kStreamShuffle = 2;
constexpr std::uint64_t kStreamEval = 3;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return derive_seed(derive_seed(seed, stream), index);
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  // Fisher-Yates on our own RNG so the order does not depend on the stdlib.
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

// Cycles through a reshuffled index range; falls back to sampling with
// replacement when a request is larger than the pool.
class ExpertStream {
 public:
  ExpertStream(std::size_t n, Rng& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  void start_epoch() {
    shuffle(order_, rng_);
    cursor_ = 0;
  }

  std::vector<std::size_t> take(std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(k);
    if (k > order_.size()) {
      for (std::size_t i = 0; i < k; ++i) out.push_back(rng_.uniform_index(order_.size()));
      return out;
    }
    if (cursor_ + k > order_.size()) start_epoch();
    out.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
               order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + k));
    cursor_ += k;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  Rng& rng_;
  std::size_t cursor_ = 0;
};

// Loss on one minibatch given expert and generated window indices.
using BatchLoss = std::function<LossAndGrad(std::span<const std::size_t> expert_idx,
                                            std::span<const std::size_t> generated_idx)>;

struct EpochStats {
  double mean_loss = 0.0;
  double first_loss = 0.0;
  int batches = 0;
};

// `epochs` passes over the generated windows in minibatches of `batch`, each
// paired with as many expert windows. One clipped Adam step per minibatch.
EpochStats fit_epochs(const TrainConfig& cfg, std::size_t n_expert, std::size_t n_generated,
                      const BatchLoss& loss_fn, const std::function<std::span<double>()>& params,
                      AdamState& adam, Rng& rng) {
  EpochStats stats;
  if (n_expert == 0 || n_generated == 0) return stats;
  ExpertStream expert(n_expert, rng);
  std::vector<std::size_t> gen_order(n_generated);
  std::iota(gen_order.begin(), gen_order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch);
  double total = 0.0;
  for (int e = 0; e < cfg.epochs; ++e) {
    shuffle(gen_order, rng);
    expert.start_epoch();
    for (std::size_t b = 0; b < n_generated; b += batch) {
      const std::size_t end = std::min(n_generated, b + batch);
      std::span<const std::size_t> gen_idx(gen_order.data() + b, end - b);
      const std::vector<std::size_t> exp_idx = expert.take(gen_idx.size());
      LossAndGrad lg = loss_fn(exp_idx, gen_idx);
      if (stats.batches == 0) stats.first_loss = lg.loss;
      total += lg.loss;
      ++stats.batches;
      clip_grad(lg.grad, cfg.clip, cfg.clip_mode);
      adam_step(adam, params(), lg.grad, cfg.lr);
    }
  }
  if (stats.batches > 0) stats.mean_loss = total / stats.batches;
  return stats;
}

std::vector<Trajectory> collect(const EnvSpec& env, const Policy& generator, const TrainConfig& cfg,
                                int step, RunLog& log) {
  std::vector<Trajectory> pool;
  pool.reserve(static_cast<std::size_t>(cfg.episodes_per_update));
  const ActionSampler sampler = generator.sampler();
  const std::uint64_t base = stream_seed(cfg.seed, kStreamCollect, static_cast<std::uint64_t>(step));
  for (int i = 0; i < cfg.episodes_per_update; ++i) {
    Episode ep = rollout(env, sampler, derive_seed(base, static_cast<std::uint64_t>(i)));
    const auto len = static_cast<int>(ep.trajectory.size());
    log.episode_lengths.push_back(len);
    log.total_env_steps += len;
    pool.push_back(std::move(ep.trajectory));
  }
  return pool;
}

std::vector<Window> select(std::span<const Window> windows, std::span<const std::size_t> idx) {
  std::vector<Window> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(windows[i]);
  return out;
}

std::vector<double> select(std::span<const double> values, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(values[i]);
  return out;
}

std::vector<double> window_log_probs(const Policy& policy, std::span<const Trajectory> pool,
                                     std::span<const Window> windows) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (const Window& w : windows) out.push_back(window_log_prob(policy, pool[w.source], w));
  return out;
}

// Shared evaluation and logging for every algorithm.
class Logger {
 public:
  Logger(const TrainConfig& cfg, const EnvSpec& env, const TrainHooks& hooks, RunLog& log)
      : cfg_(cfg), env_(env), hooks_(hooks), log_(log) {
    if (hooks.expert && env.mdp && env.kind == EnvKind::kTabular) {
      expert_dist_ = exact_traj_distribution(*env.mdp, *hooks.expert);
      have_expert_ = true;
    }
  }

  bool due(int step) const {
    return (step + 1) % cfg_.eval_interval == 0 || step + 1 == cfg_.steps;
  }

  void record(int step, const Policy& policy, const EpochStats& stats) {
    RunLogRow row;
    row.step = step + 1;
    row.env_steps = log_.total_env_steps;
    row.eval_seed = eval_seed(cfg_, row.step);
    const EvalStats ev = evaluate_policy(policy, env_, cfg_.eval_episodes, row.eval_seed);
    row.mean_return = ev.mean;
    row.std_return = ev.std;
    row.bce_loss = stats.mean_loss;
    row.first_batch_loss = stats.first_loss;
    if (have_expert_ && policy.kind() == PolicyKind::kCategorical) {
      const PolicyTable learner = tabular_policy_extract(policy, env_.mdp->n_states);
      row.js_to_expert = trajectory_js(expert_dist_, exact_traj_distribution(*env_.mdp, learner));
    }
    log_.rows.push_back(row);
    if (hooks_.on_row) hooks_.on_row(row);
  }

 private:
  const TrainConfig& cfg_;
  const EnvSpec& env_;
  const TrainHooks& hooks_;
  RunLog& log_;
  TrajDistribution expert_dist_;
  bool have_expert_ = false;
};

void prepare(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env) {
  cfg.validate();
  demos.validate();
  check_demos_match_env(demos, env);
}

}  // namespace

std::uint64_t eval_seed(const TrainConfig& cfg, int completed_steps) {
  return stream_seed(cfg.seed, kStreamEval, static_cast<std::uint64_t>(completed_steps));
}

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kAsaf: return "asaf";
    case Algorithm::kAsafW: return "asaf_w";
    case Algorithm::kAsaf1: return "asaf_1";
    case Algorithm::kAsqf: return "asqf";
    case Algorithm::kBc: return "bc";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kAsaf, Algorithm::kAsafW, Algorithm::kAsaf1, Algorithm::kAsqf,
                      Algorithm::kBc}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (algorithm == Algorithm::kAsaf1 && (window != 1 || stride != 1)) {
    throw ConfigError("asaf_1 requires window = stride = 1");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (episodes_per_update < 1) throw ConfigError("episodes_per_update must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(clip > 0.0)) throw ConfigError("clip must be positive");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  }
}

void DemoSet::validate() const {
  if (trajectories.empty()) throw ValidationError("demo set is empty");
  const bool discrete = !trajectories.front().actions.empty() &&
                        std::holds_alternative<int>(trajectories.front().actions.front());
  for (const Trajectory& t : trajectories) {
    t.validate();
    if (t.size() == 0) throw ValidationError("demo trajectory is empty");
    for (const Action& a : t.actions) {
      if (std::holds_alternative<int>(a) != discrete) {
        throw ValidationError("demo set mixes discrete and continuous actions");
      }
    }
  }
}

void check_demos_match_env(const DemoSet& demos, const EnvSpec& env) {
  if (demos.env != env.id) {
    throw ValidationError("demos were recorded on '" + demos.env + "', not '" + env.id + "'");
  }
  const auto obs_dim = static_cast<std::size_t>(env.obs_dim());
  for (const Trajectory& t : demos.trajectories) {
    if (static_cast<int>(t.size()) > env.horizon) {
      throw ValidationError("demo trajectory is longer than the env horizon");
    }
    for (const Observation& o : t.observations) {
      if (o.size() != obs_dim) throw ValidationError("demo observation dimension mismatch");
    }
    for (const Action& a : t.actions) {
      if (env.action_kind() == ActionKind::kDiscrete) {
        const int* id = std::get_if<int>(&a);
        if (id == nullptr || *id < 0 || *id >= env.n_actions()) {
          throw ValidationError("demo action is not a valid discrete action");
        }
      } else {
        const auto* v = std::get_if<std::vector<double>>(&a);
        if (v == nullptr || v->size() != static_cast<std::size_t>(env.action_dim())) {
          throw ValidationError("demo action dimension mismatch");
        }
      }
    }
  }
}

EvalStats evaluate_policy(const Policy& policy, const EnvSpec& env, int episodes,
                          std::uint64_t seed) {
  if (episodes < 1) throw ArgumentError("evaluate_policy: episodes must be >= 1");
  EvalStats out;
  out.returns.reserve(static_cast<std::size_t>(episodes));
  const ActionSampler sampler = policy.sampler();
  for (int k = 0; k < episodes; ++k) {
    out.returns.push_back(
        rollout(env, sampler, derive_seed(seed, static_cast<std::uint64_t>(k))).total_reward);
  }
  out.mean = std::accumulate(out.returns.begin(), out.returns.end(), 0.0) / episodes;
  double ss = 0.0;
  for (double r : out.returns) ss += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(ss / episodes);
  return out;
}

TrainResult asaf_train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                       const TrainHooks& hooks) {
  if (cfg.algorithm != Algorithm::kAsaf && cfg.algorithm != Algorithm::kAsafW &&
      cfg.algorithm != Algorithm::kAsaf1) {
    throw ConfigError("asaf_train: algorithm must be asaf, asaf_w or asaf_1");
  }
  prepare(cfg, demos, env);

  auto make_windows = [&](std::span<const Trajectory> pool) {
    switch (cfg.algorithm) {
      case Algorithm::kAsafW:
        return split_pool(pool, static_cast<std::size_t>(cfg.window),
                          static_cast<std::size_t>(cfg.stride));
      case Algorithm::kAsaf1: return split_pool(pool, 1, 1);
      default: return full_windows(pool);
    }
  };

  Rng init_rng(derive_seed(cfg.seed, kStreamInit));
  TrainResult result{Policy::for_env(env, cfg.hidden, init_rng), {}, std::nullopt};
  Policy& learner = result.policy;
  AdamState adam(learner.net().num_params());
  Logger logger(cfg, env, hooks, result.log);

  const std::span<const Trajectory> expert_pool(demos.trajectories);
  const std::vector<Window> expert_windows = make_windows(expert_pool);

  for (int m = 0; m < cfg.steps; ++m) {
    // The generator is a frozen copy for the whole outer step.
    const Policy generator = learner.snapshot();
    const std::vector<Trajectory> gen_pool = collect(env, generator, cfg, m, result.log);
    const std::vector<Window> gen_windows = make_windows(gen_pool);
    const std::vector<double> expert_g = window_log_probs(generator, expert_pool, expert_windows);
    const std::vector<double> gen_g = window_log_probs(generator, gen_pool, gen_windows);

    BatchLoss loss_fn = [&](std::span<const std::size_t> ei, std::span<const std::size_t> gi) {
      const std::vector<Window> ew = select(expert_windows, ei);
      const std::vector<Window> gw = select(gen_windows, gi);
      const std::vector<double> eg = select(expert_g, ei);
      const std::vector<double> gg = select(gen_g, gi);
      return bce_loss_cached(learner, WindowBatch{expert_pool, ew}, eg,
                             WindowBatch{gen_pool, gw}, gg);
    };
    Rng rng(stream_seed(cfg.seed, kStreamShuffle, static_cast<std::uint64_t>(m)));
    const EpochStats stats =
        fit_epochs(cfg, expert_windows.size(), gen_windows.size(), loss_fn,
                   [&] { return learner.mutable_net().mutable_params(); }, adam, rng);
    if (logger.due(m)) logger.record(m, learner, stats);
  }
  return result;
}

TrainResult asqf_train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                       const TrainHooks& hooks) {
  if (cfg.algorithm != Algorithm::kAsqf) throw ConfigError("asqf_train: algorithm must be asqf");
  prepare(cfg, demos, env);

  Rng init_rng(derive_seed(cfg.seed, kStreamInit));
  AsqfModel model = AsqfModel::for_env(env, cfg.hidden, init_rng);
  AdamState adam(model.net.num_params());
  TrainResult result{asqf_extract_policy(model), {}, std::nullopt};
  Logger logger(cfg, env, hooks, result.log);

  const std::span<const Trajectory> expert_pool(demos.trajectories);
  const std::vector<Window> expert_windows = split_pool(expert_pool, 1, 1);

  for (int m = 0; m < cfg.steps; ++m) {
    const Policy generator = asqf_extract_policy(model);
    const std::vector<Trajectory> gen_pool = collect(env, generator, cfg, m, result.log);
    const std::vector<Window> gen_windows = split_pool(gen_pool, 1, 1);

    BatchLoss loss_fn = [&](std::span<const std::size_t> ei, std::span<const std::size_t> gi) {
      const std::vector<Window> ew = select(expert_windows, ei);
      const std::vector<Window> gw = select(gen_windows, gi);
      return asqf_bce_loss(model, generator, WindowBatch{expert_pool, ew},
                           WindowBatch{gen_pool, gw});
    };
    Rng rng(stream_seed(cfg.seed, kStreamShuffle, static_cast<std::uint64_t>(m)));
    const EpochStats stats =
        fit_epochs(cfg, expert_windows.size(), gen_windows.size(), loss_fn,
                   [&] { return model.net.mutable_params(); }, adam, rng);
    result.policy = asqf_extract_policy(model);
    if (logger.due(m)) logger.record(m, result.policy, stats);
  }
  result.asqf_model = std::move(model);
  return result;
}

TrainResult bc_train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                     const TrainHooks& hooks) {
  if (cfg.algorithm != Algorithm::kBc) throw ConfigError("bc_train: algorithm must be bc");
  prepare(cfg, demos, env);

  Rng init_rng(derive_seed(cfg.seed, kStreamInit));
  TrainResult result{Policy::for_env(env, cfg.hidden, init_rng), {}, std::nullopt};
  Policy& policy = result.policy;
  AdamState adam(policy.net().num_params());
  Logger logger(cfg, env, hooks, result.log);

  const std::span<const Trajectory> pool(demos.trajectories);
  const std::vector<Window> windows = split_pool(pool, 1, 1);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch);

  for (int m = 0; m < cfg.steps; ++m) {
    Rng rng(stream_seed(cfg.seed, kStreamShuffle, static_cast<std::uint64_t>(m)));
    EpochStats stats;
    double total = 0.0;
    for (int e = 0; e < cfg.epochs; ++e) {
      shuffle(order, rng);
      for (std::size_t b = 0; b < order.size(); b += batch) {
        const std::size_t end = std::min(order.size(), b + batch);
        const std::vector<Window> w =
            select(windows, std::span<const std::size_t>(order.data() + b, end - b));
        LossAndGrad lg = bc_loss(policy, WindowBatch{pool, w});
        if (stats.batches == 0) stats.first_loss = lg.loss;
        total += lg.loss;
        ++stats.batches;
        clip_grad(lg.grad, cfg.clip, cfg.clip_mode);
        adam_step(adam, policy.mutable_net().mutable_params(), lg.grad, cfg.lr);
      }
    }
    if (stats.batches > 0) stats.mean_loss = total / stats.batches;
    if (logger.due(m)) logger.record(m, policy, stats);
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                  const TrainHooks& hooks) {
  switch (cfg.algorithm) {
    case Algorithm::kAsqf: return asqf_train(cfg, demos, env, hooks);
    case Algorithm::kBc: return bc_train(cfg, demos, env, hooks);
    default: return asaf_train(cfg, demos, env, hooks);
  }
}

PolicyTable expert_table(const EnvSpec& env, double alpha) {
  if (!env.mdp) throw UnsupportedError("expert_table: env has no tabular view");
  return maxent_policy_table(soft_value_iteration(*env.mdp, alpha));
}

ActionSampler expert_sampler(const EnvSpec& env, double alpha) {
  if (env.kind == EnvKind::kPointmass) {
    return [](const Observation& obs, int, Rng&) -> Action {
      return scripted_pointmass_expert(obs);
    };
  }
  auto table = std::make_shared<const PolicyTable>(expert_table(env, alpha));
  return [table](const Observation& obs, int t, Rng& rng) -> Action {
    return static_cast<int>(rng.categorical(table->row(t, decode_one_hot(obs))));
  };
}

DemoSet generate_expert_demos(const EnvSpec& env, int n_trajectories, double alpha,
                              std::uint64_t seed) {
  if (n_trajectories < 1) throw ValidationError("generate_expert_demos: n must be >= 1");
  DemoSet out;
  out.env = env.id;
  out.generator = env.kind == EnvKind::kPointmass
                      ? std::string("scripted")
                      : "soft_value_iteration alpha=" + std::to_string(alpha);
  const ActionSampler sampler = expert_sampler(env, alpha);
  double total = 0.0;
  for (int i = 0; i < n_trajectories; ++i) {
    Episode ep = rollout(env, sampler, derive_seed(seed, static_cast<std::uint64_t>(i)));
    total += ep.total_reward;
    out.trajectories.push_back(std::move(ep.trajectory));
  }
  out.mean_return = total / n_trajectories;
  return out;
}

}  // namespace asaf
