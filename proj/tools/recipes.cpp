#include "recipes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "asaf/discriminator.hpp"
#include "asaf/error.hpp"
#include "asaf/eval.hpp"
#include "asaf/numkit.hpp"

namespace asaf::recipes {
namespace {

constexpr int kReturnEvalEpisodes = 500;
constexpr std::uint64_t kReturnEvalSeed = 777;

std::vector<double> random_params(std::size_t n, double scale, Rng& rng) {
  std::vector<double> out(n);
  for (double& x : out) x = rng.uniform(-scale, scale);
  return out;
}

// Mean return of the oracle expert over the same episodes used for the learner.
double expert_return(const EnvSpec& env, double alpha) {
  const ActionSampler expert = expert_sampler(env, alpha);
  double total = 0.0;
  for (int k = 0; k < kReturnEvalEpisodes; ++k) {
    total += rollout(env, expert, derive_seed(kReturnEvalSeed, static_cast<std::uint64_t>(k)))
                 .total_reward;
  }
  return total / kReturnEvalEpisodes;
}

double relative_return_gap(const Policy& policy, const EnvSpec& env, double alpha) {
  const double expert = expert_return(env, alpha);
  const double learner = evaluate_policy(policy, env, kReturnEvalEpisodes, kReturnEvalSeed).mean;
  return std::abs(learner - expert) / std::abs(expert);
}

std::vector<Trajectory> sample_pool(const EnvSpec& env, const ActionSampler& sampler, int n,
                                    std::uint64_t seed) {
  std::vector<Trajectory> pool;
  for (int i = 0; i < n; ++i) {
    pool.push_back(rollout(env, sampler, derive_seed(seed, static_cast<std::uint64_t>(i))).trajectory);
  }
  return pool;
}

std::vector<Window> first_windows(std::span<const Trajectory> pool, std::size_t w, std::size_t n) {
  std::vector<Window> all = split_pool(pool, w, 1);
  if (all.size() > n) all.resize(n);
  return all;
}

// Worst relative error over `points` random parameter vectors.
double worst_grad_error(std::size_t n_params, double scale, int points, std::uint64_t seed,
                        const GradFn& f) {
  Rng rng(seed);
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    worst = std::max(worst, grad_check(f, random_params(n_params, scale, rng)));
  }
  return worst;
}

}  // namespace

Check make_check(std::string name, double value, double threshold) {
  return Check{std::move(name), value, threshold, value < threshold};
}

bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::uint64_t demo_seed(std::uint64_t seed) { return derive_seed(seed, 0x64656d6fULL); }

TrainConfig chain_asaf(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.algorithm = Algorithm::kAsaf;
  cfg.lr = 1e-3;
  cfg.batch = 40;
  cfg.episodes_per_update = 40;
  cfg.epochs = 20;
  cfg.steps = 200;
  cfg.eval_episodes = 10;
  cfg.eval_interval = 10;
  cfg.seed = seed;
  return cfg;
}

TrainConfig chain_asqf(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.algorithm = Algorithm::kAsqf;
  cfg.lr = 1e-2;
  cfg.batch = 20;
  cfg.episodes_per_update = 10;
  cfg.epochs = 10;
  cfg.steps = 100;
  cfg.eval_episodes = 10;
  cfg.eval_interval = 10;
  cfg.seed = seed;
  return cfg;
}

TrainConfig gridworld_asqf(std::uint64_t seed) {
  TrainConfig cfg = chain_asqf(seed);
  cfg.steps = 300;
  cfg.eval_interval = 50;
  return cfg;
}

TrainConfig pointmass_asaf1(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.algorithm = Algorithm::kAsaf1;
  cfg.lr = 3e-3;
  cfg.batch = 50;
  cfg.episodes_per_update = 10;
  cfg.epochs = 10;
  cfg.steps = 300;
  cfg.eval_episodes = 20;
  cfg.eval_interval = 50;
  cfg.hidden = {32};
  cfg.seed = seed;
  return cfg;
}

std::vector<Check> lemma1() {
  constexpr std::array<double, 3> kExpert = {0.7, 0.2, 0.1};
  const std::array<std::array<double, 3>, 3> generators = {{
      {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
      {0.1, 0.2, 0.7},
      {0.05, 0.9, 0.05},
  }};
  std::vector<Check> out;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const double gap = verify_lemma1(kExpert, generators[i], 5000, 0.1);
    out.push_back(make_check("lemma1 l1 gap, generator " + std::to_string(i), gap, 1e-2));
  }
  return out;
}

std::vector<Check> theorem1(int n_seeds) {
  const EnvSpec env = make_env("chain");
  TrainHooks hooks;
  hooks.expert = expert_table(env, kChainAlpha);
  std::vector<Check> out;
  for (int s = 0; s < n_seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const DemoSet demos = generate_expert_demos(env, kChainDemos, kChainAlpha, demo_seed(seed));
    const TrainResult r = train(chain_asaf(seed), demos, env, hooks);
    out.push_back(make_check("chain asaf trajectory js, seed " + std::to_string(s),
                             r.log.rows.back().js_to_expert.value(), 1e-2));
  }
  return out;
}

std::vector<Check> gradients(int points) {
  const EnvSpec chain = make_env("chain");
  const EnvSpec point = pointmass_env(8);
  Rng init(12345);
  const std::vector<int> hidden{6};

  // Discrete pools from two unrelated policies.
  const Policy chain_gen = Policy::for_env(chain, hidden, init);
  const std::vector<Trajectory> chain_expert =
      generate_expert_demos(chain, 6, kChainAlpha, 1).trajectories;
  const std::vector<Trajectory> chain_generated = sample_pool(chain, chain_gen.sampler(), 6, 2);
  const std::vector<Window> ew = first_windows(chain_expert, 3, 6);
  const std::vector<Window> gw = first_windows(chain_generated, 3, 6);
  const std::vector<Window> e1 = first_windows(chain_expert, 1, 8);
  const std::vector<Window> g1 = first_windows(chain_generated, 1, 8);

  // Continuous pools with moderate log-std so the clamp stays inactive.
  const Policy point_gen = Policy::for_env(point, hidden, init);
  const std::vector<Trajectory> point_expert =
      generate_expert_demos(point, 3, 1.0, 3).trajectories;
  const std::vector<Trajectory> point_generated = sample_pool(point, point_gen.sampler(), 3, 4);
  const std::vector<Window> pew = first_windows(point_expert, 2, 6);
  const std::vector<Window> pgw = first_windows(point_generated, 2, 6);

  std::vector<Check> out;
  {
    Policy learner = Policy::for_env(chain, hidden, init);
    const double err = worst_grad_error(
        learner.net().num_params(), 1.0, points, 101,
        [&](std::span<const double> x, std::span<double> g) {
          learner.mutable_net().set_params(x);
          LossAndGrad lg = bce_loss(learner, chain_gen, {chain_expert, ew}, {chain_generated, gw});
          std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
          return lg.loss;
        });
    out.push_back(make_check("asaf bce gradient, categorical", err, 1e-4));
  }
  {
    Policy learner = Policy::for_env(point, hidden, init);
    const double err = worst_grad_error(
        learner.net().num_params(), 0.4, points, 102,
        [&](std::span<const double> x, std::span<double> g) {
          learner.mutable_net().set_params(x);
          LossAndGrad lg =
              bce_loss(learner, point_gen, {point_expert, pew}, {point_generated, pgw});
          std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
          return lg.loss;
        });
    out.push_back(make_check("asaf bce gradient, gaussian", err, 1e-4));
  }
  {
    AsqfModel model = AsqfModel::for_env(chain, hidden, init);
    const double err = worst_grad_error(
        model.net.num_params(), 1.0, points, 103,
        [&](std::span<const double> x, std::span<double> g) {
          model.net.set_params(x);
          LossAndGrad lg = asqf_bce_loss(model, chain_gen, {chain_expert, e1}, {chain_generated, g1});
          std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
          return lg.loss;
        });
    out.push_back(make_check("asqf bce gradient", err, 1e-4));
  }
  {
    Policy learner = Policy::for_env(chain, hidden, init);
    const double err = worst_grad_error(
        learner.net().num_params(), 1.0, points, 104,
        [&](std::span<const double> x, std::span<double> g) {
          learner.mutable_net().set_params(x);
          LossAndGrad lg = bc_loss(learner, {chain_expert, e1});
          std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
          return lg.loss;
        });
    out.push_back(make_check("bc gradient, categorical", err, 1e-4));
  }
  {
    Policy learner = Policy::for_env(point, hidden, init);
    const std::vector<Window> p1 = first_windows(point_expert, 1, 8);
    const double err = worst_grad_error(
        learner.net().num_params(), 0.4, points, 105,
        [&](std::span<const double> x, std::span<double> g) {
          learner.mutable_net().set_params(x);
          LossAndGrad lg = bc_loss(learner, {point_expert, p1});
          std::copy(lg.grad.begin(), lg.grad.end(), g.begin());
          return lg.loss;
        });
    out.push_back(make_check("bc gradient, gaussian", err, 1e-4));
  }
  return out;
}

std::vector<Check> asqf() {
  std::vector<Check> out;
  {
    const EnvSpec env = make_env("chain");
    const PolicyTable expert = expert_table(env, kChainAlpha);
    const DemoSet demos = generate_expert_demos(env, kChainDemos, kChainAlpha, demo_seed(0));
    const TrainResult r = train(chain_asqf(0), demos, env);
    const PolicyTable learner = tabular_policy_extract(r.policy, env.mdp->n_states);
    const std::vector<double> reach =
        exact_traj_distribution(*env.mdp, expert).stage_state_marginals(env.mdp->n_states);
    int mismatches = 0;
    for (int t = 0; t < env.horizon; ++t) {
      for (int s = 0; s < env.mdp->n_states; ++s) {
        if (reach[static_cast<std::size_t>(t) * env.mdp->n_states + s] <= 0.0) continue;
        const auto e = expert.row(t, s);
        const auto l = learner.row(t, s);
        if (std::max_element(e.begin(), e.end()) - e.begin() !=
            std::max_element(l.begin(), l.end()) - l.begin()) {
          ++mismatches;
        }
      }
    }
    out.push_back(make_check("chain asqf argmax mismatches", mismatches, 1.0));
  }
  {
    const EnvSpec env = gridworld_env();
    const DemoSet demos =
        generate_expert_demos(env, kGridworldDemos, kGridworldAlpha, demo_seed(0));
    const TrainResult r = train(gridworld_asqf(0), demos, env);
    out.push_back(make_check("gridworld asqf relative return gap",
                             relative_return_gap(r.policy, env, kGridworldAlpha), 0.1));
  }
  return out;
}

std::vector<Check> pointmass() {
  const EnvSpec env = pointmass_env();
  const DemoSet demos = generate_expert_demos(env, kPointmassDemos, 1.0, demo_seed(0));
  const TrainResult r = train(pointmass_asaf1(0), demos, env);
  return {make_check("pointmass asaf_1 relative return gap", relative_return_gap(r.policy, env, 1.0),
                     0.1)};
}

std::vector<Check> suite(std::string_view name) {
  if (name == "lemma1") return lemma1();
  if (name == "theorem1") return theorem1();
  if (name == "gradients") return gradients();
  if (name == "asqf") return asqf();
  throw ArgumentError("unknown verify suite '" + std::string(name) +
                      "' (expected lemma1, theorem1, gradients or asqf)");
}

}  // namespace asaf::recipes
