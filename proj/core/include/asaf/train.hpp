#ifndef ASAF_TRAIN_HPP_
#define ASAF_TRAIN_HPP_

// Training loops.
//
// ASAF and its windowed variants alternate two steps per outer iteration:
// collect episodes with the frozen generator policy, then fit the learner
// policy by minimizing the structured-discriminator BCE against expert
// windows. The learner then becomes the next generator. No reward signal is
// used anywhere in this loop; rewards are read only by evaluate_policy.
//
// ASQF runs the same loop over transitions with a score model f~ and takes
// the generator as softmax(f~). BC is plain maximum likelihood on expert
// transitions.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asaf/discriminator.hpp"
#include "asaf/envs.hpp"
#include "asaf/numkit.hpp"
#include "asaf/policies.hpp"

namespace asaf {

enum class Algorithm { kAsaf, kAsafW, kAsaf1, kAsqf, kBc };

std::string_view to_string(Algorithm algo);
// Throws ConfigError for unknown names.
Algorithm parse_algorithm(std::string_view name);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kAsaf;
  int window = 1;        // asaf_w only
  int stride = 1;        // asaf_w only
  double lr = 1e-3;      // discriminator learning rate
  // Trajectories (asaf, asaf_w) or transitions (asaf_1, asqf, bc) per minibatch.
  int batch = 10;
  int episodes_per_update = 10;
  int epochs = 50;
  double clip = 1.0;
  ClipMode clip_mode = ClipMode::kNorm;
  int steps = 0;         // outer iterations M
  int eval_episodes = 20;
  int eval_interval = 1;
  std::uint64_t seed = 0;
  std::vector<int> hidden;

  // Throws ConfigError on any invariant violation. asaf_1 requires
  // window = stride = 1 (the defaults).
  void validate() const;
};

// Expert demonstrations for one environment.
struct DemoSet {
  std::string env;
  std::vector<Trajectory> trajectories;
  double mean_return = 0.0;
  std::string generator;

  // Non-empty, all trajectories valid and of one action kind.
  void validate() const;
};

// Checks that demos belong to env and have matching dimensions. Throws ValidationError.
void check_demos_match_env(const DemoSet& demos, const EnvSpec& env);

struct RunLogRow {
  int step = 0;                 // outer iterations completed
  long long env_steps = 0;      // transitions collected for training so far
  double mean_return = 0.0;
  double std_return = 0.0;
  double bce_loss = 0.0;        // mean minibatch loss over the outer step
  double first_batch_loss = 0.0;  // loss of the first minibatch after the snapshot
  std::optional<double> js_to_expert;  // tabular envs with a known expert only
  std::uint64_t eval_seed = 0;         // seed passed to evaluate_policy for this row
};

struct RunLog {
  std::vector<RunLogRow> rows;
  long long total_env_steps = 0;
  // Lengths of every collected training episode, in collection order.
  std::vector<int> episode_lengths;
};

struct TrainResult {
  Policy policy;
  RunLog log;
  std::optional<AsqfModel> asqf_model;
};

struct EvalStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> returns;
};

// Seed of the evaluation run logged after `completed_steps` outer iterations.
std::uint64_t eval_seed(const TrainConfig& cfg, int completed_steps);

// K seeded stochastic rollouts; undiscounted returns.
EvalStats evaluate_policy(const Policy& policy, const EnvSpec& env, int episodes,
                          std::uint64_t seed);

// Optional hooks. `expert` (stage-indexed or stationary table) enables the
// exact js_to_expert column on tabular envs. `on_row` sees each log row as it
// is produced.
struct TrainHooks {
  std::optional<PolicyTable> expert;
  std::function<void(const RunLogRow&)> on_row;
};

TrainResult asaf_train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                       const TrainHooks& hooks = {});
TrainResult asqf_train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                       const TrainHooks& hooks = {});
TrainResult bc_train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                     const TrainHooks& hooks = {});
// Dispatches on cfg.algorithm.
TrainResult train(const TrainConfig& cfg, const DemoSet& demos, const EnvSpec& env,
                  const TrainHooks& hooks = {});

// Expert demonstrations from the exact oracle for env: soft value iteration
// (tabular, gridworld) or the scripted controller (pointmass).
DemoSet generate_expert_demos(const EnvSpec& env, int n_trajectories, double alpha,
                              std::uint64_t seed);
// The oracle expert as a sampler, for evaluation.
ActionSampler expert_sampler(const EnvSpec& env, double alpha);
// Exact expert table for the discrete envs.
PolicyTable expert_table(const EnvSpec& env, double alpha);

}  // namespace asaf

#endif  // ASAF_TRAIN_HPP_
