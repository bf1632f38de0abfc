#ifndef ASAF_POLICIES_HPP_
#define ASAF_POLICIES_HPP_

#include <span>
#include <vector>

#include "asaf/envs.hpp"
#include "asaf/numkit.hpp"

namespace asaf {

enum class PolicyKind { kCategorical, kGaussian };

// log pi(a|s) together with what is needed to backpropagate it later.
struct LogProbTape {
  double log_prob = 0.0;
  GradTape tape;
  std::vector<double> dlogp_dout;  // d log pi / d net output
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Learnable stochastic policy backed by one Mlp.
//
// Categorical: the net maps an observation to n_actions scores Q(s, .) and
//   pi(a|s) = exp(Q(s,a) - logsumexp(Q(s,.))).
// Gaussian: the net maps an observation to [mu (d), raw log-std (d)]; the
//   log-std is clamped to [kLogStdMin, kLogStdMax] and the density is an
//   unsquashed diagonal normal.
//
// Copies are deep, so a copy is a frozen snapshot.
class Policy {
 public:
  Policy() = default;
  static Policy categorical(Mlp net);
  static Policy gaussian(Mlp net);

  // Freshly initialized policy sized for an environment.
  static Policy for_env(const EnvSpec& env, std::span<const int> hidden, Rng& rng);

  PolicyKind kind() const { return kind_; }
  ActionKind action_kind() const {
    return kind_ == PolicyKind::kCategorical ? ActionKind::kDiscrete : ActionKind::kContinuous;
  }
  int obs_dim() const { return net_.input_dim(); }
  int n_actions() const { return kind_ == PolicyKind::kCategorical ? net_.output_dim() : 0; }
  int action_dim() const { return kind_ == PolicyKind::kGaussian ? net_.output_dim() / 2 : 0; }

  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }

  double log_prob(const Observation& obs, const Action& action) const;
  LogProbTape log_prob_tape(const Observation& obs, const Action& action) const;
  // Adds scale * d log pi / d theta into grad for a previously recorded tape.
  void accumulate(const LogProbTape& rec, double scale, std::span<double> grad) const;
  // Returns log pi(action|obs) and adds scale * d log pi / d theta into grad.
  double log_prob_accumulate(const Observation& obs, const Action& action, double scale,
                             std::span<double> grad) const;

  // Categorical only: full probability vector.
  std::vector<double> probs(const Observation& obs) const;
  // Gaussian only: mean and clamped log-std.
  void gaussian_params(const Observation& obs, std::vector<double>& mean,
                       std::vector<double>& log_std) const;
  // Categorical only: most probable action.
  int greedy(const Observation& obs) const;

  Action sample(const Observation& obs, Rng& rng) const;

  Policy snapshot() const { return *this; }
  ActionSampler sampler() const;

 private:
  Policy(PolicyKind kind, Mlp net);
  void check_action(const Action& action) const;

  PolicyKind kind_ = PolicyKind::kCategorical;
  Mlp net_;
};

// Probability table of a categorical policy over one-hot encoded states.
PolicyTable tabular_policy_extract(const Policy& policy, int n_states);

}  // namespace asaf

#endif  // ASAF_POLICIES_HPP_
