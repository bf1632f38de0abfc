#ifndef ASAF_EVAL_HPP_
#define ASAF_EVAL_HPP_

// Exact oracles on tabular MDPs: brute-force trajectory distributions,
// occupancy measures, divergences and a finite-support check of the
// structured-discriminator optimum.

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "asaf/envs.hpp"

namespace asaf {

// One enumerated state-action path s0 a0 s1 a1 ... s_{T-1} a_{T-1} s_T.
struct TrajectoryPath {
  std::vector<int> states;   // T + 1 entries
  std::vector<int> actions;  // T entries
  double prob = 0.0;         // P(tau)
  double policy_factor = 0.0;    // q(tau) = prod pi(a_t|s_t)
  double dynamics_factor = 0.0;  // xi(tau) = P0(s0) prod P(s_{t+1}|s_t,a_t)

  // Interleaved s0, a0, s1, a1, ..., s_T.
  std::vector<int> key() const;
};

// All positive-probability paths of a policy on an MDP, in lexicographic key
// order. Two distributions over the same MDP can be compared key by key.
class TrajDistribution {
 public:
  TrajDistribution() = default;
  explicit TrajDistribution(std::vector<TrajectoryPath> paths) : paths_(std::move(paths)) {}

  const std::vector<TrajectoryPath>& paths() const { return paths_; }
  std::size_t size() const { return paths_.size(); }
  double total_probability() const;

  std::map<std::vector<int>, double> by_key() const;
  // Probability of each action sequence, summed over state paths.
  std::map<std::vector<int>, double> action_marginal() const;
  // Marginal d_t(s) at every stage t in 0..T-1, flat [t][s].
  std::vector<double> stage_state_marginals(int n_states) const;

 private:
  std::vector<TrajectoryPath> paths_;
};

inline constexpr double kEnumerationGuard = 1e7;

// Depth-first enumeration of every path of length mdp.horizon. The policy
// table may be stationary or have exactly mdp.horizon stages. Throws
// CapacityError when |A|^T * |S| exceeds `guard`.
TrajDistribution exact_traj_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                         double guard = kEnumerationGuard);

struct OccupancyTable {
  int n_states = 0;
  int n_actions = 0;
  double z = 0.0;                   // sum_t gamma^t
  std::vector<double> state;        // d(s)
  std::vector<double> state_action; // d(s, a), flat [s][a]

  double d(int s) const { return state[s]; }
  double d(int s, int a) const { return state_action[static_cast<std::size_t>(s) * n_actions + a]; }
};

// Normalized discounted occupancy by forward recursion over stages.
OccupancyTable occupancy(const TabularMdp& mdp, const PolicyTable& policy);
// The same quantity summed out of an enumerated distribution.
OccupancyTable occupancy_from_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                           const TrajDistribution& dist);

// Expected sum of rewards over the horizon, discounted by gamma when
// `discounted` is true.
double expected_return(const TabularMdp& mdp, const PolicyTable& policy, bool discounted = false);

// JS(p, q) = KL(p || m)/2 + KL(q || m)/2 with m = (p + q)/2, in nats.
// Throws ArgumentError for negative entries or mismatched lengths.
double js_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

// JS between two enumerated distributions, aligned on full path keys.
double trajectory_js(const TrajDistribution& p, const TrajDistribution& q);

// L(p~, p_G) = sum_x p_E log D + p_G log(1 - D), D = p~ / (p~ + p_G).
double structured_gan_objective(std::span<const double> p_tilde, std::span<const double> p_expert,
                                std::span<const double> p_generator);

struct Lemma1Result {
  std::vector<double> p_tilde;
  double l1_gap = 0.0;
};

// Gradient ascent on L over softmax logits (initialized at zero) for a fixed
// generator; returns the fitted distribution and its L1 distance to p_E.
Lemma1Result fit_structured_discriminator(std::span<const double> p_expert,
                                          std::span<const double> p_generator, int steps,
                                          double lr);
double verify_lemma1(std::span<const double> p_expert, std::span<const double> p_generator,
                     int steps, double lr);

// Exact expected trajectory BCE, -E_{P_E}[log D] - E_{P_G}[log(1 - D)], for
// tabular learner/generator/expert policies over full-horizon trajectories.
double exact_expected_bce(const TabularMdp& mdp, const PolicyTable& learner,
                          const PolicyTable& generator, const PolicyTable& expert);

}  // namespace asaf

#endif  // ASAF_EVAL_HPP_
