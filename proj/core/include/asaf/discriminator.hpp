#ifndef ASAF_DISCRIMINATOR_HPP_
#define ASAF_DISCRIMINATOR_HPP_

// Structured discriminators and their binary cross-entropy losses.
//
// The trajectory discriminator is parameterized by a learnable policy pi~ and a
// frozen generator policy pi_G:
//
//   D(tau) = prod pi~(a|s) / (prod pi~(a|s) + prod pi_G(a|s))
//
// Environment dynamics appear identically in numerator and denominator and
// are never evaluated. Everything is computed from summed log-probabilities
// with a two-term logsumexp, so long windows do not underflow.
//
// The transition-wise ASQF discriminator replaces pi~ by exp f~(s, a) for an
// unnormalized score model f~.

#include <cstddef>
#include <span>
#include <vector>

#include "asaf/envs.hpp"
#include "asaf/policies.hpp"

namespace asaf {

// Contiguous slice [offset, offset + length) of trajectory `source` in a pool.
struct Window {
  std::size_t source = 0;
  std::size_t offset = 0;
  std::size_t length = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

// Windows starting at 0, stride, 2*stride, ... while offset + w <= L. A
// trajectory shorter than w yields a single truncated window of its full
// length. Throws ArgumentError for w == 0 or stride == 0.
std::vector<Window> window_split(const Trajectory& traj, std::size_t w, std::size_t stride,
                                 std::size_t source = 0);

// Whole-trajectory windows for every member of a pool.
std::vector<Window> full_windows(std::span<const Trajectory> pool);
// window_split over every member of a pool.
std::vector<Window> split_pool(std::span<const Trajectory> pool, std::size_t w,
                               std::size_t stride);

// A pool of trajectories plus the windows drawn from it.
struct WindowBatch {
  std::span<const Trajectory> pool;
  std::span<const Window> windows;
};

struct LogD {
  double log_d = 0.0;
  double log_1m_d = 0.0;
};

// log D and log(1 - D) from the two summed log-likelihoods. Throws
// NumericalError if either input is NaN or +inf.
LogD log_d_from_sums(double learner_log_prob, double generator_log_prob);

// Summed log pi(a_t|s_t) over one window.
double window_log_prob(const Policy& policy, const Trajectory& traj, const Window& win);

LogD structured_log_d(const Policy& learner, const Policy& generator, const Trajectory& traj,
                      const Window& win);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// -(1/n) sum log D(expert) - (1/n) sum log(1 - D(generated)), gradient with
// respect to the learner's parameters only. Requires equal, non-empty batches.
LossAndGrad bce_loss(const Policy& learner, const Policy& generator, const WindowBatch& expert,
                     const WindowBatch& generated);

// Same loss with the generator's window log-probabilities supplied by the
// caller (they are constant while the generator is frozen).
LossAndGrad bce_loss_cached(const Policy& learner, const WindowBatch& expert,
                            std::span<const double> expert_generator_log_probs,
                            const WindowBatch& generated,
                            std::span<const double> generated_generator_log_probs);

// Behavioural-cloning loss: -(1/n) sum log pi(a|s) over length-1 windows
// (longer windows contribute every step, averaged per window).
LossAndGrad bc_loss(const Policy& policy, const WindowBatch& batch);

// Score model f~(s, .) for the ASQF discriminator.
struct AsqfModel {
  Mlp net;

  static AsqfModel for_env(const EnvSpec& env, std::span<const int> hidden, Rng& rng);
  std::vector<double> scores(const Observation& obs) const { return net.predict(obs); }
};

// log D with D = exp f~(s,a) / (exp f~(s,a) + pi_G(a|s)). Discrete actions only.
LogD asqf_log_d(const AsqfModel& model, const Policy& generator, const Observation& obs,
                const Action& action);

// BCE over transitions (windows must have length 1), gradient w.r.t. f~.
LossAndGrad asqf_bce_loss(const AsqfModel& model, const Policy& generator,
                          const WindowBatch& expert, const WindowBatch& generated);

// Policy pi(a|s) = softmax_a f~(s, a); a categorical policy sharing f~'s weights.
Policy asqf_extract_policy(const AsqfModel& model);

}  // namespace asaf

#endif  // ASAF_DISCRIMINATOR_HPP_
