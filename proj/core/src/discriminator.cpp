#include "asaf/discriminator.hpp"

#include <cmath>
#include <string>

#include "asaf/error.hpp"

namespace asaf {
namespace {

void check_window(const WindowBatch& batch, const Window& win) {
  if (win.source >= batch.pool.size()) throw ArgumentError("window source out of range");
  const Trajectory& traj = batch.pool[win.source];
  if (win.length == 0 || win.offset + win.length > traj.size()) {
    throw ArgumentError("window exceeds its source trajectory");
  }
}

void check_pair(const WindowBatch& expert, const WindowBatch& generated) {
  if (expert.windows.empty() || generated.windows.empty()) {
    throw ArgumentError("bce_loss: empty batch");
  }
  if (expert.windows.size() != generated.windows.size()) {
    throw ArgumentError("bce_loss: expert and generator batch sizes differ (" +
                        std::to_string(expert.windows.size()) + " vs " +
                        std::to_string(generated.windows.size()) + ")");
  }
}

// Learner log-likelihood of one window with tapes kept for the backward pass.
double record_window(const Policy& learner, const Trajectory& traj, const Window& win,
                     std::vector<LogProbTape>& tapes) {
  tapes.clear();
  double sum = 0.0;
  for (std::size_t t = win.offset; t < win.offset + win.length; ++t) {
    tapes.push_back(learner.log_prob_tape(traj.observations[t], traj.actions[t]));
    sum += tapes.back().log_prob;
  }
  return sum;
}

}  // namespace

std::vector<Window> window_split(const Trajectory& traj, std::size_t w, std::size_t stride,
                                 std::size_t source) {
  if (w == 0) throw ArgumentError("window_split: window size must be >= 1");
  if (stride == 0) throw ArgumentError("window_split: stride must be >= 1");
  const std::size_t len = traj.size();
  std::vector<Window> out;
  if (len == 0) return out;
  if (len < w) {
    out.push_back({source, 0, len});
    return out;
  }
  for (std::size_t off = 0; off + w <= len; off += stride) out.push_back({source, off, w});
  return out;
}

std::vector<Window> full_windows(std::span<const Trajectory> pool) {
  std::vector<Window> out;
  out.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].size() > 0) out.push_back({i, 0, pool[i].size()});
  }
  return out;
}

std::vector<Window> split_pool(std::span<const Trajectory> pool, std::size_t w,
                               std::size_t stride) {
  std::vector<Window> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::vector<Window> part = window_split(pool[i], w, stride, i);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

LogD log_d_from_sums(double learner_log_prob, double generator_log_prob) {
  if (!std::isfinite(learner_log_prob) || !std::isfinite(generator_log_prob)) {
    throw NumericalError("discriminator: non-finite log-probability");
  }
  const double lse = logsumexp2(learner_log_prob, generator_log_prob);
  return {learner_log_prob - lse, generator_log_prob - lse};
}

double window_log_prob(const Policy& policy, const Trajectory& traj, const Window& win) {
  if (win.length == 0 || win.offset + win.length > traj.size()) {
    throw ArgumentError("window exceeds its source trajectory");
  }
  double sum = 0.0;
  for (std::size_t t = win.offset; t < win.offset + win.length; ++t) {
    sum += policy.log_prob(traj.observations[t], traj.actions[t]);
  }
  return sum;
}

LogD structured_log_d(const Policy& learner, const Policy& generator, const Trajectory& traj,
                      const Window& win) {
  return log_d_from_sums(window_log_prob(learner, traj, win),
                         window_log_prob(generator, traj, win));
}

LossAndGrad bce_loss(const Policy& learner, const Policy& generator, const WindowBatch& expert,
                     const WindowBatch& generated) {
  check_pair(expert, generated);
  std::vector<double> expert_g;
  std::vector<double> generated_g;
  expert_g.reserve(expert.windows.size());
  generated_g.reserve(generated.windows.size());
  for (const Window& w : expert.windows) {
    check_window(expert, w);
    expert_g.push_back(window_log_prob(generator, expert.pool[w.source], w));
  }
  for (const Window& w : generated.windows) {
    check_window(generated, w);
    generated_g.push_back(window_log_prob(generator, generated.pool[w.source], w));
  }
  return bce_loss_cached(learner, expert, expert_g, generated, generated_g);
}

LossAndGrad bce_loss_cached(const Policy& learner, const WindowBatch& expert,
                            std::span<const double> expert_generator_log_probs,
                            const WindowBatch& generated,
                            std::span<const double> generated_generator_log_probs) {
  check_pair(expert, generated);
  if (expert_generator_log_probs.size() != expert.windows.size() ||
      generated_generator_log_probs.size() != generated.windows.size()) {
    throw ShapeError("bce_loss: generator log-prob cache does not match the batch");
  }
  const double n = static_cast<double>(expert.windows.size());
  LossAndGrad out;
  out.grad.assign(learner.net().num_params(), 0.0);
  std::vector<LogProbTape> tapes;

  // Expert term: d(-log D)/dA = -(1 - D).
  for (std::size_t i = 0; i < expert.windows.size(); ++i) {
    const Window& w = expert.windows[i];
    check_window(expert, w);
    const double a = record_window(learner, expert.pool[w.source], w, tapes);
    const LogD ld = log_d_from_sums(a, expert_generator_log_probs[i]);
    out.loss -= ld.log_d / n;
    const double scale = -std::exp(ld.log_1m_d) / n;
    for (const LogProbTape& rec : tapes) learner.accumulate(rec, scale, out.grad);
  }
  // Generator term: d(-log(1 - D))/dA = D.
  for (std::size_t i = 0; i < generated.windows.size(); ++i) {
    const Window& w = generated.windows[i];
    check_window(generated, w);
    const double a = record_window(learner, generated.pool[w.source], w, tapes);
    const LogD ld = log_d_from_sums(a, generated_generator_log_probs[i]);
    out.loss -= ld.log_1m_d / n;
    const double scale = std::exp(ld.log_d) / n;
    for (const LogProbTape& rec : tapes) learner.accumulate(rec, scale, out.grad);
  }
  return out;
}

LossAndGrad bc_loss(const Policy& policy, const WindowBatch& batch) {
  if (batch.windows.empty()) throw ArgumentError("bc_loss: empty batch");
  const double n = static_cast<double>(batch.windows.size());
  LossAndGrad out;
  out.grad.assign(policy.net().num_params(), 0.0);
  for (const Window& w : batch.windows) {
    check_window(batch, w);
    const Trajectory& traj = batch.pool[w.source];
    for (std::size_t t = w.offset; t < w.offset + w.length; ++t) {
      const double lp =
          policy.log_prob_accumulate(traj.observations[t], traj.actions[t], -1.0 / n, out.grad);
      out.loss -= lp / n;
    }
  }
  return out;
}

AsqfModel AsqfModel::for_env(const EnvSpec& env, std::span<const int> hidden, Rng& rng) {
  if (env.action_kind() != ActionKind::kDiscrete) {
    throw UnsupportedError("ASQF supports discrete action spaces only");
  }
  std::vector<int> sizes{env.obs_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(env.n_actions());
  return AsqfModel{Mlp::initialized(std::move(sizes), rng)};
}

LogD asqf_log_d(const AsqfModel& model, const Policy& generator, const Observation& obs,
                const Action& action) {
  const int* a = std::get_if<int>(&action);
  if (a == nullptr || generator.kind() != PolicyKind::kCategorical) {
    throw UnsupportedError("ASQF supports discrete action spaces only");
  }
  const std::vector<double> f = model.scores(obs);
  if (*a < 0 || *a >= static_cast<int>(f.size())) throw ArgumentError("ASQF: action out of range");
  return log_d_from_sums(f[*a], generator.log_prob(obs, action));
}

LossAndGrad asqf_bce_loss(const AsqfModel& model, const Policy& generator,
                          const WindowBatch& expert, const WindowBatch& generated) {
  check_pair(expert, generated);
  const double n = static_cast<double>(expert.windows.size());
  LossAndGrad out;
  out.grad.assign(model.net.num_params(), 0.0);

  auto term = [&](const WindowBatch& batch, bool is_expert) {
    for (const Window& w : batch.windows) {
      check_window(batch, w);
      if (w.length != 1) throw ArgumentError("ASQF works on single transitions");
      const Trajectory& traj = batch.pool[w.source];
      const Observation& obs = traj.observations[w.offset];
      const Action& action = traj.actions[w.offset];
      const int* a = std::get_if<int>(&action);
      if (a == nullptr) throw UnsupportedError("ASQF supports discrete action spaces only");
      MlpOutput fwd = model.net.forward(obs);
      if (*a < 0 || *a >= static_cast<int>(fwd.y.size())) {
        throw ArgumentError("ASQF: action out of range");
      }
      const LogD ld = log_d_from_sums(fwd.y[*a], generator.log_prob(obs, action));
      std::vector<double> dy(fwd.y.size(), 0.0);
      if (is_expert) {
        out.loss -= ld.log_d / n;
        dy[*a] = -std::exp(ld.log_1m_d) / n;
      } else {
        out.loss -= ld.log_1m_d / n;
        dy[*a] = std::exp(ld.log_d) / n;
      }
      model.net.backward_accumulate(fwd.tape, dy, out.grad);
    }
  };
  term(expert, true);
  term(generated, false);
  return out;
}

Policy asqf_extract_policy(const AsqfModel& model) { return Policy::categorical(model.net); }

}  // namespace asaf
