#include "asaf/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "asaf/error.hpp"

namespace asaf {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

Policy::Policy(PolicyKind kind, Mlp net) : kind_(kind), net_(std::move(net)) {}

Policy Policy::categorical(Mlp net) {
  if (net.layer_sizes().empty()) throw ArgumentError("categorical policy needs a network");
  return Policy(PolicyKind::kCategorical, std::move(net));
}

Policy Policy::gaussian(Mlp net) {
  if (net.layer_sizes().empty() || net.output_dim() % 2 != 0) {
    throw ArgumentError("gaussian policy needs a network with 2*action_dim outputs");
  }
  return Policy(PolicyKind::kGaussian, std::move(net));
}

Policy Policy::for_env(const EnvSpec& env, std::span<const int> hidden, Rng& rng) {
  std::vector<int> sizes{env.obs_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  if (env.action_kind() == ActionKind::kDiscrete) {
    sizes.push_back(env.n_actions());
    return categorical(Mlp::initialized(std::move(sizes), rng));
  }
  sizes.push_back(2 * env.action_dim());
  return gaussian(Mlp::initialized(std::move(sizes), rng));
}

void Policy::check_action(const Action& action) const {
  if (kind_ == PolicyKind::kCategorical) {
    const int* a = std::get_if<int>(&action);
    if (a == nullptr) throw ArgumentError("categorical policy got a continuous action");
    if (*a < 0 || *a >= net_.output_dim()) {
      throw ArgumentError("action id " + std::to_string(*a) + " out of range");
    }
  } else {
    const auto* a = std::get_if<std::vector<double>>(&action);
    if (a == nullptr) throw ArgumentError("gaussian policy got a discrete action");
    if (static_cast<int>(a->size()) != action_dim()) {
      throw ShapeError("action dimension " + std::to_string(a->size()) + ", expected " +
                       std::to_string(action_dim()));
    }
  }
}

double Policy::log_prob(const Observation& obs, const Action& action) const {
  check_action(action);
  const std::vector<double> out = net_.predict(obs);
  if (kind_ == PolicyKind::kCategorical) {
    return out[std::get<int>(action)] - logsumexp(out);
  }
  const auto& a = std::get<std::vector<double>>(action);
  const int d = action_dim();
  double lp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double log_std = std::clamp(out[d + i], kLogStdMin, kLogStdMax);
    const double z = (a[i] - out[i]) * std::exp(-log_std);
    lp += -0.5 * z * z - log_std - kHalfLog2Pi;
  }
  return lp;
}

LogProbTape Policy::log_prob_tape(const Observation& obs, const Action& action) const {
  check_action(action);
  MlpOutput fwd = net_.forward(obs);
  const std::vector<double>& out = fwd.y;
  LogProbTape rec;
  rec.dlogp_dout.assign(out.size(), 0.0);
  if (kind_ == PolicyKind::kCategorical) {
    const int a = std::get<int>(action);
    const std::vector<double> logp = log_softmax(out);
    rec.log_prob = logp[a];
    for (std::size_t i = 0; i < out.size(); ++i) rec.dlogp_dout[i] = -std::exp(logp[i]);
    rec.dlogp_dout[a] += 1.0;
  } else {
    const auto& act = std::get<std::vector<double>>(action);
    const int d = action_dim();
    for (int i = 0; i < d; ++i) {
      const double raw = out[d + i];
      const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
      const double inv_std = std::exp(-log_std);
      const double z = (act[i] - out[i]) * inv_std;
      rec.log_prob += -0.5 * z * z - log_std - kHalfLog2Pi;
      rec.dlogp_dout[i] = z * inv_std;
      // The clamp has zero slope outside its range.
      if (raw > kLogStdMin && raw < kLogStdMax) rec.dlogp_dout[d + i] = z * z - 1.0;
    }
  }
  rec.tape = std::move(fwd.tape);
  return rec;
}

void Policy::accumulate(const LogProbTape& rec, double scale, std::span<double> grad) const {
  if (scale == 0.0) return;
  std::vector<double> dy(rec.dlogp_dout);
  for (double& v : dy) v *= scale;
  net_.backward_accumulate(rec.tape, dy, grad);
}

double Policy::log_prob_accumulate(const Observation& obs, const Action& action, double scale,
                                   std::span<double> grad) const {
  const LogProbTape rec = log_prob_tape(obs, action);
  accumulate(rec, scale, grad);
  return rec.log_prob;
}

std::vector<double> Policy::probs(const Observation& obs) const {
  if (kind_ != PolicyKind::kCategorical) throw UnsupportedError("probs: not a categorical policy");
  return softmax(net_.predict(obs));
}

void Policy::gaussian_params(const Observation& obs, std::vector<double>& mean,
                             std::vector<double>& log_std) const {
  if (kind_ != PolicyKind::kGaussian) throw UnsupportedError("not a gaussian policy");
  const std::vector<double> out = net_.predict(obs);
  const int d = action_dim();
  mean.assign(out.begin(), out.begin() + d);
  log_std.resize(d);
  for (int i = 0; i < d; ++i) log_std[i] = std::clamp(out[d + i], kLogStdMin, kLogStdMax);
}

int Policy::greedy(const Observation& obs) const {
  if (kind_ != PolicyKind::kCategorical) throw UnsupportedError("greedy: not a categorical policy");
  const std::vector<double> out = net_.predict(obs);
  return static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
}

Action Policy::sample(const Observation& obs, Rng& rng) const {
  if (kind_ == PolicyKind::kCategorical) {
    return rng.categorical(probs(obs));
  }
  std::vector<double> mean;
  std::vector<double> log_std;
  gaussian_params(obs, mean, log_std);
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += std::exp(log_std[i]) * rng.normal();
  return mean;
}

ActionSampler Policy::sampler() const {
  // Borrows this policy; the sampler must not outlive it.
  return [this](const Observation& obs, int, Rng& rng) { return sample(obs, rng); };
}

PolicyTable tabular_policy_extract(const Policy& policy, int n_states) {
  if (policy.kind() != PolicyKind::kCategorical) {
    throw UnsupportedError("tabular extraction needs a categorical policy");
  }
  if (policy.obs_dim() != n_states) {
    throw ShapeError("policy observation dimension " + std::to_string(policy.obs_dim()) +
                     " does not match " + std::to_string(n_states) + " one-hot states");
  }
  const int n_actions = policy.n_actions();
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s) {
    const std::vector<double> row = policy.probs(one_hot(s, n_states));
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return PolicyTable(1, n_states, n_actions, std::move(probs));
}

}  // namespace asaf
