#include "asaf/eval.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "asaf/error.hpp"
#include "asaf/numkit.hpp"

namespace asaf {
namespace {

void check_table(const TabularMdp& mdp, const PolicyTable& policy) {
  if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions) {
    throw ShapeError("policy table does not match the MDP's state/action counts");
  }
  if (!policy.stationary() && policy.n_stages() != mdp.horizon) {
    throw ShapeError("stage-indexed policy table must have one stage per horizon step");
  }
}

double q_factor(const PolicyTable& policy, const std::vector<int>& states,
                const std::vector<int>& actions) {
  double q = 1.0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    q *= policy.prob(static_cast<int>(t), states[t], actions[t]);
  }
  return q;
}

// Visits every path with xi(tau) > 0 in lexicographic order of its key.
void for_each_feasible_path(
    const TabularMdp& mdp, double guard,
    const std::function<void(const std::vector<int>&, const std::vector<int>&, double)>& visit) {
  mdp.validate();
  const double count =
      std::pow(static_cast<double>(mdp.n_actions), mdp.horizon) * static_cast<double>(mdp.n_states);
  if (count > guard) {
    throw CapacityError("enumeration would visit " + std::to_string(count) +
                        " action paths, above the guard of " + std::to_string(guard));
  }
  const int horizon = mdp.horizon;
  std::vector<int> states(horizon + 1);
  std::vector<int> actions(horizon);
  std::function<void(int, double)> rec = [&](int t, double xi) {
    if (t == horizon) {
      visit(states, actions, xi);
      return;
    }
    const int s = states[t];
    for (int a = 0; a < mdp.n_actions; ++a) {
      actions[t] = a;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double p = mdp.p(s, a, s2);
        if (p <= 0.0) continue;
        states[t + 1] = s2;
        rec(t + 1, xi * p);
      }
    }
  };
  for (int s0 = 0; s0 < mdp.n_states; ++s0) {
    if (mdp.initial[s0] <= 0.0) continue;
    states[0] = s0;
    rec(0, mdp.initial[s0]);
  }
}

double plogp_ratio(double p, double m) { return p > 0.0 ? p * std::log(p / m) : 0.0; }

}  // namespace

std::vector<int> TrajectoryPath::key() const {
  std::vector<int> k;
  k.reserve(states.size() + actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    k.push_back(states[t]);
    k.push_back(actions[t]);
  }
  k.push_back(states.back());
  return k;
}

double TrajDistribution::total_probability() const {
  double sum = 0.0;
  for (const TrajectoryPath& p : paths_) sum += p.prob;
  return sum;
}

std::map<std::vector<int>, double> TrajDistribution::by_key() const {
  std::map<std::vector<int>, double> out;
  for (const TrajectoryPath& p : paths_) out[p.key()] += p.prob;
  return out;
}

std::map<std::vector<int>, double> TrajDistribution::action_marginal() const {
  std::map<std::vector<int>, double> out;
  for (const TrajectoryPath& p : paths_) out[p.actions] += p.prob;
  return out;
}

std::vector<double> TrajDistribution::stage_state_marginals(int n_states) const {
  if (paths_.empty()) return {};
  const std::size_t horizon = paths_.front().actions.size();
  std::vector<double> d(horizon * n_states, 0.0);
  for (const TrajectoryPath& p : paths_) {
    for (std::size_t t = 0; t < horizon; ++t) d[t * n_states + p.states[t]] += p.prob;
  }
  return d;
}

TrajDistribution exact_traj_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                         double guard) {
  check_table(mdp, policy);
  std::vector<TrajectoryPath> paths;
  for_each_feasible_path(mdp, guard,
                         [&](const std::vector<int>& states, const std::vector<int>& actions,
                             double xi) {
                           const double q = q_factor(policy, states, actions);
                           if (q <= 0.0) return;
                           TrajectoryPath path;
                           path.states = states;
                           path.actions = actions;
                           path.policy_factor = q;
                           path.dynamics_factor = xi;
                           path.prob = q * xi;
                           paths.push_back(std::move(path));
                         });
  return TrajDistribution(std::move(paths));
}

OccupancyTable occupancy(const TabularMdp& mdp, const PolicyTable& policy) {
  mdp.validate();
  check_table(mdp, policy);
  const int ns = mdp.n_states;
  const int na = mdp.n_actions;
  OccupancyTable out;
  out.n_states = ns;
  out.n_actions = na;
  out.state.assign(ns, 0.0);
  out.state_action.assign(static_cast<std::size_t>(ns) * na, 0.0);

  std::vector<double> d_t(mdp.initial);
  std::vector<double> next(ns);
  double discount = 1.0;
  for (int t = 0; t < mdp.horizon; ++t) {
    out.z += discount;
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < ns; ++s) {
      out.state[s] += discount * d_t[s];
      for (int a = 0; a < na; ++a) {
        const double mass = d_t[s] * policy.prob(t, s, a);
        out.state_action[static_cast<std::size_t>(s) * na + a] += discount * mass;
        if (mass == 0.0) continue;
        for (int s2 = 0; s2 < ns; ++s2) next[s2] += mass * mdp.p(s, a, s2);
      }
    }
    d_t.swap(next);
    discount *= mdp.gamma;
  }
  for (double& v : out.state) v /= out.z;
  for (double& v : out.state_action) v /= out.z;
  return out;
}

OccupancyTable occupancy_from_distribution(const TabularMdp& mdp, const PolicyTable& policy,
                                           const TrajDistribution& dist) {
  check_table(mdp, policy);
  const int ns = mdp.n_states;
  const int na = mdp.n_actions;
  OccupancyTable out;
  out.n_states = ns;
  out.n_actions = na;
  out.state.assign(ns, 0.0);
  out.state_action.assign(static_cast<std::size_t>(ns) * na, 0.0);
  std::vector<double> discounts(mdp.horizon);
  double discount = 1.0;
  for (int t = 0; t < mdp.horizon; ++t) {
    discounts[t] = discount;
    out.z += discount;
    discount *= mdp.gamma;
  }
  for (const TrajectoryPath& p : dist.paths()) {
    for (int t = 0; t < mdp.horizon; ++t) {
      out.state[p.states[t]] += discounts[t] * p.prob;
      out.state_action[static_cast<std::size_t>(p.states[t]) * na + p.actions[t]] +=
          discounts[t] * p.prob;
    }
  }
  for (double& v : out.state) v /= out.z;
  for (double& v : out.state_action) v /= out.z;
  return out;
}

double expected_return(const TabularMdp& mdp, const PolicyTable& policy, bool discounted) {
  mdp.validate();
  check_table(mdp, policy);
  const int ns = mdp.n_states;
  std::vector<double> d_t(mdp.initial);
  std::vector<double> next(ns);
  double discount = 1.0;
  double total = 0.0;
  for (int t = 0; t < mdp.horizon; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double mass = d_t[s] * policy.prob(t, s, a);
        total += discount * mass * mdp.r(s, a);
        for (int s2 = 0; s2 < ns; ++s2) next[s2] += mass * mdp.p(s, a, s2);
      }
    }
    d_t.swap(next);
    if (discounted) discount *= mdp.gamma;
  }
  return total;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ArgumentError("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw ArgumentError("kl_divergence: negative entry");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return INFINITY;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ArgumentError("js_divergence: length mismatch");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw ArgumentError("js_divergence: negative entry");
    const double m = 0.5 * (p[i] + q[i]);
    js += 0.5 * plogp_ratio(p[i], m) + 0.5 * plogp_ratio(q[i], m);
  }
  // Rounding can push an exact zero a hair below.
  return js < 0.0 ? 0.0 : js;
}

double trajectory_js(const TrajDistribution& p, const TrajDistribution& q) {
  const auto pm = p.by_key();
  const auto qm = q.by_key();
  std::vector<double> pv;
  std::vector<double> qv;
  auto pi = pm.begin();
  auto qi = qm.begin();
  while (pi != pm.end() || qi != qm.end()) {
    if (qi == qm.end() || (pi != pm.end() && pi->first < qi->first)) {
      pv.push_back(pi->second);
      qv.push_back(0.0);
      ++pi;
    } else if (pi == pm.end() || qi->first < pi->first) {
      pv.push_back(0.0);
      qv.push_back(qi->second);
      ++qi;
    } else {
      pv.push_back(pi->second);
      qv.push_back(qi->second);
      ++pi;
      ++qi;
    }
  }
  return js_divergence(pv, qv);
}

double structured_gan_objective(std::span<const double> p_tilde, std::span<const double> p_expert,
                                std::span<const double> p_generator) {
  if (p_tilde.size() != p_expert.size() || p_expert.size() != p_generator.size()) {
    throw ArgumentError("structured_gan_objective: length mismatch");
  }
  double l = 0.0;
  for (std::size_t i = 0; i < p_tilde.size(); ++i) {
    const double denom = p_tilde[i] + p_generator[i];
    if (p_expert[i] > 0.0) l += p_expert[i] * std::log(p_tilde[i] / denom);
    if (p_generator[i] > 0.0) l += p_generator[i] * std::log(p_generator[i] / denom);
  }
  return l;
}

Lemma1Result fit_structured_discriminator(std::span<const double> p_expert,
                                          std::span<const double> p_generator, int steps,
                                          double lr) {
  const std::size_t n = p_expert.size();
  if (n == 0 || n != p_generator.size()) throw ArgumentError("lemma1: support size mismatch");
  if (n > 10000) throw CapacityError("lemma1: support larger than 1e4");
  if (steps < 0 || !(lr > 0.0)) throw ArgumentError("lemma1: bad steps or learning rate");
  for (std::size_t i = 0; i < n; ++i) {
    if (p_expert[i] < 0.0 || p_generator[i] < 0.0) {
      throw ArgumentError("lemma1: negative probability");
    }
  }

  std::vector<double> logits(n, 0.0);
  std::vector<double> p = softmax(logits);
  std::vector<double> g(n);
  for (int k = 0; k < steps; ++k) {
    // dL/d log p~_i = p_E,i (1 - D_i) - p_G,i D_i, pushed through log-softmax.
    double g_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = p[i] / (p[i] + p_generator[i]);
      g[i] = p_expert[i] * (1.0 - d) - p_generator[i] * d;
      g_sum += g[i];
    }
    for (std::size_t i = 0; i < n; ++i) logits[i] += lr * (g[i] - p[i] * g_sum);
    p = softmax(logits);
  }
  Lemma1Result out;
  out.p_tilde = p;
  for (std::size_t i = 0; i < n; ++i) out.l1_gap += std::abs(p[i] - p_expert[i]);
  return out;
}

double verify_lemma1(std::span<const double> p_expert, std::span<const double> p_generator,
                     int steps, double lr) {
  return fit_structured_discriminator(p_expert, p_generator, steps, lr).l1_gap;
}

double exact_expected_bce(const TabularMdp& mdp, const PolicyTable& learner,
                          const PolicyTable& generator, const PolicyTable& expert) {
  check_table(mdp, learner);
  check_table(mdp, generator);
  check_table(mdp, expert);
  double loss = 0.0;
  for_each_feasible_path(
      mdp, kEnumerationGuard,
      [&](const std::vector<int>& states, const std::vector<int>& actions, double xi) {
        const double q_learner = q_factor(learner, states, actions);
        const double q_generator = q_factor(generator, states, actions);
        const double q_expert = q_factor(expert, states, actions);
        const double denom = q_learner + q_generator;
        // A learner that gives an expert path no mass has log D = -inf.
        if (q_expert > 0.0) {
          loss -= xi * q_expert *
                  (q_learner > 0.0 ? std::log(q_learner / denom)
                                   : -std::numeric_limits<double>::infinity());
        }
        if (q_generator > 0.0) loss -= xi * q_generator * std::log(q_generator / denom);
      });
  return loss;
}

}  // namespace asaf
