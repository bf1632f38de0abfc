// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "asaf/discriminator.hpp"
#include "asaf/eval.hpp"
#include "asaf/io.hpp"
#include "asaf/train.hpp"
#include "cli.hpp"
#include "recipes.hpp"
#include "test_util.hpp"

namespace {

using namespace asaf;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string describe(const std::vector<recipes::Check>& checks) {
  std::string out;
  for (const recipes::Check& c : checks) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s=%.3g/%.3g", out.empty() ? "" : " ", c.name.c_str(),
                  c.value, c.threshold);
    out += buf;
  }
  return out;
}

Outcome from_checks(const std::vector<recipes::Check>& checks) {
  return {recipes::all_pass(checks), describe(checks)};
}

Outcome criterion3() {
  // Learner equal to generator on random batches of every env.
  Rng rng(303);
  double worst_d = 0.0;
  double worst_loss = 0.0;
  for (const char* id : {"chain", "gridworld", "pointmass"}) {
    const EnvSpec env = make_env(id);
    for (int trial = 0; trial < 10; ++trial) {
      const std::vector<int> hidden{8};
      const Policy gen = Policy::for_env(env, hidden, rng);
      const Policy learner = gen.snapshot();
      const ActionSampler sampler = gen.sampler();
      std::vector<Trajectory> pool;
      for (int i = 0; i < 6; ++i) pool.push_back(rollout(env, sampler, rng.next_u64()).trajectory);
      const std::size_t w = 1 + rng.uniform_index(4);
      const std::vector<Window> windows = split_pool(pool, w, 1 + rng.uniform_index(2));
      for (const Window& win : windows) {
        const LogD ld = structured_log_d(learner, gen, pool[win.source], win);
        worst_d = std::max(worst_d, std::abs(std::exp(ld.log_d) - 0.5));
      }
      const std::size_t half = windows.size() / 2;
      const std::vector<Window> ea(windows.begin(), windows.begin() + half);
      const std::vector<Window> gb(windows.begin() + half, windows.begin() + 2 * half);
      const LossAndGrad lg = bce_loss(learner, gen, WindowBatch{pool, ea}, WindowBatch{pool, gb});
      worst_loss = std::max(worst_loss, std::abs(lg.loss - 2.0 * std::numbers::ln2));
    }
  }
  const bool pass = worst_d <= 1e-10 && worst_loss <= 1e-9;
  char buf[128];
  std::snprintf(buf, sizeof buf, "max|D-1/2|=%.3g max|loss-log4|=%.3g", worst_d, worst_loss);
  return {pass, buf};
}

std::vector<double> params_of(const Policy& p) {
  return {p.net().params().begin(), p.net().params().end()};
}

Outcome criterion5() {
  bool pass = true;
  std::string detail;
  const EnvSpec env = make_env("chain");
  const DemoSet demos = generate_expert_demos(env, 40, recipes::kChainAlpha, 5);
  const std::span<const Trajectory> pool(demos.trajectories);

  // Window sets.
  const std::size_t len = demos.trajectories.front().size();
  for (std::size_t stride : {std::size_t{1}, std::size_t{2}, len}) {
    pass &= split_pool(pool, len, stride) == full_windows(pool);
  }
  std::vector<Window> steps;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t t = 0; t < pool[i].size(); ++t) steps.push_back(Window{i, t, 1});
  }
  pass &= split_pool(pool, 1, 1) == steps;
  detail += pass ? "window sets equal" : "window sets differ";

  // Losses on identical batches.
  Rng rng(55);
  const std::vector<int> hidden{6};
  const Policy learner = Policy::for_env(env, hidden, rng);
  const Policy gen = Policy::for_env(env, hidden, rng);
  const std::vector<Window> fw = full_windows(pool);
  const std::vector<Window> sw = split_pool(pool, len, 1);
  const std::vector<Window> ea(fw.begin(), fw.begin() + 20);
  const std::vector<Window> ga(fw.begin() + 20, fw.end());
  const std::vector<Window> eb(sw.begin(), sw.begin() + 20);
  const std::vector<Window> gb(sw.begin() + 20, sw.end());
  const LossAndGrad a = bce_loss(learner, gen, {pool, ea}, {pool, ga});
  const LossAndGrad b = bce_loss(learner, gen, {pool, eb}, {pool, gb});
  const bool same_loss = a.loss == b.loss && a.grad == b.grad;
  pass &= same_loss;
  detail += same_loss ? ", losses equal" : ", losses differ";

  // Whole training runs.
  TrainConfig base = recipes::chain_asaf(0);
  base.steps = 5;
  TrainConfig full = base;
  TrainConfig windowed = base;
  windowed.algorithm = Algorithm::kAsafW;
  windowed.window = static_cast<int>(env.horizon);
  windowed.stride = 2;
  const bool same_full = params_of(train(full, demos, env).policy) ==
                         params_of(train(windowed, demos, env).policy);
  TrainConfig one = base;
  one.algorithm = Algorithm::kAsaf1;
  one.batch = 25;
  TrainConfig unit = one;
  unit.algorithm = Algorithm::kAsafW;
  const bool same_one =
      params_of(train(one, demos, env).policy) == params_of(train(unit, demos, env).policy);
  pass &= same_full && same_one;
  detail += std::string(", train w=T ") + (same_full ? "==" : "!=") + " asaf, w=1 " +
            (same_one ? "==" : "!=") + " asaf_1";
  return {pass, detail};
}

Outcome criterion8() {
  Rng rng(808);
  double occ_gap = 0.0;
  double mass_gap = 0.0;
  double factor_gap = 0.0;
  bool product_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int horizon = 1 + trial % 5;
    const int ns = 2 + static_cast<int>(rng.uniform_index(3));
    const int na = 2 + static_cast<int>(rng.uniform_index(2));
    const TabularMdp m = testing::random_mdp(ns, na, horizon, rng.uniform(), rng);
    const PolicyTable pi = testing::random_policy(trial % 2 ? horizon : 1, ns, na, rng);
    const TrajDistribution dist = exact_traj_distribution(m, pi);
    mass_gap = std::max(mass_gap, std::abs(dist.total_probability() - 1.0));
    const OccupancyTable dp = occupancy(m, pi);
    const OccupancyTable en = occupancy_from_distribution(m, pi, dist);
    for (int s = 0; s < ns; ++s) {
      occ_gap = std::max(occ_gap, std::abs(dp.d(s) - en.d(s)));
      for (int a = 0; a < na; ++a) occ_gap = std::max(occ_gap, std::abs(dp.d(s, a) - en.d(s, a)));
    }
    for (const TrajectoryPath& p : dist.paths()) {
      product_exact &= p.prob == p.policy_factor * p.dynamics_factor;
      double q = 1.0;
      double xi = m.initial[p.states[0]];
      for (int t = 0; t < horizon; ++t) {
        q *= pi.prob(t, p.states[t], p.actions[t]);
        xi *= m.p(p.states[t], p.actions[t], p.states[t + 1]);
      }
      factor_gap = std::max({factor_gap, std::abs(q - p.policy_factor) / q,
                             std::abs(xi - p.dynamics_factor) / xi});
    }
  }
  const bool pass = occ_gap <= 1e-10 && mass_gap <= 1e-8 && product_exact && factor_gap <= 1e-14;
  char buf[160];
  std::snprintf(buf, sizeof buf, "occupancy gap=%.3g mass gap=%.3g P=q*xi %s factor rel gap=%.3g",
                occ_gap, mass_gap, product_exact ? "exact" : "inexact", factor_gap);
  return {pass, buf};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "asaf");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome criterion9() {
  const fs::path dir = fs::temp_directory_path() / "asaf_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool pass = true;
  std::string detail;

  // CSV determinism through the CLI.
  const std::string demos = (dir / "demos.jsonl").string();
  pass &= cli({"gen-expert", "--env", "chain", "--n", "200", "--seed", "4", "--out", demos}) == 0;
  for (const char* run : {"a", "b"}) {
    std::ofstream cfg(dir / (std::string(run) + ".cfg"));
    cfg << "env = chain\nalgorithm = asaf\nlr_d = 1e-3\nbatch = 40\nn_g = 40\nepochs = 5\n"
        << "steps = 20\neval_k = 10\neval_interval = 5\nseed = 9\n"
        << "demos_path = " << demos << "\nout_dir = " << (dir / run).string() << "\n";
  }
  pass &= cli({"train", "--config", (dir / "a.cfg").string()}) == 0;
  pass &= cli({"train", "--config", (dir / "b.cfg").string()}) == 0;
  const std::string csv = slurp(dir / "a" / "curves.csv");
  const bool csv_same = !csv.empty() && csv == slurp(dir / "b" / "curves.csv");
  pass &= csv_same;
  detail += csv_same ? "csv identical" : "csv differs";

  // Demo round trip, discrete and continuous.
  bool demo_same = true;
  for (const char* id : {"gridworld", "pointmass"}) {
    const DemoSet d = generate_expert_demos(make_env(id), 10, 0.25, 2);
    std::stringstream a;
    write_demos(a, d);
    const std::string text = a.str();
    const DemoSet back = read_demos(a);
    std::stringstream b;
    write_demos(b, back);
    demo_same &= text == b.str();
    for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
      const Trajectory& x = d.trajectories[i];
      const Trajectory& y = back.trajectories[i];
      demo_same &= x.actions == y.actions && x.size() == y.size();
      for (std::size_t t = 0; t < x.size() && demo_same; ++t) {
        for (std::size_t k = 0; k < x.observations[t].size(); ++k) {
          demo_same &= std::bit_cast<std::uint64_t>(x.observations[t][k]) ==
                       std::bit_cast<std::uint64_t>(y.observations[t][k]);
        }
      }
    }
  }
  pass &= demo_same;
  detail += demo_same ? ", demos bit-exact" : ", demos differ";

  // Checkpoint round trip.
  bool ckpt_same = true;
  Rng rng(99);
  for (const char* id : {"chain", "gridworld", "pointmass"}) {
    const EnvSpec env = make_env(id);
    const Policy pi = Policy::for_env(env, std::vector<int>{16, 8}, rng);
    const std::string path = (dir / (std::string(id) + ".ckpt")).string();
    save_checkpoint(path, pi);
    const Policy back = load_checkpoint(path);
    ckpt_same &= back.kind() == pi.kind() && params_of(back) == params_of(pi);
    for (int k = 0; k < 20; ++k) {
      Observation obs(env.obs_dim());
      for (double& v : obs) v = rng.uniform(-2.0, 2.0);
      ckpt_same &= back.net().predict(obs) == pi.net().predict(obs);
    }
  }
  pass &= ckpt_same;
  detail += ckpt_same ? ", checkpoints bit-exact" : ", checkpoints differ";
  fs::remove_all(dir);
  return {pass, detail};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0 means no time limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "structured optimum on finite support", 5.0, [] { return from_checks(recipes::lemma1()); }},
      {2, "chain trajectory matching", 60.0, [] { return from_checks(recipes::theorem1(5)); }},
      {3, "fixed point at learner = generator", 0.0, criterion3},
      {4, "gradient integrity", 10.0, [] { return from_checks(recipes::gradients(10)); }},
      {5, "window reduction identities", 0.0, criterion5},
      {6, "ASQF chain argmax and gridworld return", 300.0, [] { return from_checks(recipes::asqf()); }},
      {7, "ASAF-1 point mass return", 300.0, [] { return from_checks(recipes::pointmass()); }},
      {8, "oracle exactness", 0.0, criterion8},
      {9, "determinism and round trips", 0.0, criterion9},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_s == 0.0 || secs < c.limit_s;
    const bool ok = o.pass && in_time;
    failures += ok ? 0 : 1;
    std::printf("criterion %d %s: %s (%.2fs%s) %s\n", c.id, c.name, ok ? "PASS" : "FAIL", secs,
                in_time ? "" : ", over time limit", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%s: %d of %zu criteria passed\n", failures == 0 ? "PASS" : "FAIL",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
