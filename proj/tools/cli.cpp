#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asaf/error.hpp"
#include "asaf/io.hpp"
#include "asaf/train.hpp"
#include "recipes.hpp"

namespace asaf::cli {
namespace {

struct GenExpertArgs {
  std::string env;
  int n = 0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct EvalArgs {
  std::string checkpoint;
  std::string env;
  int k = 20;
  std::uint64_t seed = 0;
};

int gen_expert(const GenExpertArgs& a, std::ostream& out) {
  const EnvSpec env = make_env(a.env);
  const DemoSet demos = generate_expert_demos(env, a.n, a.alpha, a.seed);
  save_demos(a.out, demos);
  out << "wrote " << demos.trajectories.size() << " trajectories to " << a.out
      << " mean_return=" << format_real(demos.mean_return) << "\n";
  return kOk;
}

int train_cmd(const std::string& config_path, std::ostream& out) {
  const RunConfig cfg = load_run_config(config_path);
  const EnvSpec env = make_env(cfg.env);
  if (cfg.demos_path.empty()) throw ConfigError("demos_path is required");
  const DemoSet demos = load_demos(cfg.demos_path);
  check_demos_match_env(demos, env);

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create '" + cfg.out_dir + "': " + ec.message());
  const std::string csv_path = cfg.out_dir + "/curves.csv";
  std::ofstream csv(csv_path, std::ios::out | std::ios::trunc);
  if (!csv) throw IoError("cannot open '" + csv_path + "' for writing");
  csv << kCsvHeader << "\n" << std::flush;

  TrainHooks hooks;
  if (env.kind == EnvKind::kTabular) hooks.expert = expert_table(env, cfg.expert_alpha);
  hooks.on_row = [&](const RunLogRow& row) {
    csv << format_csv_row(row) << "\n" << std::flush;
    if (!csv) throw IoError("failed writing '" + csv_path + "'");
  };
  const TrainResult result = train(cfg.train, demos, env, hooks);

  const std::string ckpt_path = cfg.out_dir + "/policy.ckpt";
  save_checkpoint(ckpt_path, result.policy);
  out << "steps=" << cfg.train.steps << " env_steps=" << result.log.total_env_steps
      << " rows=" << result.log.rows.size() << "\n";
  if (!result.log.rows.empty()) {
    const RunLogRow& last = result.log.rows.back();
    out << "final mean_return=" << format_real(last.mean_return)
        << " eval_seed=" << last.eval_seed << " eval_k=" << cfg.train.eval_episodes << "\n";
  }
  out << "wrote " << csv_path << " and " << ckpt_path << "\n";
  return kOk;
}

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const Policy policy = load_checkpoint(a.checkpoint);
  const EnvSpec env = make_env(a.env);
  if (policy.obs_dim() != env.obs_dim() || policy.action_kind() != env.action_kind() ||
      policy.n_actions() != env.n_actions() || policy.action_dim() != env.action_dim()) {
    throw ValidationError("checkpoint dimensions do not match env '" + env.id + "'");
  }
  const EvalStats stats = evaluate_policy(policy, env, a.k, a.seed);
  out << "mean=" << format_real(stats.mean) << " std=" << format_real(stats.std) << " K=" << a.k
      << "\n";
  return kOk;
}

int verify_cmd(const std::string& suite, std::ostream& out) {
  const std::vector<recipes::Check> checks = recipes::suite(suite);
  for (const recipes::Check& c : checks) {
    char line[256];
    std::snprintf(line, sizeof line, "%-44s value=%-12.6g threshold=%-8.3g %s", c.name.c_str(),
                  c.value, c.threshold, c.pass ? "PASS" : "FAIL");
    out << line << "\n";
  }
  const bool ok = recipes::all_pass(checks);
  out << suite << ": " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial soft advantage fitting on desk-scale environments", "asaf"};
  app.require_subcommand(1);

  GenExpertArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-expert", "Write oracle expert demonstrations");
  gen_cmd->add_option("--env", gen.env, "chain, gridworld or pointmass")->required();
  gen_cmd->add_option("--n", gen.n, "Number of trajectories")->required();
  gen_cmd->add_option("--alpha", gen.alpha, "Soft value iteration temperature")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output demo file")->required();

  std::string config_path;
  CLI::App* train_sub = app.add_subcommand("train", "Train from a run config");
  train_sub->add_option("--config", config_path, "Run config file")->required();

  EvalArgs ev;
  CLI::App* eval_sub = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_sub->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_sub->add_option("--env", ev.env, "Environment id")->required();
  eval_sub->add_option("--k", ev.k, "Evaluation episodes")->capture_default_str();
  eval_sub->add_option("--seed", ev.seed, "Evaluation seed")->capture_default_str();

  std::string suite;
  CLI::App* verify_sub = app.add_subcommand("verify", "Run a verification suite");
  verify_sub->add_option("--suite", suite, "lemma1, theorem1, gradients or asqf")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*gen_cmd) return gen_expert(gen, out);
    if (*train_sub) return train_cmd(config_path, out);
    if (*eval_sub) return eval_cmd(ev, out);
    if (*verify_sub) return verify_cmd(suite, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace asaf::cli
