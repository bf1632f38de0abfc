#ifndef ASAF_IO_HPP_
#define ASAF_IO_HPP_

// File formats: demonstration files, run configs, checkpoints and the
// learning-curve CSV.
//
// Demo file (text, one JSON object per line):
//   {"format_version":1,"env":...,"action_kind":"discrete"|"continuous",
//    "obs_dim":...,"n_trajectories":...,"mean_return":...}
//   {"obs":[[...],...],"acts":[...],"len":...}        (n_trajectories lines)
// Reals are written with 17 significant digits, so a round trip is exact.
//
// Checkpoint (binary, little-endian):
//   "ASAF"  u32 version (1)  u32 kind (0 categorical, 1 gaussian)
//   u32 n_layers  u32 layer_sizes[n_layers]  u64 n_params  f64 params[n_params]

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "asaf/policies.hpp"
#include "asaf/train.hpp"

namespace asaf {

inline constexpr int kDemoFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Shortest decimal text that reads back to the same double ("%.17g"; always
// carries a '.' or exponent so it stays a real).
std::string format_real(double value);

void write_demos(std::ostream& out, const DemoSet& demos);
// Throws FormatError for malformed content.
DemoSet read_demos(std::istream& in);
void save_demos(const std::string& path, const DemoSet& demos);
DemoSet load_demos(const std::string& path);

// A parsed run-config file.
struct RunConfig {
  std::string env = "chain";
  TrainConfig train;
  std::string demos_path;
  std::string out_dir = "out";
  // Soft value iteration temperature of the reference expert used for the
  // js_to_expert column.
  double expert_alpha = 1.0;
};

// `key = value` lines with `#` comments. Keys: env, algorithm, lr_d, batch,
// n_g, epochs, w, stride, clip, clip_mode, steps, eval_k, eval_interval, seed,
// demos_path, out_dir, hidden, expert_alpha. Unknown keys and bad values throw
// ParseError with the line number; the result is validated (ConfigError).
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);

void write_checkpoint(std::ostream& out, const Policy& policy);
// Throws FormatError for a bad magic, unknown version or kind, or a size mismatch.
Policy read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Policy& policy);
Policy load_checkpoint(const std::string& path);

inline constexpr std::string_view kCsvHeader =
    "step,env_steps,mean_return,std_return,bce_loss,js_to_expert";
std::string format_csv_row(const RunLogRow& row);

}  // namespace asaf

#endif  // ASAF_IO_HPP_
