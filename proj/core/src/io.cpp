#include "asaf/io.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "asaf/error.hpp"

namespace asaf {
namespace {

using json = nlohmann::json;

std::string_view kind_name(ActionKind kind) {
  return kind == ActionKind::kDiscrete ? "discrete" : "continuous";
}

void append_real_array(std::string& out, std::span<const double> v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  out += ']';
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

template <typename T>
T get_field(const json& obj, const char* key, int line) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError("demo file line " + std::to_string(line) + ": missing '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError("demo file line " + std::to_string(line) + ": bad '" + key + "'");
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(line, "'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

int parse_small_int(const std::string& v, int line, const std::string& key) {
  const long long x = parse_int(v, line, key);
  if (x < -2147483647LL || x > 2147483647LL) throw ParseError(line, "'" + key + "' out of range");
  return static_cast<int>(x);
}

double parse_real(const std::string& v, int line, const std::string& key) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw ParseError(line, "'" + key + "' expects a real number, got '" + v + "'");
  }
  return x;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream f(path, mode);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream f(path, mode);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(b.data(), 8);
}

std::uint64_t get_bytes(std::istream& in, int n) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), n);
  if (in.gcount() != n) throw FormatError("checkpoint is truncated");
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

std::string format_real(double value) {
  if (!std::isfinite(value)) throw FormatError("cannot serialize a non-finite real");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string s(buf);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

// ---------------------------------------------------------------------------
// Demo files

void write_demos(std::ostream& out, const DemoSet& demos) {
  demos.validate();
  const Trajectory& first = demos.trajectories.front();
  const ActionKind kind = std::holds_alternative<int>(first.actions.front())
                              ? ActionKind::kDiscrete
                              : ActionKind::kContinuous;
  std::string header = "{\"format_version\":" + std::to_string(kDemoFormatVersion);
  header += ",\"env\":" + json_string(demos.env);
  header += ",\"action_kind\":" + json_string(kind_name(kind));
  header += ",\"obs_dim\":" + std::to_string(first.observations.front().size());
  header += ",\"n_trajectories\":" + std::to_string(demos.trajectories.size());
  header += ",\"mean_return\":" + format_real(demos.mean_return) + "}\n";
  out << header;

  std::string line;
  for (const Trajectory& t : demos.trajectories) {
    line = "{\"obs\":[";
    for (std::size_t i = 0; i < t.observations.size(); ++i) {
      if (i) line += ',';
      append_real_array(line, t.observations[i]);
    }
    line += "],\"acts\":[";
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
      if (i) line += ',';
      if (kind == ActionKind::kDiscrete) {
        line += std::to_string(std::get<int>(t.actions[i]));
      } else {
        append_real_array(line, std::get<std::vector<double>>(t.actions[i]));
      }
    }
    line += "],\"len\":" + std::to_string(t.size()) + "}\n";
    out << line;
  }
  if (!out) throw IoError("failed writing demo file");
}

DemoSet read_demos(std::istream& in) {
  std::string text;
  int line_no = 0;
  auto next_object = [&](json& obj) {
    while (std::getline(in, text)) {
      ++line_no;
      if (trim(text).empty()) continue;
      try {
        obj = json::parse(text);
      } catch (const json::exception& e) {
        throw FormatError("demo file line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!obj.is_object()) {
        throw FormatError("demo file line " + std::to_string(line_no) + ": expected an object");
      }
      return true;
    }
    return false;
  };

  json header;
  if (!next_object(header)) throw FormatError("demo file is empty");
  if (get_field<int>(header, "format_version", line_no) != kDemoFormatVersion) {
    throw FormatError("unsupported demo format_version");
  }
  DemoSet out;
  out.env = get_field<std::string>(header, "env", line_no);
  const std::string kind = get_field<std::string>(header, "action_kind", line_no);
  if (kind != "discrete" && kind != "continuous") throw FormatError("bad action_kind '" + kind + "'");
  const bool discrete = kind == "discrete";
  const auto obs_dim = get_field<long long>(header, "obs_dim", line_no);
  const auto n = get_field<long long>(header, "n_trajectories", line_no);
  out.mean_return = get_field<double>(header, "mean_return", line_no);
  if (obs_dim < 1 || n < 0) throw FormatError("demo header has invalid sizes");

  json obj;
  for (long long k = 0; k < n; ++k) {
    if (!next_object(obj)) throw FormatError("demo file ends before n_trajectories records");
    const auto obs = get_field<std::vector<std::vector<double>>>(obj, "obs", line_no);
    const auto len = get_field<long long>(obj, "len", line_no);
    Trajectory t;
    t.env = out.env;
    if (discrete) {
      for (int a : get_field<std::vector<int>>(obj, "acts", line_no)) t.actions.emplace_back(a);
    } else {
      for (auto& a : get_field<std::vector<std::vector<double>>>(obj, "acts", line_no)) {
        t.actions.emplace_back(std::move(a));
      }
    }
    if (static_cast<long long>(obs.size()) != len || static_cast<long long>(t.actions.size()) != len) {
      throw FormatError("demo file line " + std::to_string(line_no) + ": len does not match arrays");
    }
    for (const auto& o : obs) {
      if (static_cast<long long>(o.size()) != obs_dim) {
        throw FormatError("demo file line " + std::to_string(line_no) + ": obs dimension mismatch");
      }
    }
    t.observations = obs;
    out.trajectories.push_back(std::move(t));
  }
  if (next_object(obj)) throw FormatError("demo file has more records than n_trajectories");
  return out;
}

void save_demos(const std::string& path, const DemoSet& demos) {
  std::ofstream f = open_out(path, std::ios::out | std::ios::trunc);
  write_demos(f, demos);
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

DemoSet load_demos(const std::string& path) {
  std::ifstream f = open_in(path, std::ios::in);
  return read_demos(f);
}

// ---------------------------------------------------------------------------
// Run configs

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(std::string_view(raw).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(line, "empty key");
    TrainConfig& t = cfg.train;

    if (key == "env") {
      cfg.env = value;
    } else if (key == "algorithm") {
      try {
        t.algorithm = parse_algorithm(value);
      } catch (const ConfigError& e) {
        throw ParseError(line, e.what());
      }
    } else if (key == "lr_d") {
      t.lr = parse_real(value, line, key);
    } else if (key == "batch") {
      t.batch = parse_small_int(value, line, key);
    } else if (key == "n_g") {
      t.episodes_per_update = parse_small_int(value, line, key);
    } else if (key == "epochs") {
      t.epochs = parse_small_int(value, line, key);
    } else if (key == "w") {
      t.window = parse_small_int(value, line, key);
    } else if (key == "stride") {
      t.stride = parse_small_int(value, line, key);
    } else if (key == "clip") {
      t.clip = parse_real(value, line, key);
    } else if (key == "clip_mode") {
      if (value == "norm") {
        t.clip_mode = ClipMode::kNorm;
      } else if (value == "value") {
        t.clip_mode = ClipMode::kValue;
      } else {
        throw ParseError(line, "clip_mode must be 'norm' or 'value'");
      }
    } else if (key == "steps") {
      t.steps = parse_small_int(value, line, key);
    } else if (key == "eval_k") {
      t.eval_episodes = parse_small_int(value, line, key);
    } else if (key == "eval_interval") {
      t.eval_interval = parse_small_int(value, line, key);
    } else if (key == "seed") {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError(line, "'seed' expects an unsigned integer");
      }
      t.seed = s;
    } else if (key == "demos_path") {
      cfg.demos_path = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "hidden") {
      t.hidden.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item = trim(rest.substr(0, comma));
        t.hidden.push_back(parse_small_int(item, line, key));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else if (key == "expert_alpha") {
      cfg.expert_alpha = parse_real(value, line, key);
      if (!(cfg.expert_alpha > 0.0)) throw ParseError(line, "expert_alpha must be positive");
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f = open_in(path, std::ios::in);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_checkpoint(std::ostream& out, const Policy& policy) {
  out.write("ASAF", 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, policy.kind() == PolicyKind::kCategorical ? 0U : 1U);
  const std::vector<int>& sizes = policy.net().layer_sizes();
  put_u32(out, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) put_u32(out, static_cast<std::uint32_t>(s));
  const std::span<const double> params = policy.net().params();
  put_u64(out, params.size());
  for (double p : params) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &p, sizeof bits);
    put_u64(out, bits);
  }
  if (!out) throw IoError("failed writing checkpoint");
}

Policy read_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw FormatError("checkpoint is truncated");
  if (std::memcmp(magic, "ASAF", 4) != 0) throw FormatError("checkpoint has a bad magic");
  if (get_bytes(in, 4) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  const std::uint64_t kind = get_bytes(in, 4);
  if (kind > 1) throw FormatError("unknown checkpoint policy kind");
  const std::uint64_t n_layers = get_bytes(in, 4);
  if (n_layers < 2 || n_layers > 64) throw FormatError("checkpoint layer count out of range");
  std::vector<int> sizes;
  for (std::uint64_t i = 0; i < n_layers; ++i) {
    const std::uint64_t s = get_bytes(in, 4);
    if (s < 1 || s > (1U << 20)) throw FormatError("checkpoint layer size out of range");
    sizes.push_back(static_cast<int>(s));
  }
  const std::uint64_t n_params = get_bytes(in, 8);
  if (n_params != Mlp::param_count(sizes)) {
    throw FormatError("checkpoint parameter count does not match its layer sizes");
  }
  std::vector<double> params(n_params);
  for (double& p : params) {
    const std::uint64_t bits = get_bytes(in, 8);
    std::memcpy(&p, &bits, sizeof p);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint has trailing bytes");
  if (!all_finite(params)) throw FormatError("checkpoint contains non-finite parameters");
  Mlp net(sizes);
  net.set_params(params);
  if (kind == 0) return Policy::categorical(std::move(net));
  if (sizes.back() % 2 != 0) throw FormatError("gaussian checkpoint needs an even output size");
  return Policy::gaussian(std::move(net));
}

void save_checkpoint(const std::string& path, const Policy& policy) {
  std::ofstream f = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  write_checkpoint(f, policy);
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

Policy load_checkpoint(const std::string& path) {
  std::ifstream f = open_in(path, std::ios::in | std::ios::binary);
  return read_checkpoint(f);
}

// ---------------------------------------------------------------------------
// CSV

std::string format_csv_row(const RunLogRow& row) {
  std::string out = std::to_string(row.step) + "," + std::to_string(row.env_steps) + ",";
  out += format_real(row.mean_return) + "," + format_real(row.std_return) + ",";
  out += format_real(row.bce_loss) + ",";
  if (row.js_to_expert) out += format_real(*row.js_to_expert);
  return out;
}

}  // namespace asaf
