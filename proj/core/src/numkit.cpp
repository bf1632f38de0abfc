#include "asaf/numkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "asaf/error.hpp"

namespace asaf {
namespace {

std::uint64_t next_net_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ArgumentError("Mlp needs at least input and output sizes");
  for (int n : sizes) {
    if (n < 1) throw ArgumentError("Mlp layer sizes must be positive");
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)), id_(next_net_id()) {
  check_sizes(sizes_);
  params_.assign(param_count(sizes_), 0.0);
}

Mlp Mlp::initialized(std::vector<int> layer_sizes, Rng& rng) {
  Mlp net(std::move(layer_sizes));
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    const int in = net.sizes_[l];
    const int out = net.sizes_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int k = 0; k < in * out; ++k) net.params_[off + k] = rng.uniform(-bound, bound);
    off += static_cast<std::size_t>(in) * out + out;
  }
  return net;
}

Mlp::Mlp(const Mlp& other)
    : sizes_(other.sizes_), params_(other.params_), id_(next_net_id()), generation_(0) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    sizes_ = other.sizes_;
    params_ = other.params_;
    id_ = next_net_id();
    generation_ = 0;
  }
  return *this;
}

std::size_t Mlp::param_count(std::span<const int> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

std::span<double> Mlp::mutable_params() {
  ++generation_;
  return params_;
}

void Mlp::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw ShapeError("set_params: expected " + std::to_string(params_.size()) + " values, got " +
                     std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), params_.begin());
  ++generation_;
}

void Mlp::check_input(std::span<const double> x) const {
  if (sizes_.empty()) throw StateError("Mlp is empty");
  if (x.size() != static_cast<std::size_t>(sizes_.front())) {
    throw ShapeError("Mlp input: expected dimension " + std::to_string(sizes_.front()) +
                     ", got " + std::to_string(x.size()));
  }
}

MlpOutput Mlp::forward(std::span<const double> x) const {
  check_input(x);
  MlpOutput out;
  GradTape& tape = out.tape;
  tape.net_id = id_;
  tape.generation = generation_;
  const std::size_t n_layers = sizes_.size() - 1;
  tape.inputs.reserve(n_layers);
  tape.pre.reserve(n_layers);
  tape.inputs.emplace_back(x.begin(), x.end());

  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = sizes_[l];
    const int outn = sizes_[l + 1];
    const std::vector<double>& a = tape.inputs[l];
    const double* w = params_.data() + off;
    const double* b = w + static_cast<std::size_t>(in) * outn;
    std::vector<double> z(outn);
    for (int i = 0; i < outn; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * a[j];
      z[i] = acc;
    }
    off += static_cast<std::size_t>(in) * outn + outn;
    if (l + 1 < n_layers) {
      std::vector<double> h(outn);
      for (int i = 0; i < outn; ++i) h[i] = z[i] > 0.0 ? z[i] : 0.0;
      tape.inputs.push_back(std::move(h));
      tape.pre.push_back(std::move(z));
    } else {
      out.y = z;
      tape.pre.push_back(std::move(z));
    }
  }
  return out;
}

std::vector<double> Mlp::predict(std::span<const double> x) const {
  check_input(x);
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> z;
  const std::size_t n_layers = sizes_.size() - 1;
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = sizes_[l];
    const int outn = sizes_[l + 1];
    const double* w = params_.data() + off;
    const double* b = w + static_cast<std::size_t>(in) * outn;
    z.assign(outn, 0.0);
    for (int i = 0; i < outn; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * a[j];
      z[i] = acc;
    }
    off += static_cast<std::size_t>(in) * outn + outn;
    if (l + 1 < n_layers) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
      a.swap(z);
    }
  }
  return z;
}

void Mlp::check_tape(const GradTape& tape) const {
  if (tape.net_id != id_) throw TapeError("tape was recorded by a different network");
  if (tape.generation != generation_) throw TapeError("network parameters changed since forward");
  if (tape.inputs.size() + 1 != sizes_.size() || tape.pre.size() + 1 != sizes_.size()) {
    throw TapeError("tape layer count does not match network");
  }
}

std::vector<double> Mlp::backward(const GradTape& tape, std::span<const double> dy) const {
  std::vector<double> grad(params_.size(), 0.0);
  backward_accumulate(tape, dy, grad);
  return grad;
}

void Mlp::backward_accumulate(const GradTape& tape, std::span<const double> dy,
                              std::span<double> grad) const {
  check_tape(tape);
  if (dy.size() != static_cast<std::size_t>(sizes_.back())) {
    throw ShapeError("backward: dy has dimension " + std::to_string(dy.size()) + ", expected " +
                     std::to_string(sizes_.back()));
  }
  if (grad.size() != params_.size()) throw ShapeError("backward: gradient buffer size mismatch");

  const std::size_t n_layers = sizes_.size() - 1;
  // Offsets of each layer's block in the flat array.
  std::vector<std::size_t> offsets(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }

  std::vector<double> delta(dy.begin(), dy.end());  // d/d pre-activation of current layer
  for (std::size_t l = n_layers; l-- > 0;) {
    const int in = sizes_[l];
    const int outn = sizes_[l + 1];
    const std::vector<double>& a = tape.inputs[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + static_cast<std::size_t>(in) * outn;
    for (int i = 0; i < outn; ++i) {
      const double d = delta[i];
      if (d == 0.0) continue;
      gb[i] += d;
      double* grow = gw + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) grow[j] += d * a[j];
    }
    if (l == 0) break;
    const double* w = params_.data() + offsets[l];
    const std::vector<double>& zprev = tape.pre[l - 1];
    std::vector<double> next(in, 0.0);
    for (int i = 0; i < outn; ++i) {
      const double d = delta[i];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) next[j] += row[j] * d;
    }
    for (int j = 0; j < in; ++j) {
      if (zprev[j] <= 0.0) next[j] = 0.0;
    }
    delta.swap(next);
  }
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
  if (!(lr > 0.0)) throw ArgumentError("adam_step: learning rate must be positive");
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  if (!all_finite(grads)) throw NumericalError("adam_step: non-finite gradient");

  const AdamOptions& o = state.options;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * g;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

double clip_grad_norm(std::span<double> g, double max_norm) {
  if (!(max_norm > 0.0)) throw ArgumentError("clip_grad_norm: threshold must be positive");
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& v : g) v *= scale;
  }
  return norm;
}

void clip_grad_value(std::span<double> g, double max_abs) {
  if (!(max_abs > 0.0)) throw ArgumentError("clip_grad_value: threshold must be positive");
  for (double& v : g) v = std::clamp(v, -max_abs, max_abs);
}

void clip_grad(std::span<double> g, double threshold, ClipMode mode) {
  if (mode == ClipMode::kNorm) {
    clip_grad_norm(g, threshold);
  } else {
    clip_grad_value(g, threshold);
  }
}

double grad_check(const GradFn& f, std::span<const double> params, double h) {
  if (!(h > 0.0)) throw ArgumentError("grad_check: step must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> analytic(x.size(), 0.0);
  const double f0 = f(x, analytic);
  if (!std::isfinite(f0) || !all_finite(analytic)) {
    throw NumericalError("grad_check: objective or analytic gradient not finite");
  }
  std::vector<double> scratch(x.size(), 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x, scratch);
    x[i] = xi - h;
    const double fm = f(x, scratch);
    x[i] = xi;
    const double fd = (fp - fm) / (2.0 * h);
    if (!std::isfinite(fd)) throw NumericalError("grad_check: finite difference not finite");
    const double denom = std::max(1e-12, std::abs(analytic[i]) + std::abs(fd));
    worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
  }
  return worst;
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("logsumexp: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  if (std::isinf(mx)) return mx;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

double logsumexp2(double a, double b) {
  const double mx = std::max(a, b);
  if (std::isinf(mx)) return mx;
  return mx + std::log1p(std::exp(std::min(a, b) - mx));
}

std::vector<double> log_softmax(std::span<const double> v) {
  const double lse = logsumexp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out = log_softmax(v);
  for (double& x : out) x = std::exp(x);
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace asaf
