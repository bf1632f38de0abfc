#ifndef ASAF_NUMKIT_HPP_
#define ASAF_NUMKIT_HPP_

// Minimal differentiable numerics: a ReLU MLP with a hand-written backward
// pass, Adam, gradient clipping, log-domain helpers and a central-difference
// gradient checker. Everything is float64.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "asaf/rng.hpp"

namespace asaf {

// Intermediates of one Mlp::forward call. inputs[l] is the vector fed to
// layer l (inputs[0] is x); pre[l] is that layer's affine output.
struct GradTape {
  std::uint64_t net_id = 0;
  std::uint64_t generation = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
};

struct MlpOutput {
  std::vector<double> y;
  GradTape tape;
};

// Fully connected network, rectifier on hidden layers, identity on the output.
//
// Parameters live in one flat array. Layer l contributes a row-major weight
// block of shape (sizes[l+1], sizes[l]) followed by its bias of length
// sizes[l+1].
//
// Each instance carries an identity and a generation counter. Copies get a
// fresh identity and every mutable_params() call bumps the generation, which
// lets backward() reject tapes recorded against other or outdated weights.
class Mlp {
 public:
  Mlp() = default;
  // All-zero parameters.
  explicit Mlp(std::vector<int> layer_sizes);
  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  static Mlp initialized(std::vector<int> layer_sizes, Rng& rng);

  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  static std::size_t param_count(std::span<const int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t num_params() const { return params_.size(); }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params();
  void set_params(std::span<const double> values);

  MlpOutput forward(std::span<const double> x) const;
  // Forward pass without recording a tape.
  std::vector<double> predict(std::span<const double> x) const;

  // Gradient of dot(dy, y) with respect to every parameter.
  std::vector<double> backward(const GradTape& tape, std::span<const double> dy) const;
  // Same, added into an existing gradient buffer.
  void backward_accumulate(const GradTape& tape, std::span<const double> dy,
                           std::span<double> grad) const;

 private:
  void check_input(std::span<const double> x) const;
  void check_tape(const GradTape& tape) const;

  std::vector<int> sizes_;
  std::vector<double> params_;
  std::uint64_t id_ = 0;
  std::uint64_t generation_ = 0;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t n, AdamOptions opts = {})
      : m(n, 0.0), v(n, 0.0), options(opts) {}

  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  AdamOptions options;
};

// Bias-corrected Adam update, in place. Throws NumericalError (leaving params
// and state untouched) if any gradient entry is not finite.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);

enum class ClipMode { kNorm, kValue };

// Rescales g so its L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(std::span<double> g, double max_norm);
// Clamps each entry of g to [-max_abs, max_abs].
void clip_grad_value(std::span<double> g, double max_abs);
void clip_grad(std::span<double> g, double threshold, ClipMode mode);

// Scalar objective that also writes its analytic gradient into grad.
using GradFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

// Max over coordinates of |analytic - fd| / max(1e-12, |analytic| + |fd|),
// with central differences of step h.
double grad_check(const GradFn& f, std::span<const double> params, double h = 1e-5);

double logsumexp(std::span<const double> v);
double logsumexp2(double a, double b);
std::vector<double> log_softmax(std::span<const double> v);
std::vector<double> softmax(std::span<const double> v);

bool all_finite(std::span<const double> v);

}  // namespace asaf

#endif  // ASAF_NUMKIT_HPP_
