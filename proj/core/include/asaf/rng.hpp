#ifndef ASAF_RNG_HPP_
#define ASAF_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>

namespace asaf {

// Mixes a base seed with a stream index so that independent streams (env vs.
// policy, episode i vs. episode j) never share a sequence.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Seeded random source. The distributions are computed from raw 64-bit draws
// rather than <random> distribution objects so sequences are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);
  // Inverse-CDF draw from a probability vector. Rounding slack at the top
  // end falls to the last index with positive mass.
  int categorical(std::span<const double> probs);

 private:
  std::mt19937_64 engine_;
};

}  // namespace asaf

#endif  // ASAF_RNG_HPP_
