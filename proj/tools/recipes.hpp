#ifndef ASAF_TOOLS_RECIPES_HPP_
#define ASAF_TOOLS_RECIPES_HPP_

// Reference experiments shared by `asaf verify` and the acceptance binary.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "asaf/train.hpp"

namespace asaf::recipes {

// One measured quantity against an upper bound; passes when value < threshold.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

Check make_check(std::string name, double value, double threshold);
bool all_pass(const std::vector<Check>& checks);

inline constexpr int kChainDemos = 200;
inline constexpr int kGridworldDemos = 50;
inline constexpr int kPointmassDemos = 25;
inline constexpr double kChainAlpha = 1.0;
inline constexpr double kGridworldAlpha = 0.25;

// Demo seeds are kept apart from training seeds.
std::uint64_t demo_seed(std::uint64_t seed);

TrainConfig chain_asaf(std::uint64_t seed);
TrainConfig chain_asqf(std::uint64_t seed);
TrainConfig gridworld_asqf(std::uint64_t seed);
TrainConfig pointmass_asaf1(std::uint64_t seed);

// Fitting p~ against p_E = [0.7, 0.2, 0.1] for three generators.
std::vector<Check> lemma1();
// Exact trajectory JS after chain ASAF training, for each seed.
std::vector<Check> theorem1(int n_seeds = 5);
// Analytic vs finite-difference gradients of the discriminator and BC losses.
std::vector<Check> gradients(int points = 10);
// ASQF on the chain (argmax agreement) and the gridworld (return gap).
std::vector<Check> asqf();
// ASAF-1 with a Gaussian policy on the point mass (return gap).
std::vector<Check> pointmass();

// Dispatch for `verify`: lemma1, theorem1, gradients or asqf. Throws
// ArgumentError for other names.
std::vector<Check> suite(std::string_view name);

}  // namespace asaf::recipes

#endif  // ASAF_TOOLS_RECIPES_HPP_
