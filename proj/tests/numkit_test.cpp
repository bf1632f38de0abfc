#include "asaf/numkit.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "asaf/error.hpp"
#include "asaf/rng.hpp"

namespace asaf {
namespace {

// Loop-based forward pass written independently of Mlp: ReLU on hidden
// layers, row-major weights followed by bias per layer.
std::vector<double> reference_forward(const std::vector<int>& sizes,
                                      const std::vector<double>& params,
                                      std::vector<double> x) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    std::vector<double> y(out, 0.0);
    for (int i = 0; i < out; ++i) {
      double acc = 0.0;
      for (int j = 0; j < in; ++j) acc += params[off + i * in + j] * x[j];
      y[i] = acc + params[off + out * in + i];
    }
    off += out * in + out;
    if (l + 2 < sizes.size()) {
      for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
    x = y;
  }
  return x;
}

TEST(MlpTest, ParamCountMatchesLayerSum) {
  EXPECT_EQ(Mlp::param_count(std::vector<int>{2, 4, 3}), 2u * 4 + 4 + 4 * 3 + 3);
  EXPECT_EQ(Mlp(std::vector<int>{5, 1}).num_params(), 6u);
}

TEST(MlpTest, ZeroNetReturnsZero) {
  Mlp net({3, 7, 2});
  for (double x0 : {-4.0, 0.0, 2.5}) {
    const std::vector<double> y = net.predict(std::vector<double>{x0, 1.0, -1.0});
    EXPECT_EQ(y, std::vector<double>(2, 0.0));
  }
}

TEST(MlpTest, IdentityComposition) {
  Mlp net({1, 1, 1});
  net.set_params(std::vector<double>{1.0, 0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(net.predict(std::vector<double>{2.0})[0], 2.0);
}

TEST(MlpTest, ForwardMatchesLoopOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net = Mlp::initialized({2, 4, 3}, rng);
    std::vector<double> p(net.num_params());
    for (double& v : p) v = rng.uniform(-2.0, 2.0);
    net.set_params(p);
    const std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const std::vector<double> got = net.forward(x).y;
    const std::vector<double> want = reference_forward({2, 4, 3}, p, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(MlpTest, InitializedWeightsWithinFanInBound) {
  Rng rng(3);
  Mlp net = Mlp::initialized({9, 4}, rng);
  const auto p = net.params();
  for (int i = 0; i < 36; ++i) EXPECT_LE(std::abs(p[i]), 1.0 / 3.0);
  for (int i = 36; i < 40; ++i) EXPECT_EQ(p[i], 0.0);
}

TEST(MlpTest, ForwardRejectsWrongInputSize) {
  Mlp net({3, 2});
  EXPECT_THROW(net.forward(std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(MlpTest, BackwardZeroDyGivesZeroGradient) {
  Rng rng(1);
  Mlp net = Mlp::initialized({3, 5, 2}, rng);
  const MlpOutput out = net.forward(std::vector<double>{0.1, -0.2, 0.3});
  const std::vector<double> g = net.backward(out.tape, std::vector<double>{0.0, 0.0});
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(MlpTest, BackwardLinearByHand) {
  Mlp net({1, 1});
  net.set_params(std::vector<double>{0.7, -0.2});
  const MlpOutput out = net.forward(std::vector<double>{3.0});
  const std::vector<double> g = net.backward(out.tape, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], 1.0);
}

TEST(MlpTest, BackwardMatchesFiniteDifferences) {
  Rng rng(11);
  Mlp net = Mlp::initialized({3, 5, 2}, rng);
  const std::vector<double> x{0.3, -0.8, 1.1};
  const std::vector<double> dy{0.6, -1.3};
  Mlp probe = net;
  const GradFn f = [&](std::span<const double> p, std::span<double> grad) {
    probe.set_params(p);
    const MlpOutput out = probe.forward(x);
    const std::vector<double> g = probe.backward(out.tape, dy);
    std::copy(g.begin(), g.end(), grad.begin());
    return out.y[0] * dy[0] + out.y[1] * dy[1];
  };
  EXPECT_LT(grad_check(f, net.params()), 1e-6);
}

TEST(MlpTest, StaleTapeRejected) {
  Rng rng(2);
  Mlp net = Mlp::initialized({2, 3, 1}, rng);
  const MlpOutput out = net.forward(std::vector<double>{1.0, 1.0});
  net.mutable_params()[0] += 0.1;
  EXPECT_THROW(net.backward(out.tape, std::vector<double>{1.0}), TapeError);

  Mlp other = Mlp::initialized({2, 3, 1}, rng);
  const MlpOutput foreign = other.forward(std::vector<double>{1.0, 1.0});
  EXPECT_THROW(net.backward(foreign.tape, std::vector<double>{1.0}), TapeError);
}

TEST(MlpTest, CopyIsIndependent) {
  Rng rng(4);
  Mlp a = Mlp::initialized({2, 2}, rng);
  Mlp b = a;
  b.mutable_params()[0] += 1.0;
  EXPECT_NE(a.params()[0], b.params()[0]);
}

TEST(AdamTest, ZeroGradientLeavesParams) {
  AdamState state(2);
  std::vector<double> p{1.0, -2.0};
  adam_step(state, p, std::vector<double>{0.0, 0.0}, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(state.t, 1);
}

TEST(AdamTest, FirstStepByHand) {
  // m_hat = g, v_hat = g^2 at t = 1, so the step is lr * g / (|g| + eps).
  AdamState state(1);
  std::vector<double> p{0.0};
  adam_step(state, p, std::vector<double>{1.0}, 0.1);
  EXPECT_NEAR(p[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(state.m[0], 0.1, 1e-16);
}

TEST(AdamTest, RepeatedStepsKeepSign) {
  AdamState state(1);
  std::vector<double> p{0.0};
  adam_step(state, p, std::vector<double>{-3.0}, 0.01);
  const double after_one = p[0];
  adam_step(state, p, std::vector<double>{-3.0}, 0.01);
  EXPECT_GT(after_one, 0.0);
  EXPECT_GT(p[0], after_one);
  EXPECT_EQ(state.t, 2);
}

TEST(AdamTest, RejectsBadInput) {
  AdamState state(1);
  std::vector<double> p{0.5};
  EXPECT_THROW(adam_step(state, p, std::vector<double>{1.0}, 0.0), ArgumentError);
  EXPECT_THROW(adam_step(state, p, std::vector<double>{std::nan("")}, 0.1), NumericalError);
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(state.t, 0);
}

TEST(ClipTest, NormAndValue) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);

  std::vector<double> small{0.1, -0.2};
  clip_grad_norm(small, 1.0);
  EXPECT_EQ(small, (std::vector<double>{0.1, -0.2}));

  std::vector<double> v{2.0, -0.5, -7.0};
  clip_grad_value(v, 1.0);
  EXPECT_EQ(v, (std::vector<double>{1.0, -0.5, -1.0}));
}

TEST(GradCheckTest, Quadratic) {
  const GradFn f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0];
    return x[0] * x[0];
  };
  EXPECT_LT(grad_check(f, std::vector<double>{3.0}), 1e-8);
}

TEST(GradCheckTest, ConstantIsExact) {
  const GradFn f = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    g[1] = 0.0;
    return 4.0;
  };
  EXPECT_EQ(grad_check(f, std::vector<double>{1.0, 2.0}), 0.0);
}

TEST(GradCheckTest, DetectsWrongGradient) {
  const GradFn f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 3.0 * x[0];
    return x[0] * x[0];
  };
  EXPECT_GT(grad_check(f, std::vector<double>{1.0}), 0.1);
}

TEST(LogSumExpTest, Values) {
  EXPECT_NEAR(logsumexp(std::vector<double>{0.0, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(logsumexp(std::vector<double>{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
  for (double a : {-5.0, 0.0, 123.25}) EXPECT_EQ(logsumexp(std::vector<double>{a}), a);
  EXPECT_THROW(logsumexp(std::vector<double>{}), ArgumentError);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(logsumexp(std::vector<double>{-inf, -inf}), -inf);
}

TEST(LogSumExpTest, SoftmaxSumsToOne) {
  const std::vector<double> p = softmax(std::vector<double>{1.0, -2.0, 0.5, 800.0});
  double sum = 0.0;
  for (double v : p) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  const std::vector<double> lp = log_softmax(std::vector<double>{std::log(3.0), 0.0});
  EXPECT_NEAR(std::exp(lp[0]), 0.75, 1e-15);
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(RngTest, UniformAndNormalMoments) {
  Rng rng(5);
  constexpr int kN = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / kN, 0.5, 0.005);
  EXPECT_NEAR(sn / kN, 0.0, 0.01);
  EXPECT_NEAR(sn2 / kN, 1.0, 0.02);
}

TEST(RngTest, CategoricalFrequencies) {
  Rng rng(6);
  const std::vector<double> p{0.2, 0.0, 0.8};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 50000; ++i) ++counts[rng.categorical(p)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / 50000.0, 0.2, 0.01);
}

}  // namespace
}  // namespace asaf
