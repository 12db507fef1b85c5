// Copyright 2026 The spdensity Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spd/ops.hpp"

namespace spd {
namespace {

using oracle::numeric_gradient;
using oracle::project;
using oracle::random_tensor;
using oracle::relative_error;

constexpr double kFdStep = 1e-3;
constexpr double kFdTol = 1e-4;

ConvSpec<double> random_conv(Index out, Index in, Index k, int stride, int dilation, std::mt19937_64& rng) {
  auto spec = make_conv<double>(out, in, k, stride, dilation);
  spec.weight = random_tensor(spec.weight.shape(), rng);
  spec.bias = random_tensor(spec.bias.shape(), rng);
  return spec;
}

// ---------------------------------------------------------------- conv2d

TEST(Conv2d, AllOnesThreeByThree) {
  auto spec = make_conv<double>(1, 1, 3);
  spec.weight = Tensor4<double>::constant(spec.weight.shape(), 1.0);
  const auto x = Tensor4<double>::constant({1, 1, 3, 3}, 1.0);
  const auto y = conv2d(x, spec);
  EXPECT_DOUBLE_EQ(y(0, 0, 1, 1), 9.0);
  EXPECT_DOUBLE_EQ(y(0, 0, 0, 0), 4.0);
  EXPECT_DOUBLE_EQ(y(0, 0, 2, 2), 4.0);
}

TEST(Conv2d, IdentityPointwiseKernel) {
  std::mt19937_64 rng(1);
  auto spec = make_conv<double>(1, 1, 1);
  spec.weight(0, 0, 0, 0) = 1.0;
  const auto x = random_tensor({2, 1, 5, 7}, rng);
  const auto y = conv2d(x, spec);
  EXPECT_TRUE((y.data() == x.data()).all());
}

TEST(Conv2d, DilatedFootprintTouchesOnlyNineTaps) {
  auto spec = make_conv<double>(1, 1, 3, 1, 2);
  spec.padding = 0;
  spec.weight = Tensor4<double>::constant(spec.weight.shape(), 1.0);
  for (Index r = 0; r < 5; ++r) {
    for (Index c = 0; c < 5; ++c) {
      Tensor4<double> x(1, 1, 5, 5);
      x(0, 0, r, c) = 1.0;
      const auto y = conv2d(x, spec);
      ASSERT_EQ(y.shape(), (Shape4{1, 1, 1, 1}));
      const bool tap = r % 2 == 0 && c % 2 == 0;
      EXPECT_DOUBLE_EQ(y(0, 0, 0, 0), tap ? 1.0 : 0.0) << r << "," << c;
    }
  }
}

TEST(Conv2d, ImpulseStampsDilatedKernel) {
  std::mt19937_64 rng(2);
  for (int d : {1, 2, 3}) {
    auto spec = random_conv(1, 1, 3, 1, d, rng);
    spec.bias(0, 0, 0, 0) = 0.0;
    Tensor4<double> x(1, 1, 11, 11);
    x(0, 0, 5, 5) = 1.0;
    const auto y = conv2d(x, spec);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) {
        // Cross-correlation: output at (5 - (i-1)d, 5 - (j-1)d) reads tap (i, j).
        EXPECT_DOUBLE_EQ(y(0, 0, 5 - (i - 1) * d, 5 - (j - 1) * d), spec.weight(0, 0, i, j));
      }
    double total = y.data().sum();
    EXPECT_NEAR(total, spec.weight.data().sum(), 1e-12);
  }
}

TEST(Conv2d, MatchesNestedLoopReference) {
  std::mt19937_64 rng(3);
  for (int stride : {1, 2})
    for (int dilation : {1, 2})
      for (Index k : {1, 3})
        for (Index h : {5, 8}) {
          auto spec = random_conv(2, 3, k, stride, dilation, rng);
          const auto x = random_tensor({2, 3, h, h}, rng);
          const auto y = conv2d(x, spec);
          const auto ref = oracle::conv_reference(x, spec.weight, spec.bias, stride, dilation, spec.padding);
          ASSERT_EQ(y.shape(), ref.shape());
          EXPECT_LE((y.data() - ref.data()).abs().maxCoeff(), 1e-12);
        }
}

TEST(Conv2d, FloatPathMatchesReference) {
  std::mt19937_64 rng(4);
  auto spec_d = random_conv(4, 3, 3, 1, 2, rng);
  const auto x_d = random_tensor({1, 3, 8, 8}, rng);
  ConvSpec<float> spec{spec_d.weight.cast<float>(), spec_d.bias.cast<float>(), 1, 2, spec_d.padding};
  const auto y = conv2d(x_d.cast<float>(), spec);
  const auto ref = oracle::conv_reference(x_d, spec_d.weight, spec_d.bias, 1, 2, spec_d.padding);
  EXPECT_LE((y.data().cast<double>() - ref.data()).abs().maxCoeff(), 1e-5);
}

TEST(Conv2d, OutputExtentFormula) {
  auto spec = make_conv<double>(1, 1, 3, 2, 2);
  spec.padding = 1;
  EXPECT_EQ(spec.out_extent(9, 3), (9 + 2 - 4 - 1) / 2 + 1);
  EXPECT_EQ(spec.out_extent(2, 3), 0);
}

TEST(Conv2d, RejectsBadShapes) {
  auto spec = make_conv<double>(2, 3, 3);
  EXPECT_THROW(conv2d(Tensor4<double>(1, 2, 5, 5), spec), ValidationError);
  auto valid = make_conv<double>(1, 1, 3, 1, 2);
  valid.padding = 0;
  EXPECT_THROW(conv2d(Tensor4<double>(1, 1, 4, 4), valid), ValidationError);
  const auto y = conv2d(Tensor4<double>(1, 3, 4, 4), spec);
  EXPECT_THROW(conv2d_backward(Tensor4<double>(1, 3, 4, 4), spec, Tensor4<double>(1, 2, 3, 3)), ValidationError);
  (void)y;
}

TEST(Conv2dBackward, BiasGradientIsUpstreamSum) {
  std::mt19937_64 rng(5);
  auto spec = random_conv(3, 2, 3, 1, 1, rng);
  const auto x = random_tensor({2, 2, 5, 5}, rng);
  const auto up = random_tensor({2, 3, 5, 5}, rng);
  const auto g = conv2d_backward(x, spec, up);
  for (Index o = 0; o < 3; ++o) {
    double s = 0;
    for (Index n = 0; n < 2; ++n) s += up.plane(n, o).sum();
    EXPECT_NEAR(g.bias(0, o, 0, 0), s, 1e-12);
  }
}

TEST(Conv2dBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(6);
  auto spec = random_conv(2, 2, 3, 2, 1, rng);
  const auto x = random_tensor({1, 2, 6, 6}, rng);
  const auto g = conv2d_backward(x, spec, Tensor4<double>(conv2d(x, spec).shape()));
  EXPECT_TRUE((g.input.data() == 0).all());
  EXPECT_TRUE((g.weight.data() == 0).all());
  EXPECT_TRUE((g.bias.data() == 0).all());
}

struct ConvCase {
  Shape4 input;
  Index out, k;
  int stride, dilation;
};

class Conv2dGradient : public ::testing::TestWithParam<ConvCase> {};

TEST_P(Conv2dGradient, MatchesFiniteDifferences) {
  const ConvCase cc = GetParam();
  std::mt19937_64 rng(7);
  auto spec = random_conv(cc.out, cc.input.c, cc.k, cc.stride, cc.dilation, rng);
  auto x = random_tensor(cc.input, rng);
  const auto r = random_tensor(conv2d(x, spec).shape(), rng);
  auto loss = [&] { return project(conv2d(x, spec), r); };
  const auto g = conv2d_backward(x, spec, r);
  EXPECT_LE(relative_error(g.input.data(), numeric_gradient(loss, x.data(), kFdStep)), kFdTol);
  EXPECT_LE(relative_error(g.weight.data(), numeric_gradient(loss, spec.weight.data(), kFdStep)), kFdTol);
  EXPECT_LE(relative_error(g.bias.data(), numeric_gradient(loss, spec.bias.data(), kFdStep)), kFdTol);
}

INSTANTIATE_TEST_SUITE_P(Shapes, Conv2dGradient,
                         ::testing::Values(ConvCase{{1, 2, 6, 6}, 2, 3, 1, 2}, ConvCase{{2, 3, 7, 7}, 2, 3, 2, 1},
                                           ConvCase{{1, 3, 5, 6}, 4, 1, 1, 1}, ConvCase{{2, 2, 8, 8}, 3, 3, 2, 2},
                                           ConvCase{{1, 1, 4, 4}, 1, 3, 1, 1}));

// ------------------------------------------------------------- batchnorm

TEST(BatchNorm, ConstantInputGivesBeta) {
  auto state = BatchNormState<double>::identity(2);
  state.beta(0, 0, 0, 0) = 0.3;
  state.beta(0, 1, 0, 0) = -1.5;
  Tensor4<double> x(2, 2, 3, 3);
  x.plane(0, 0).setConstant(4.0);
  x.plane(1, 0).setConstant(4.0);
  x.plane(0, 1).setConstant(-2.0);
  x.plane(1, 1).setConstant(-2.0);
  const auto y = batchnorm(x, state);
  EXPECT_NEAR((y.plane(0, 0) - 0.3).abs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR((y.plane(1, 1) + 1.5).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(BatchNorm, NormalisesPerChannel) {
  std::mt19937_64 rng(8);
  auto state = BatchNormState<double>::identity(3);
  const auto x = random_tensor({4, 3, 5, 5}, rng, -3.0, 5.0);
  const auto y = batchnorm(x, state);
  for (Index c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (Index n = 0; n < 4; ++n) {
      sum += y.plane(n, c).sum();
      sq += y.plane(n, c).square().sum();
    }
    const double m = sum / 100.0;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(sq / 100.0 - m * m, 1.0, 1e-3);
  }
}

TEST(BatchNorm, MatchesTwoPassReference) {
  std::mt19937_64 rng(9);
  auto state = BatchNormState<double>::identity(3);
  std::vector<double> gamma{0.5, 1.5, -0.7}, beta{0.1, -0.2, 0.3};
  for (Index c = 0; c < 3; ++c) {
    state.gamma(0, c, 0, 0) = gamma[c];
    state.beta(0, c, 0, 0) = beta[c];
  }
  const auto x = random_tensor({2, 3, 4, 4}, rng);
  const auto y = batchnorm(x, state);
  const auto ref = oracle::batchnorm_reference(x, gamma, beta, state.epsilon);
  EXPECT_LE((y.data() - ref.data()).abs().maxCoeff(), 1e-6);
}

TEST(BatchNorm, RunningStatisticsFollowMomentum) {
  std::mt19937_64 rng(10);
  auto state = BatchNormState<double>::identity(1);
  const auto x = random_tensor({2, 1, 3, 3}, rng);
  batchnorm(x, state);
  const double mean = x.data().mean();
  const double biased = (x.data() - mean).square().mean();
  const double unbiased = biased * 18.0 / 17.0;
  EXPECT_NEAR(state.running_mean(0, 0, 0, 0), 0.1 * mean, 1e-12);
  EXPECT_NEAR(state.running_var(0, 0, 0, 0), 0.9 + 0.1 * unbiased, 1e-12);
  EXPECT_GE(state.running_var.data().minCoeff(), 0.0);
}

TEST(BatchNorm, EvalModeIsAffineInRunningStats) {
  std::mt19937_64 rng(11);
  auto state = BatchNormState<double>::identity(2);
  state.mode = BnMode::eval;
  state.running_mean(0, 1, 0, 0) = 0.5;
  state.running_var(0, 1, 0, 0) = 4.0;
  state.gamma(0, 1, 0, 0) = 2.0;
  state.beta(0, 1, 0, 0) = 1.0;
  const auto x = random_tensor({1, 2, 3, 3}, rng);
  const auto y = batchnorm(x, state);
  const auto y2 = batchnorm_inference(x, state);
  EXPECT_TRUE((y.data() == y2.data()).all());
  EXPECT_NEAR(y(0, 1, 2, 1), 2.0 * (x(0, 1, 2, 1) - 0.5) / std::sqrt(4.0 + 1e-5) + 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(state.running_mean(0, 1, 0, 0), 0.5);
}

TEST(BatchNorm, RejectsSingleValueBatch) {
  auto state = BatchNormState<double>::identity(2);
  EXPECT_THROW(batchnorm(Tensor4<double>(1, 2, 1, 1), state), ValidationError);
  EXPECT_THROW(batchnorm(Tensor4<double>(1, 3, 2, 2), state), ValidationError);
}

TEST(BatchNormBackward, BetaAndGammaIdentities) {
  std::mt19937_64 rng(12);
  auto state = BatchNormState<double>::identity(2);
  const auto x = random_tensor({2, 2, 3, 3}, rng);
  const auto up = random_tensor(x.shape(), rng);
  const auto g = batchnorm_backward(x, state, up);
  for (Index c = 0; c < 2; ++c) EXPECT_NEAR(g.beta(0, c, 0, 0), up.plane(0, c).sum() + up.plane(1, c).sum(), 1e-12);
  const auto g0 = batchnorm_backward(x, state, Tensor4<double>(x.shape()));
  EXPECT_TRUE((g0.gamma.data() == 0).all());
}

TEST(BatchNormBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto state = BatchNormState<double>::identity(2);
    state.gamma = random_tensor(state.gamma.shape(), rng, 0.5, 1.5);
    state.beta = random_tensor(state.beta.shape(), rng);
    auto x = random_tensor({2, 2, 3, 3}, rng);
    const auto r = random_tensor(x.shape(), rng);
    auto loss = [&] {
      auto scratch = state;
      return project(batchnorm(x, scratch), r);
    };
    const auto g = batchnorm_backward(x, state, r);
    EXPECT_LE(relative_error(g.input.data(), numeric_gradient(loss, x.data(), kFdStep)), kFdTol);
    EXPECT_LE(relative_error(g.gamma.data(), numeric_gradient(loss, state.gamma.data(), kFdStep)), kFdTol);
    EXPECT_LE(relative_error(g.beta.data(), numeric_gradient(loss, state.beta.data(), kFdStep)), kFdTol);
  }
}

// ------------------------------------------------------------ relu / add

TEST(Relu, Values) {
  Tensor4<double> x(1, 1, 1, 3);
  x.data() << -1, 0, 2;
  const auto y = relu(x);
  EXPECT_EQ(y.data()[0], 0);
  EXPECT_EQ(y.data()[1], 0);
  EXPECT_EQ(y.data()[2], 2);
  std::mt19937_64 rng(14);
  const auto pos = random_tensor({1, 2, 3, 3}, rng, 0.0, 2.0);
  EXPECT_TRUE((relu(pos).data() == pos.data()).all());
}

TEST(Relu, BackwardMasksNonPositive) {
  Tensor4<double> x(1, 1, 1, 3), up(1, 1, 1, 3);
  x.data() << -1, 0, 2;
  up.data() << 5, 6, 7;
  const auto g = relu_backward(x, up);
  EXPECT_EQ(g.data()[0], 0);
  EXPECT_EQ(g.data()[1], 0);
  EXPECT_EQ(g.data()[2], 7);
}

TEST(Relu, MatchesFiniteDifferencesAwayFromKink) {
  std::mt19937_64 rng(15);
  auto x = oracle::random_away_from_zero({2, 2, 3, 3}, rng);
  const auto r = random_tensor(x.shape(), rng);
  auto loss = [&] { return project(relu(x), r); };
  EXPECT_LE(relative_error(relu_backward(x, r).data(), numeric_gradient(loss, x.data(), kFdStep)), kFdTol);
}

TEST(Add, IdentityCommutativityAndShapes) {
  std::mt19937_64 rng(16);
  const auto a = random_tensor({2, 2, 3, 3}, rng), b = random_tensor({2, 2, 3, 3}, rng);
  EXPECT_TRUE((add(a, Tensor4<double>(a.shape())).data() == a.data()).all());
  EXPECT_TRUE((add(a, b).data() == add(b, a).data()).all());
  EXPECT_THROW(add(a, Tensor4<double>(2, 2, 3, 4)), ValidationError);
}

// --------------------------------------------------------------- resize

TEST(BilinearResize, HalfPixelRamp) {
  Tensor4<double> x(1, 1, 1, 2);
  x.data() << 0, 1;
  const auto y = bilinear_resize(x, 1, 4);
  ASSERT_EQ(y.shape(), (Shape4{1, 1, 1, 4}));
  EXPECT_DOUBLE_EQ(y.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(y.data()[1], 0.25);
  EXPECT_DOUBLE_EQ(y.data()[2], 0.75);
  EXPECT_DOUBLE_EQ(y.data()[3], 1.0);
}

TEST(BilinearResize, ConstantAndIdentity) {
  std::mt19937_64 rng(17);
  const auto c = Tensor4<double>::constant({1, 2, 3, 5}, 0.7);
  const auto y = bilinear_resize(c, 7, 11);
  EXPECT_LE((y.data() - 0.7).abs().maxCoeff(), 1e-12);
  const auto x = random_tensor({2, 2, 4, 6}, rng);
  EXPECT_LE((bilinear_resize(x, 4, 6).data() - x.data()).abs().maxCoeff(), 1e-15);
  EXPECT_THROW(bilinear_resize(x, 0, 3), ValidationError);
}

TEST(BilinearResize, MatchesFiniteDifferences) {
  std::mt19937_64 rng(18);
  for (auto [h, w, nh, nw] : {std::array<Index, 4>{3, 4, 8, 7}, {8, 8, 3, 5}, {2, 2, 8, 8}}) {
    auto x = random_tensor({1, 2, h, w}, rng);
    const auto r = random_tensor({1, 2, nh, nw}, rng);
    auto loss = [&] { return project(bilinear_resize(x, nh, nw), r); };
    const auto g = bilinear_resize_backward(r, h, w);
    EXPECT_LE(relative_error(g.data(), numeric_gradient(loss, x.data(), kFdStep)), kFdTol);
  }
}

// ---------------------------------------------------- pool / subsample

TEST(MeanPool, Values) {
  Tensor4<double> x(1, 1, 2, 2);
  x.data() << 1, 2, 3, 4;
  EXPECT_DOUBLE_EQ(mean_pool(x, 2).data()[0], 2.5);
  EXPECT_TRUE((mean_pool(x, 1).data() == x.data()).all());
  std::mt19937_64 rng(19);
  const auto r = random_tensor({2, 3, 12, 8}, rng);
  EXPECT_NEAR(mean_pool(r, 4).data().sum() * 16.0, r.data().sum(), 1e-5);
  EXPECT_THROW(mean_pool(r, 5), ValidationError);
}

TEST(Subsample, KeepsEveryStrideAndBackwardScatters) {
  std::mt19937_64 rng(20);
  auto x = random_tensor({1, 2, 5, 6}, rng);
  const auto y = subsample(x, 2);
  ASSERT_EQ(y.shape(), (Shape4{1, 2, 3, 3}));
  EXPECT_EQ(y(0, 1, 2, 1), x(0, 1, 4, 2));
  const auto r = random_tensor(y.shape(), rng);
  auto loss = [&] { return project(subsample(x, 2), r); };
  EXPECT_LE(relative_error(subsample_backward(r, x.shape(), 2).data(), numeric_gradient(loss, x.data(), kFdStep)),
            kFdTol);
}

// ----------------------------------------------------------------- losses

TEST(SoftmaxCrossEntropy, EqualLogitsGiveLn2) {
  Tensor4<double> logits(2, 2, 3, 3), labels(2, 1, 3, 3);
  labels.data()(Eigen::seq(0, 8)).setOnes();
  EXPECT_NEAR(softmax_cross_entropy(logits, labels).value, std::log(2.0), 1e-12);
}

TEST(SoftmaxCrossEntropy, SaturatedMarginIsNearZero) {
  Tensor4<double> logits(1, 2, 2, 2), labels(1, 1, 2, 2);
  labels.data() << 0, 1, 1, 0;
  for (Index i = 0; i < 4; ++i) {
    const Index y = i / 2, x = i % 2;
    logits(0, static_cast<Index>(labels.data()[i]), y, x) = 20.0;
  }
  EXPECT_LT(softmax_cross_entropy(logits, labels).value, 1e-6);
}

TEST(SoftmaxCrossEntropy, MatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto logits = random_tensor({1, 2, 2, 2}, rng, -2, 2);
    Tensor4<double> labels(1, 1, 2, 2);
    labels.data() << 0, 1, 1, trial % 2;
    auto loss = [&] { return softmax_cross_entropy(logits, labels).value; };
    const auto res = softmax_cross_entropy(logits, labels);
    EXPECT_LE(relative_error(res.grad.data(), numeric_gradient(loss, logits.data(), kFdStep)), kFdTol);
  }
}

TEST(SoftmaxCrossEntropy, RejectsInvalidLabels) {
  Tensor4<double> logits(1, 2, 2, 2), labels(1, 1, 2, 2);
  labels(0, 0, 1, 1) = 2.0;
  EXPECT_THROW(softmax_cross_entropy(logits, labels), ValidationError);
  EXPECT_THROW(softmax_cross_entropy(logits, Tensor4<double>(1, 1, 2, 3)), ValidationError);
}

TEST(MseLoss, ValuesAndGradient) {
  std::mt19937_64 rng(22);
  const auto t = random_tensor({2, 1, 3, 3}, rng);
  EXPECT_DOUBLE_EQ(mse_loss(t, t).value, 0.0);
  Tensor4<double> shifted(t.shape(), t.data() + 1.0);
  EXPECT_NEAR(mse_loss(shifted, t).value, 1.0, 1e-12);
  auto p = random_tensor(t.shape(), rng);
  auto loss = [&] { return mse_loss(p, t).value; };
  EXPECT_LE(relative_error(mse_loss(p, t).grad.data(), numeric_gradient(loss, p.data(), kFdStep)), kFdTol);
  EXPECT_THROW(mse_loss(p, Tensor4<double>(2, 1, 3, 4)), ValidationError);
}

}  // namespace
}  // namespace spd
