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

#include <random>

#include "oracles.hpp"
#include "spd/model.hpp"

namespace spd {
namespace {

using oracle::random_tensor;

// Whole-network checks use a smaller step than the per-layer ones so that no
// perturbation carries a pre-activation across a ReLU kink.
constexpr double kNetworkFdStep = 1e-5;
constexpr double kZeroGradientFloor = 1e-6;

/// Closed-form parameter count written out from the layer list.
Index closed_form_parameter_count(const ModelSpec& s) {
  const Index C = s.input_channels, W = s.stem_width, B = s.bottleneck_width;
  const Index stem = 3 * 3 * C * W + W + 2 * W;
  const Index block = (W * B + B) + 2 * B + (3 * 3 * B * B + B) + 2 * B + (B * W + W) + 2 * W;
  const Index heads = (3 * 3 * W * 2 + 2) + (3 * 3 * W * 1 + 1);
  return stem + s.block_count * block + heads;
}

ModelSpec small_spec(ArchKind kind, Index channels = 3) { return ModelSpec{kind, channels, 8, 4, 6}; }

Tensor4<double> random_labels(Shape4 s, std::mt19937_64& rng) {
  std::bernoulli_distribution b(0.5);
  Tensor4<double> t(s);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = b(rng) ? 1.0 : 0.0;
  return t;
}

TEST(ArchKind, ParsesAndPrints) {
  for (ArchKind k : {ArchKind::ours, ArchKind::ours_atrous, ArchKind::strided_baseline}) {
    EXPECT_EQ(parse_arch_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_arch_kind("deeplab"), ValidationError);
}

TEST(Model, PublishedLayoutParameterCount) {
  const ModelSpec spec{ArchKind::ours, 13, 256, 64, 6};
  Model<float> m(spec, 0);
  EXPECT_EQ(m.parameter_count(), closed_form_parameter_count(spec));
  Index counted = 0;
  for (const auto& p : m.parameters()) counted += p.tensor->size();
  EXPECT_EQ(counted, m.parameter_count());
}

TEST(Model, AtrousHasSameParameterCount) {
  for (Index c : {3, 13}) {
    Model<float> ours(small_spec(ArchKind::ours, c), 1), atrous(small_spec(ArchKind::ours_atrous, c), 1);
    EXPECT_EQ(ours.parameter_count(), atrous.parameter_count());
    EXPECT_EQ(ours.parameter_count(), closed_form_parameter_count(small_spec(ArchKind::ours, c)));
  }
}

TEST(Model, AtrousDilatesOnlyTheLastBlock) {
  Model<float> m(small_spec(ArchKind::ours_atrous), 2);
  const auto& blocks = m.blocks();
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) EXPECT_EQ(blocks[i].conv2.dilation, 1);
  EXPECT_EQ(blocks.back().conv1.dilation, 2);
  EXPECT_EQ(blocks.back().conv2.dilation, 2);
  EXPECT_EQ(blocks.back().conv3.dilation, 2);
  EXPECT_EQ(blocks.back().conv2.padding, 2);
}

TEST(Model, InitialisationFollowsConventions) {
  Model<float> a(small_spec(ArchKind::ours), 7), b(small_spec(ArchKind::ours), 7), c(small_spec(ArchKind::ours), 8);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool any_difference = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_TRUE((pa[i].tensor->data() == pb[i].tensor->data()).all()) << pa[i].name;
    any_difference |= !(pa[i].tensor->data() == pc[i].tensor->data()).all();
  }
  EXPECT_TRUE(any_difference);
  EXPECT_TRUE((a.stem_conv().bias.data() == 0).all());
  EXPECT_TRUE((a.stem_bn().gamma.data() == 1).all());
  EXPECT_TRUE((a.stem_bn().beta.data() == 0).all());
  // He-normal: variance 2 / fan_in on the stem kernel (fan_in = 3*3*3).
  const auto& w = a.stem_conv().weight.data();
  Model<float> wide(ModelSpec{ArchKind::ours, 3, 256, 4, 1}, 3);
  const auto& ww = wide.stem_conv().weight.data();
  const double var = ww.cast<double>().square().mean();
  EXPECT_NEAR(var, 2.0 / 27.0, 0.15 * 2.0 / 27.0);
  EXPECT_GT(w.abs().maxCoeff(), 0.0f);
}

TEST(Model, StrideOneKindsPreserveShape) {
  for (ArchKind kind : {ArchKind::ours, ArchKind::ours_atrous}) {
    Model<float> m(small_spec(kind, 13), 3);
    for (Index h : {5, 8, 13, 32}) {
      const auto out = m.forward(Tensor4<float>(1, 13, h, h + 3));
      EXPECT_EQ(out.semantic.shape(), (Shape4{1, 2, h, h + 3}));
      EXPECT_EQ(out.density.shape(), (Shape4{1, 1, h, h + 3}));
    }
  }
}

TEST(Model, StridedBaselineDecodesToInputSize) {
  Model<float> m(small_spec(ArchKind::strided_baseline, 13), 4);
  EXPECT_EQ(m.feature_extent(32, 32), (std::pair<Index, Index>{8, 8}));
  EXPECT_EQ(m.blocks()[1].stride(), 2);
  EXPECT_EQ(m.blocks()[3].stride(), 2);
  EXPECT_EQ(m.blocks()[0].stride(), 1);
  std::mt19937_64 rng(5);
  const auto x = random_tensor({2, 13, 32, 32}, rng).cast<float>();
  const auto out = m.forward(x);
  EXPECT_EQ(out.semantic.shape(), (Shape4{2, 2, 32, 32}));
  EXPECT_EQ(out.density.shape(), (Shape4{2, 1, 32, 32}));
  const auto odd = m.forward(Tensor4<float>(1, 13, 13, 11));
  EXPECT_EQ(odd.density.shape(), (Shape4{1, 1, 13, 11}));
  EXPECT_THROW(Model<float>(ModelSpec{ArchKind::strided_baseline, 3, 8, 4, 3}, 0), ValidationError);
}

TEST(Model, RejectsChannelMismatch) {
  Model<float> m(small_spec(ArchKind::ours, 4), 0);
  EXPECT_THROW(m.forward(Tensor4<float>(1, 3, 8, 8)), ValidationError);
  EXPECT_THROW(Model<float>(ModelSpec{ArchKind::ours, 0, 8, 4, 1}, 0), ValidationError);
}

TEST(Model, EvalForwardIsDeterministicAndStateless) {
  Model<float> m(small_spec(ArchKind::ours_atrous), 9);
  std::mt19937_64 rng(6);
  m.forward(random_tensor({2, 3, 12, 12}, rng).cast<float>());  // populate running stats
  m.set_mode(BnMode::eval);
  const auto x = random_tensor({1, 3, 12, 12}, rng).cast<float>();
  const auto a = m.forward(x), b = m.forward(x), c = m.infer(x);
  EXPECT_TRUE((a.density.data() == b.density.data()).all());
  EXPECT_TRUE((a.semantic.data() == b.semantic.data()).all());
  EXPECT_TRUE((a.density.data() == c.density.data()).all());
  EXPECT_TRUE((a.semantic.data() == c.semantic.data()).all());
}

TEST(Model, SkipConnectionIsWired) {
  // With conv3 zeroed the residual branch collapses to beta = 0, so the
  // block reduces to ReLU(block input).
  Model<double> m(ModelSpec{ArchKind::ours, 3, 6, 3, 1}, 10);
  m.blocks()[0].conv3.weight.data().setZero();
  m.blocks()[0].conv3.bias.data().setZero();
  std::mt19937_64 rng(7);
  const auto x = random_tensor({2, 3, 7, 7}, rng);
  const auto out = m.forward(x);
  auto bn = m.stem_bn();
  const auto block_in = batchnorm(conv2d(x, m.stem_conv()), bn);
  const auto features = relu(block_in);
  const auto expected = conv2d(features, m.density_head());
  EXPECT_LE((out.density.data() - expected.data()).abs().maxCoeff(), 1e-10);

  Model<double> intact(ModelSpec{ArchKind::ours, 3, 6, 3, 1}, 10);
  EXPECT_GT((intact.forward(x).density.data() - expected.data()).abs().maxCoeff(), 1e-6);
}

TEST(JointLoss, TotalIsSumOfTerms) {
  std::mt19937_64 rng(8);
  const auto logits = random_tensor({1, 2, 4, 4}, rng), dens = random_tensor({1, 1, 4, 4}, rng);
  const auto labels = random_labels({1, 1, 4, 4}, rng), target = random_tensor({1, 1, 4, 4}, rng);
  const auto l = joint_loss(logits, dens, labels, target);
  EXPECT_DOUBLE_EQ(l.breakdown.total, l.breakdown.semantic + l.breakdown.density);
  EXPECT_GE(l.breakdown.semantic, 0.0);
  EXPECT_GE(l.breakdown.density, 0.0);
  EXPECT_THROW(joint_loss(logits, Tensor4<double>(1, 1, 4, 5), labels, target), ValidationError);
}

TEST(JointLoss, PerfectPredictionIsNearZero) {
  std::mt19937_64 rng(9);
  const auto labels = random_labels({1, 1, 5, 5}, rng), target = random_tensor({1, 1, 5, 5}, rng);
  Tensor4<double> logits(1, 2, 5, 5);
  for (Index y = 0; y < 5; ++y)
    for (Index x = 0; x < 5; ++x) logits(0, static_cast<Index>(labels(0, 0, y, x)), y, x) = 30.0;
  EXPECT_LT(joint_loss(logits, target, labels, target).breakdown.total, 1e-6);
}

TEST(JointLoss, DensityTermIgnoresSemantics) {
  std::mt19937_64 rng(10);
  const auto logits = random_tensor({1, 2, 3, 3}, rng);
  const auto labels = random_labels({1, 1, 3, 3}, rng);
  const Tensor4<double> zero(1, 1, 3, 3);
  EXPECT_EQ(joint_loss(logits, zero, labels, zero).breakdown.density, 0.0);
}

TEST(Model, EndToEndGradientMatchesFiniteDifferences) {
  for (ArchKind kind : {ArchKind::ours, ArchKind::ours_atrous}) {
    Model<double> m(ModelSpec{kind, 3, 4, 2, 1}, 11);
    std::mt19937_64 rng(12);
    for (auto& p : m.parameters()) {
      if (p.name.find("bias") != std::string::npos || p.name.find("beta") != std::string::npos) {
        *p.tensor = random_tensor(p.tensor->shape(), rng, -0.2, 0.2);
      }
    }
    const auto x = random_tensor({1, 3, 6, 6}, rng);
    const auto labels = random_labels({1, 1, 6, 6}, rng);
    const auto target = random_tensor({1, 1, 6, 6}, rng, 0.0, 2.0);
    auto loss = [&] {
      const auto out = m.forward(x);
      return joint_loss(out.semantic, out.density, labels, target).breakdown.total;
    };
    m.zero_grad();
    const auto out = m.forward(x);
    const auto jl = joint_loss(out.semantic, out.density, labels, target);
    m.backward(jl.grad_semantic, jl.grad_density);
    for (auto& p : m.parameters()) {
      const Eigen::ArrayXd analytic = p.tensor->grad();
      const auto numeric = oracle::numeric_gradient(loss, p.tensor->data(), kNetworkFdStep);
      EXPECT_LE(oracle::relative_error(analytic, numeric, kZeroGradientFloor), 1e-3) << to_string(kind) << " " << p.name;
    }
  }
}

TEST(Model, StridedGradientMatchesFiniteDifferences) {
  Model<double> m(ModelSpec{ArchKind::strided_baseline, 2, 4, 2, 4}, 13);
  std::mt19937_64 rng(14);
  const auto x = random_tensor({2, 2, 8, 8}, rng);
  const auto labels = random_labels({2, 1, 8, 8}, rng);
  const auto target = random_tensor({2, 1, 8, 8}, rng, 0.0, 2.0);
  auto loss = [&] {
    const auto out = m.forward(x);
    return joint_loss(out.semantic, out.density, labels, target).breakdown.total;
  };
  m.zero_grad();
  const auto out = m.forward(x);
  const auto jl = joint_loss(out.semantic, out.density, labels, target);
  m.backward(jl.grad_semantic, jl.grad_density);
  for (auto& p : m.parameters()) {
    const Eigen::ArrayXd analytic = p.tensor->grad();
    const auto numeric = oracle::numeric_gradient(loss, p.tensor->data(), kNetworkFdStep);
    EXPECT_LE(oracle::relative_error(analytic, numeric, kZeroGradientFloor), 1e-3) << p.name;
  }
}

TEST(Model, SmallGradientStepDecreasesLoss) {
  for (ArchKind kind : {ArchKind::ours, ArchKind::ours_atrous, ArchKind::strided_baseline}) {
    Model<double> m(ModelSpec{kind, 3, 8, 4, 4}, 15);
    std::mt19937_64 rng(16);
    const auto x = random_tensor({2, 3, 8, 8}, rng);
    const auto labels = random_labels({2, 1, 8, 8}, rng);
    const auto target = random_tensor({2, 1, 8, 8}, rng, 0.0, 2.0);
    m.zero_grad();
    const auto out = m.forward(x);
    const auto before = joint_loss(out.semantic, out.density, labels, target);
    m.backward(before.grad_semantic, before.grad_density);
    for (auto& p : m.parameters()) p.tensor->data() -= 1e-3 * p.tensor->grad();
    const auto after_out = m.forward(x);
    const double after = joint_loss(after_out.semantic, after_out.density, labels, target).breakdown.total;
    EXPECT_LT(after, before.breakdown.total) << to_string(kind);
  }
}

TEST(Model, BackwardWithoutForwardIsALogicError) {
  Model<float> m(small_spec(ArchKind::ours), 0);
  EXPECT_THROW(m.backward(Tensor4<float>(1, 2, 5, 5), Tensor4<float>(1, 1, 5, 5)), std::logic_error);
}

TEST(Model, BufferNamesAreStable) {
  Model<float> m(small_spec(ArchKind::ours), 0);
  const auto buffers = m.buffers();
  ASSERT_FALSE(buffers.empty());
  EXPECT_EQ(buffers.front().name, "stem.bn.running_mean");
  EXPECT_EQ(m.parameters().front().name, "stem.conv.weight");
}

}  // namespace
}  // namespace spd
