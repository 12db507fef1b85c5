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

#include "spd/model.hpp"

#include <cmath>
#include <random>

namespace spd {
namespace {

// Heads feed the loss directly; a reduced gain keeps the initial logits near
// zero so an untrained classifier starts close to ln 2.
constexpr double kHeadInitGain = 0.05;

template <typename Scalar>
void he_normal(ConvSpec<Scalar>& conv, std::mt19937_64& rng, double gain = 1.0) {
  const double fan_in = static_cast<double>(conv.in_channels() * conv.kernel_h() * conv.kernel_w());
  std::normal_distribution<double> dist(0.0, gain * std::sqrt(2.0 / fan_in));
  for (Index i = 0; i < conv.weight.size(); ++i) conv.weight.data()[i] = static_cast<Scalar>(dist(rng));
  conv.bias.data().setZero();
}

template <typename Scalar>
void accumulate(Tensor4<Scalar>& param, const Tensor4<Scalar>& grad) {
  param.grad() += grad.data();
}

template <typename Scalar>
void add_conv(std::vector<typename Model<Scalar>::NamedTensor>& out, const std::string& prefix,
              ConvSpec<Scalar>& conv) {
  out.push_back({prefix + ".weight", &conv.weight});
  out.push_back({prefix + ".bias", &conv.bias});
}

template <typename Scalar>
void add_bn(std::vector<typename Model<Scalar>::NamedTensor>& out, const std::string& prefix,
            BatchNormState<Scalar>& bn) {
  out.push_back({prefix + ".gamma", &bn.gamma});
  out.push_back({prefix + ".beta", &bn.beta});
}

template <typename Scalar>
void add_bn_buffers(std::vector<typename Model<Scalar>::NamedTensor>& out, const std::string& prefix,
                    BatchNormState<Scalar>& bn) {
  out.push_back({prefix + ".running_mean", &bn.running_mean});
  out.push_back({prefix + ".running_var", &bn.running_var});
}

template <typename Scalar>
std::vector<typename Model<Scalar>::ConstNamedTensor> as_const(
    const std::vector<typename Model<Scalar>::NamedTensor>& v) {
  std::vector<typename Model<Scalar>::ConstNamedTensor> out;
  out.reserve(v.size());
  for (const auto& t : v) out.push_back({t.name, t.tensor});
  return out;
}

}  // namespace

std::string to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::ours:
      return "ours";
    case ArchKind::ours_atrous:
      return "ours_atrous";
    case ArchKind::strided_baseline:
      return "strided_baseline";
  }
  return "unknown";
}

ArchKind parse_arch_kind(std::string_view name) {
  if (name == "ours") return ArchKind::ours;
  if (name == "ours_atrous") return ArchKind::ours_atrous;
  if (name == "strided_baseline") return ArchKind::strided_baseline;
  throw ValidationError("unknown architecture '" + std::string(name) +
                        "' (expected ours, ours_atrous or strided_baseline)");
}

template <typename Scalar>
JointLoss<Scalar> joint_loss(const Tensor4<Scalar>& semantic_logits, const Tensor4<Scalar>& density,
                             const Tensor4<Scalar>& labels, const Tensor4<Scalar>& density_target) {
  if (semantic_logits.n() != density.n() || semantic_logits.h() != density.h() ||
      semantic_logits.w() != density.w()) {
    throw ValidationError("joint_loss: semantic " + semantic_logits.shape().str() +
                          " and density " + density.shape().str() + " disagree spatially");
  }
  auto ce = softmax_cross_entropy(semantic_logits, labels);
  auto mse = mse_loss(density, density_target);
  JointLoss<Scalar> out;
  out.breakdown.semantic = ce.value;
  out.breakdown.density = mse.value;
  out.breakdown.total = ce.value + mse.value;
  out.grad_semantic = std::move(ce.grad);
  out.grad_density = std::move(mse.grad);
  return out;
}

template <typename Scalar>
Model<Scalar>::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.input_channels < 1) throw ValidationError("build_model: input_channels must be >= 1");
  if (spec.stem_width < 1 || spec.bottleneck_width < 1 || spec.block_count < 1) {
    throw ValidationError("build_model: widths and block count must be positive");
  }
  if (spec.kind == ArchKind::strided_baseline && spec.block_count < 4) {
    throw ValidationError("build_model: strided_baseline needs at least 4 blocks");
  }
  std::mt19937_64 rng(seed);
  const Index W = spec.stem_width;
  const Index B = spec.bottleneck_width;

  stem_conv_ = make_conv<Scalar>(W, spec.input_channels, 3);
  he_normal(stem_conv_, rng);
  stem_bn_ = BatchNormState<Scalar>::identity(W);

  for (int i = 0; i < spec.block_count; ++i) {
    const bool last = i == spec.block_count - 1;
    const int dilation = (spec.kind == ArchKind::ours_atrous && last) ? 2 : 1;
    const int stride = (spec.kind == ArchKind::strided_baseline && (i == 1 || i == 3)) ? 2 : 1;
    ResNetBlock<Scalar> block;
    block.conv1 = make_conv<Scalar>(B, W, 1, 1, dilation);
    block.conv2 = make_conv<Scalar>(B, B, 3, stride, dilation);
    block.conv3 = make_conv<Scalar>(W, B, 1, 1, dilation);
    he_normal(block.conv1, rng);
    he_normal(block.conv2, rng);
    he_normal(block.conv3, rng);
    block.bn1 = BatchNormState<Scalar>::identity(B);
    block.bn2 = BatchNormState<Scalar>::identity(B);
    block.bn3 = BatchNormState<Scalar>::identity(W);
    blocks_.push_back(std::move(block));
  }

  semantic_head_ = make_conv<Scalar>(2, W, 3);
  density_head_ = make_conv<Scalar>(1, W, 3);
  he_normal(semantic_head_, rng, kHeadInitGain);
  he_normal(density_head_, rng, kHeadInitGain);
  set_mode(BnMode::train);
}

template <typename Scalar>
void Model<Scalar>::set_mode(BnMode mode) {
  mode_ = mode;
  stem_bn_.mode = mode;
  for (auto& b : blocks_) b.bn1.mode = b.bn2.mode = b.bn3.mode = mode;
  tape_.valid = false;
}

template <typename Scalar>
void Model<Scalar>::check_input(const Tensor4<Scalar>& image) const {
  if (image.c() != spec_.input_channels) {
    throw ValidationError("forward: model expects " + std::to_string(spec_.input_channels) +
                          " input bands, image " + image.shape().str() + " has " +
                          std::to_string(image.c()));
  }
}

template <typename Scalar>
std::pair<Index, Index> Model<Scalar>::feature_extent(Index h, Index w) const {
  for (const auto& b : blocks_) {
    h = b.conv2.out_extent(h, 3);
    w = b.conv2.out_extent(w, 3);
  }
  return {h, w};
}

template <typename Scalar>
ModelOutput<Scalar> Model<Scalar>::forward(const Tensor4<Scalar>& image) {
  check_input(image);
  Tape tape;
  tape.image = image;
  tape.stem_pre = conv2d(image, stem_conv_);
  Tensor4<Scalar> x = batchnorm(tape.stem_pre, stem_bn_);
  for (auto& block : blocks_) {
    BlockTape bt;
    bt.x = std::move(x);
    bt.a1 = conv2d(bt.x, block.conv1);
    bt.b1 = batchnorm(bt.a1, block.bn1);
    bt.r1 = relu(bt.b1);
    bt.a2 = conv2d(bt.r1, block.conv2);
    bt.b2 = batchnorm(bt.a2, block.bn2);
    bt.r2 = relu(bt.b2);
    bt.a3 = conv2d(bt.r2, block.conv3);
    const Tensor4<Scalar> b3 = batchnorm(bt.a3, block.bn3);
    bt.z = block.stride() == 1 ? add(b3, bt.x) : add(b3, subsample(bt.x, block.stride()));
    x = relu(bt.z);
    tape.blocks.push_back(std::move(bt));
  }
  tape.features = x;
  if (x.h() != image.h() || x.w() != image.w()) {
    tape.decoded = bilinear_resize(x, image.h(), image.w());
  } else {
    tape.decoded = std::move(x);
  }
  ModelOutput<Scalar> out{conv2d(tape.decoded, semantic_head_), conv2d(tape.decoded, density_head_)};
  tape.valid = true;
  tape_ = std::move(tape);
  return out;
}

template <typename Scalar>
ModelOutput<Scalar> Model<Scalar>::infer(const Tensor4<Scalar>& image) const {
  check_input(image);
  Tensor4<Scalar> x = batchnorm_inference(conv2d(image, stem_conv_), stem_bn_);
  for (const auto& block : blocks_) {
    auto r1 = relu(batchnorm_inference(conv2d(x, block.conv1), block.bn1));
    auto r2 = relu(batchnorm_inference(conv2d(r1, block.conv2), block.bn2));
    auto b3 = batchnorm_inference(conv2d(r2, block.conv3), block.bn3);
    x = relu(block.stride() == 1 ? add(b3, x) : add(b3, subsample(x, block.stride())));
  }
  if (x.h() != image.h() || x.w() != image.w()) x = bilinear_resize(x, image.h(), image.w());
  return {conv2d(x, semantic_head_), conv2d(x, density_head_)};
}

template <typename Scalar>
void Model<Scalar>::backward(const Tensor4<Scalar>& grad_semantic,
                             const Tensor4<Scalar>& grad_density) {
  if (!tape_.valid) throw std::logic_error("Model::backward called without a recorded forward pass");

  auto gs = conv2d_backward(tape_.decoded, semantic_head_, grad_semantic);
  auto gd = conv2d_backward(tape_.decoded, density_head_, grad_density);
  accumulate(semantic_head_.weight, gs.weight);
  accumulate(semantic_head_.bias, gs.bias);
  accumulate(density_head_.weight, gd.weight);
  accumulate(density_head_.bias, gd.bias);

  Tensor4<Scalar> g = add(gs.input, gd.input);
  if (tape_.features.h() != tape_.decoded.h() || tape_.features.w() != tape_.decoded.w()) {
    g = bilinear_resize_backward(g, tape_.features.h(), tape_.features.w());
  }

  for (std::size_t i = blocks_.size(); i-- > 0;) {
    auto& block = blocks_[i];
    const BlockTape& bt = tape_.blocks[i];
    const Tensor4<Scalar> dz = relu_backward(bt.z, g);

    auto g3 = batchnorm_backward(bt.a3, block.bn3, dz);
    accumulate(block.bn3.gamma, g3.gamma);
    accumulate(block.bn3.beta, g3.beta);
    auto c3 = conv2d_backward(bt.r2, block.conv3, g3.input);
    accumulate(block.conv3.weight, c3.weight);
    accumulate(block.conv3.bias, c3.bias);

    auto g2 = batchnorm_backward(bt.a2, block.bn2, relu_backward(bt.b2, c3.input));
    accumulate(block.bn2.gamma, g2.gamma);
    accumulate(block.bn2.beta, g2.beta);
    auto c2 = conv2d_backward(bt.r1, block.conv2, g2.input);
    accumulate(block.conv2.weight, c2.weight);
    accumulate(block.conv2.bias, c2.bias);

    auto g1 = batchnorm_backward(bt.a1, block.bn1, relu_backward(bt.b1, c2.input));
    accumulate(block.bn1.gamma, g1.gamma);
    accumulate(block.bn1.beta, g1.beta);
    auto c1 = conv2d_backward(bt.x, block.conv1, g1.input);
    accumulate(block.conv1.weight, c1.weight);
    accumulate(block.conv1.bias, c1.bias);

    const Tensor4<Scalar> skip =
        block.stride() == 1 ? dz : subsample_backward(dz, bt.x.shape(), block.stride());
    g = add(c1.input, skip);
  }

  auto gbn = batchnorm_backward(tape_.stem_pre, stem_bn_, g);
  accumulate(stem_bn_.gamma, gbn.gamma);
  accumulate(stem_bn_.beta, gbn.beta);
  auto gstem = conv2d_backward(tape_.image, stem_conv_, gbn.input);
  accumulate(stem_conv_.weight, gstem.weight);
  accumulate(stem_conv_.bias, gstem.bias);
}

template <typename Scalar>
void Model<Scalar>::zero_grad() {
  for (auto& p : parameters()) p.tensor->zero_grad();
}

template <typename Scalar>
std::vector<typename Model<Scalar>::NamedTensor> Model<Scalar>::parameters() {
  std::vector<NamedTensor> out;
  add_conv<Scalar>(out, "stem.conv", stem_conv_);
  add_bn<Scalar>(out, "stem.bn", stem_bn_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    auto& b = blocks_[i];
    add_conv<Scalar>(out, p + ".conv1", b.conv1);
    add_bn<Scalar>(out, p + ".bn1", b.bn1);
    add_conv<Scalar>(out, p + ".conv2", b.conv2);
    add_bn<Scalar>(out, p + ".bn2", b.bn2);
    add_conv<Scalar>(out, p + ".conv3", b.conv3);
    add_bn<Scalar>(out, p + ".bn3", b.bn3);
  }
  add_conv<Scalar>(out, "head.semantic", semantic_head_);
  add_conv<Scalar>(out, "head.density", density_head_);
  return out;
}

template <typename Scalar>
std::vector<typename Model<Scalar>::ConstNamedTensor> Model<Scalar>::parameters() const {
  return as_const<Scalar>(const_cast<Model*>(this)->parameters());
}

template <typename Scalar>
std::vector<typename Model<Scalar>::NamedTensor> Model<Scalar>::buffers() {
  std::vector<NamedTensor> out;
  add_bn_buffers<Scalar>(out, "stem.bn", stem_bn_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i);
    add_bn_buffers<Scalar>(out, p + ".bn1", blocks_[i].bn1);
    add_bn_buffers<Scalar>(out, p + ".bn2", blocks_[i].bn2);
    add_bn_buffers<Scalar>(out, p + ".bn3", blocks_[i].bn3);
  }
  return out;
}

template <typename Scalar>
std::vector<typename Model<Scalar>::ConstNamedTensor> Model<Scalar>::buffers() const {
  return as_const<Scalar>(const_cast<Model*>(this)->buffers());
}

template <typename Scalar>
Index Model<Scalar>::parameter_count() const {
  Index total = 0;
  for (const auto& p : parameters()) total += p.tensor->size();
  return total;
}

template JointLoss<float> joint_loss(const Tensor4<float>&, const Tensor4<float>&,
                                     const Tensor4<float>&, const Tensor4<float>&);
template JointLoss<double> joint_loss(const Tensor4<double>&, const Tensor4<double>&,
                                      const Tensor4<double>&, const Tensor4<double>&);
template class Model<float>;
template class Model<double>;

}  // namespace spd
