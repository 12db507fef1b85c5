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

#ifndef SPD_MODEL_HPP
#define SPD_MODEL_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spd/ops.hpp"

namespace spd {

enum class ArchKind { ours, ours_atrous, strided_baseline };

std::string to_string(ArchKind kind);
/// Throws ValidationError for unknown names.
ArchKind parse_arch_kind(std::string_view name);

/// Declarative description of a density network. The widths default to the
/// published layout (stem 256, bottleneck 64, six blocks); smaller values
/// give the same topology at a fraction of the cost.
struct ModelSpec {
  ArchKind kind = ArchKind::ours;
  Index input_channels = 13;
  Index stem_width = 256;
  Index bottleneck_width = 64;
  int block_count = 6;

  bool operator==(const ModelSpec&) const = default;
};

/// Bottleneck residual block: 1x1 -> 3x3 -> 1x1 convolutions, each followed
/// by batch norm, with an additive shortcut and a closing ReLU.
template <typename Scalar>
struct ResNetBlock {
  ConvSpec<Scalar> conv1, conv2, conv3;
  BatchNormState<Scalar> bn1, bn2, bn3;

  int stride() const { return conv2.stride; }
};

template <typename Scalar>
struct ModelOutput {
  Tensor4<Scalar> semantic;  // (n, 2, h, w) logits
  Tensor4<Scalar> density;   // (n, 1, h, w), unconstrained
};

struct LossBreakdown {
  double semantic = 0.0;
  double density = 0.0;
  double total = 0.0;
};

template <typename Scalar>
struct JointLoss {
  LossBreakdown breakdown;
  Tensor4<Scalar> grad_semantic;
  Tensor4<Scalar> grad_density;
};

/// Cross-entropy on the semantic logits plus mean squared error on the
/// density head, unweighted.
template <typename Scalar>
JointLoss<Scalar> joint_loss(const Tensor4<Scalar>& semantic_logits, const Tensor4<Scalar>& density,
                             const Tensor4<Scalar>& labels, const Tensor4<Scalar>& density_target);

template <typename Scalar>
class Model {
 public:
  struct NamedTensor {
    std::string name;
    Tensor4<Scalar>* tensor;
  };
  struct ConstNamedTensor {
    std::string name;
    const Tensor4<Scalar>* tensor;
  };

  /// Allocates the layer graph with He-normal kernels drawn from `seed`.
  Model(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }

  void set_mode(BnMode mode);
  BnMode mode() const { return mode_; }

  /// Runs the network in the current mode and records the activations needed
  /// by backward(). Train mode updates batch-norm running statistics.
  ModelOutput<Scalar> forward(const Tensor4<Scalar>& image);

  /// Eval-mode forward that touches no model state; safe to call from
  /// several threads at once.
  ModelOutput<Scalar> infer(const Tensor4<Scalar>& image) const;

  /// Accumulates parameter gradients for the most recent forward().
  void backward(const Tensor4<Scalar>& grad_semantic, const Tensor4<Scalar>& grad_density);

  void zero_grad();

  /// Trainable tensors (kernels, biases, BN gamma/beta) in a stable order.
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;
  /// Batch-norm running statistics.
  std::vector<NamedTensor> buffers();
  std::vector<ConstNamedTensor> buffers() const;

  Index parameter_count() const;

  /// Spatial size of the feature map entering the decoder (equals the input
  /// size for stride-1 kinds).
  std::pair<Index, Index> feature_extent(Index h, Index w) const;

  ConvSpec<Scalar>& stem_conv() { return stem_conv_; }
  BatchNormState<Scalar>& stem_bn() { return stem_bn_; }
  std::vector<ResNetBlock<Scalar>>& blocks() { return blocks_; }
  const std::vector<ResNetBlock<Scalar>>& blocks() const { return blocks_; }
  ConvSpec<Scalar>& semantic_head() { return semantic_head_; }
  ConvSpec<Scalar>& density_head() { return density_head_; }

 private:
  struct BlockTape {
    Tensor4<Scalar> x, a1, b1, r1, a2, b2, r2, a3, z;
  };
  struct Tape {
    Tensor4<Scalar> image, stem_pre, features;
    std::vector<BlockTape> blocks;
    Tensor4<Scalar> decoded;
    bool valid = false;
  };

  ModelSpec spec_;
  BnMode mode_ = BnMode::train;
  ConvSpec<Scalar> stem_conv_;
  BatchNormState<Scalar> stem_bn_;
  std::vector<ResNetBlock<Scalar>> blocks_;
  ConvSpec<Scalar> semantic_head_;
  ConvSpec<Scalar> density_head_;
  Tape tape_;

  void check_input(const Tensor4<Scalar>& image) const;
};

}  // namespace spd

#endif  // SPD_MODEL_HPP
