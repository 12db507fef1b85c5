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

// Forward and reverse-mode kernels for the layers used by the density
// networks. Every function is pure except batchnorm() in train mode, which
// updates the running statistics of the state it is handed.

#ifndef SPD_OPS_HPP
#define SPD_OPS_HPP

#include "spd/tensor.hpp"

namespace spd {

/// Convolution parameters. weight is (out_ch, in_ch, kh, kw), bias is
/// (1, out_ch, 1, 1). The operation is a cross-correlation.
template <typename Scalar>
struct ConvSpec {
  Tensor4<Scalar> weight;
  Tensor4<Scalar> bias;
  int stride = 1;
  int dilation = 1;
  int padding = 0;

  Index out_channels() const { return weight.n(); }
  Index in_channels() const { return weight.c(); }
  Index kernel_h() const { return weight.h(); }
  Index kernel_w() const { return weight.w(); }

  /// floor((size + 2*pad - dilation*(k-1) - 1) / stride) + 1, may be <= 0.
  Index out_extent(Index size, Index k) const {
    const Index span = size + 2 * padding - dilation * (k - 1) - 1;
    return span < 0 ? 0 : span / stride + 1;
  }
};

/// Builds a zero-initialised spec with "same" padding for odd kernels.
template <typename Scalar>
ConvSpec<Scalar> make_conv(Index out_ch, Index in_ch, Index k, int stride = 1, int dilation = 1) {
  ConvSpec<Scalar> spec;
  spec.weight = Tensor4<Scalar>(out_ch, in_ch, k, k);
  spec.bias = Tensor4<Scalar>(1, out_ch, 1, 1);
  spec.stride = stride;
  spec.dilation = dilation;
  spec.padding = static_cast<int>(dilation * (k - 1) / 2);
  return spec;
}

template <typename Scalar>
struct ConvGrads {
  Tensor4<Scalar> input;
  Tensor4<Scalar> weight;
  Tensor4<Scalar> bias;
};

template <typename Scalar>
Tensor4<Scalar> conv2d(const Tensor4<Scalar>& input, const ConvSpec<Scalar>& spec);

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor4<Scalar>& input, const ConvSpec<Scalar>& spec,
                                  const Tensor4<Scalar>& upstream);

enum class BnMode { train, eval };

template <typename Scalar>
struct BatchNormState {
  Tensor4<Scalar> gamma;  // (1, C, 1, 1)
  Tensor4<Scalar> beta;
  Tensor4<Scalar> running_mean;
  Tensor4<Scalar> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  BnMode mode = BnMode::train;

  static BatchNormState identity(Index channels) {
    BatchNormState s;
    s.gamma = Tensor4<Scalar>::constant({1, channels, 1, 1}, Scalar(1));
    s.beta = Tensor4<Scalar>(1, channels, 1, 1);
    s.running_mean = Tensor4<Scalar>(1, channels, 1, 1);
    s.running_var = Tensor4<Scalar>::constant({1, channels, 1, 1}, Scalar(1));
    return s;
  }
  Index channels() const { return gamma.c(); }
};

template <typename Scalar>
struct BatchNormGrads {
  Tensor4<Scalar> input;
  Tensor4<Scalar> gamma;
  Tensor4<Scalar> beta;
};

/// Normalises with batch statistics in train mode (updating the running
/// statistics) and with the running statistics in eval mode.
template <typename Scalar>
Tensor4<Scalar> batchnorm(const Tensor4<Scalar>& input, BatchNormState<Scalar>& state);

/// Eval-mode normalisation regardless of state.mode; never mutates.
template <typename Scalar>
Tensor4<Scalar> batchnorm_inference(const Tensor4<Scalar>& input, const BatchNormState<Scalar>& state);

/// Gradients of batchnorm() evaluated at `input`. In train mode the batch
/// statistics are recomputed from `input`; the running statistics are not
/// touched.
template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_backward(const Tensor4<Scalar>& input,
                                          const BatchNormState<Scalar>& state,
                                          const Tensor4<Scalar>& upstream);

template <typename Scalar>
Tensor4<Scalar> relu(const Tensor4<Scalar>& input);

template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& input, const Tensor4<Scalar>& upstream);

template <typename Scalar>
Tensor4<Scalar> add(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b);

/// Half-pixel-centre bilinear resampling with edge clamping.
template <typename Scalar>
Tensor4<Scalar> bilinear_resize(const Tensor4<Scalar>& input, Index new_h, Index new_w);

template <typename Scalar>
Tensor4<Scalar> bilinear_resize_backward(const Tensor4<Scalar>& upstream, Index in_h, Index in_w);

template <typename Scalar>
Tensor4<Scalar> mean_pool(const Tensor4<Scalar>& input, Index k);

/// Keeps every `stride`-th row and column starting at 0. Used as the
/// parameter-free shortcut of strided residual blocks.
template <typename Scalar>
Tensor4<Scalar> subsample(const Tensor4<Scalar>& input, int stride);

template <typename Scalar>
Tensor4<Scalar> subsample_backward(const Tensor4<Scalar>& upstream, const Shape4& input_shape,
                                   int stride);

template <typename Scalar>
struct LossResult {
  double value = 0.0;
  Tensor4<Scalar> grad;
};

/// Two-class softmax cross-entropy averaged over all pixels of the batch.
/// `labels` has one channel holding 0 or 1.
template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const Tensor4<Scalar>& logits,
                                         const Tensor4<Scalar>& labels);

template <typename Scalar>
LossResult<Scalar> mse_loss(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target);

}  // namespace spd

#endif  // SPD_OPS_HPP
