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

#include "spd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spd {
namespace {

template <typename Scalar>
using ColMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  Index in_c, in_h, in_w;
  Index out_c, out_h, out_w;
  Index kh, kw;
  int stride, dilation, padding;

  Index patch_len() const { return in_c * kh * kw; }
  Index out_plane() const { return out_h * out_w; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && padding == 0; }
};

template <typename Scalar>
ConvGeometry conv_geometry(const Shape4& in, const ConvSpec<Scalar>& spec) {
  if (spec.stride < 1 || spec.dilation < 1 || spec.padding < 0) {
    throw ValidationError("conv2d: stride and dilation must be >= 1 and padding >= 0");
  }
  if (spec.bias.size() != spec.out_channels()) {
    throw ValidationError("conv2d: bias has " + std::to_string(spec.bias.size()) +
                          " entries for " + std::to_string(spec.out_channels()) + " filters");
  }
  if (spec.in_channels() != in.c) {
    throw ValidationError("conv2d: kernel expects " + std::to_string(spec.in_channels()) +
                          " input channels, input " + in.str() + " has " + std::to_string(in.c));
  }
  ConvGeometry g{in.c,
                 in.h,
                 in.w,
                 spec.out_channels(),
                 spec.out_extent(in.h, spec.kernel_h()),
                 spec.out_extent(in.w, spec.kernel_w()),
                 spec.kernel_h(),
                 spec.kernel_w(),
                 spec.stride,
                 spec.dilation,
                 spec.padding};
  if (g.out_h < 1 || g.out_w < 1) {
    throw ValidationError("conv2d: input " + in.str() + " yields an empty output for a " +
                          std::to_string(g.kh) + "x" + std::to_string(g.kw) + " kernel");
  }
  return g;
}

// Column j = (ci*kh + ki)*kw + kj holds the input tap for every output pixel,
// matching the (out, in, kh, kw) row-major kernel layout.
template <typename Scalar>
void im2col(const Scalar* image, const ConvGeometry& g, ColMatrix<Scalar>& cols) {
  cols.resize(g.out_plane(), g.patch_len());
  for (Index ci = 0; ci < g.in_c; ++ci) {
    const Scalar* src = image + ci * g.in_h * g.in_w;
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        Scalar* dst = cols.col((ci * g.kh + ki) * g.kw + kj).data();
        for (Index oy = 0; oy < g.out_h; ++oy) {
          const Index iy = oy * g.stride - g.padding + ki * g.dilation;
          Scalar* row = dst + oy * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(row, row + g.out_w, Scalar(0));
            continue;
          }
          const Scalar* line = src + iy * g.in_w;
          for (Index ox = 0; ox < g.out_w; ++ox) {
            const Index ix = ox * g.stride - g.padding + kj * g.dilation;
            row[ox] = (ix >= 0 && ix < g.in_w) ? line[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_accumulate(const ColMatrix<Scalar>& cols, const ConvGeometry& g, Scalar* image) {
  for (Index ci = 0; ci < g.in_c; ++ci) {
    Scalar* dst = image + ci * g.in_h * g.in_w;
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        const Scalar* src = cols.col((ci * g.kh + ki) * g.kw + kj).data();
        for (Index oy = 0; oy < g.out_h; ++oy) {
          const Index iy = oy * g.stride - g.padding + ki * g.dilation;
          if (iy < 0 || iy >= g.in_h) continue;
          Scalar* line = dst + iy * g.in_w;
          const Scalar* row = src + oy * g.out_w;
          for (Index ox = 0; ox < g.out_w; ++ox) {
            const Index ix = ox * g.stride - g.padding + kj * g.dilation;
            if (ix >= 0 && ix < g.in_w) line[ix] += row[ox];
          }
        }
      }
    }
  }
}

// Per-output-coordinate source taps for half-pixel bilinear sampling.
struct AxisTaps {
  std::vector<Index> lo, hi;
  std::vector<double> frac;
};

AxisTaps axis_taps(Index in, Index out) {
  AxisTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<Index>(std::floor(src));
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - static_cast<double>(lo);
  }
  return t;
}

template <typename Scalar>
void require_channels(const Tensor4<Scalar>& t, Index c, const char* what) {
  if (t.c() != c) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(c) +
                          " channels, got tensor " + t.shape().str());
  }
}

}  // namespace

template <typename Scalar>
Tensor4<Scalar> conv2d(const Tensor4<Scalar>& input, const ConvSpec<Scalar>& spec) {
  const ConvGeometry g = conv_geometry(input.shape(), spec);
  Tensor4<Scalar> out(input.n(), g.out_c, g.out_h, g.out_w);
  const Eigen::Map<const RowMatrix<Scalar>> weight(spec.weight.data().data(), g.out_c, g.patch_len());
  const Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> bias(spec.bias.data().data(),
                                                                       g.out_c);
  ColMatrix<Scalar> cols;
  for (Index n = 0; n < input.n(); ++n) {
    Eigen::Map<ColMatrix<Scalar>> y(out.plane_ptr(n, 0), g.out_plane(), g.out_c);
    if (g.pointwise()) {
      const Eigen::Map<const ColMatrix<Scalar>> x(input.plane_ptr(n, 0), g.out_plane(), g.in_c);
      y.noalias() = x * weight.transpose();
    } else {
      im2col(input.plane_ptr(n, 0), g, cols);
      y.noalias() = cols * weight.transpose();
    }
    y.rowwise() += bias;
  }
  return out;
}

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor4<Scalar>& input, const ConvSpec<Scalar>& spec,
                                  const Tensor4<Scalar>& upstream) {
  const ConvGeometry g = conv_geometry(input.shape(), spec);
  require_same_shape(upstream.shape(), Shape4{input.n(), g.out_c, g.out_h, g.out_w},
                     "conv2d_backward upstream");
  ConvGrads<Scalar> grads{Tensor4<Scalar>(input.shape()), Tensor4<Scalar>(spec.weight.shape()),
                          Tensor4<Scalar>(spec.bias.shape())};
  const Eigen::Map<const RowMatrix<Scalar>> weight(spec.weight.data().data(), g.out_c, g.patch_len());
  Eigen::Map<RowMatrix<Scalar>> dweight(grads.weight.data().data(), g.out_c, g.patch_len());
  Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> dbias(grads.bias.data().data(), g.out_c);

  ColMatrix<Scalar> cols;
  for (Index n = 0; n < input.n(); ++n) {
    const Eigen::Map<const ColMatrix<Scalar>> dy(upstream.plane_ptr(n, 0), g.out_plane(), g.out_c);
    dbias += dy.colwise().sum();
    if (g.pointwise()) {
      const Eigen::Map<const ColMatrix<Scalar>> x(input.plane_ptr(n, 0), g.out_plane(), g.in_c);
      dweight.noalias() += dy.transpose() * x;
      Eigen::Map<ColMatrix<Scalar>> dx(grads.input.plane_ptr(n, 0), g.out_plane(), g.in_c);
      dx.noalias() = dy * weight;
    } else {
      im2col(input.plane_ptr(n, 0), g, cols);
      dweight.noalias() += dy.transpose() * cols;
      cols.noalias() = dy * weight;
      col2im_accumulate(cols, g, grads.input.plane_ptr(n, 0));
    }
  }
  return grads;
}

template <typename Scalar>
Tensor4<Scalar> batchnorm(const Tensor4<Scalar>& input, BatchNormState<Scalar>& state) {
  const Index C = state.channels();
  require_channels(input, C, "batchnorm");
  const Index per_channel = input.n() * input.h() * input.w();
  Tensor4<Scalar> out(input.shape());

  if (state.mode == BnMode::eval) return batchnorm_inference(input, state);

  if (per_channel < 2) {
    throw ValidationError("batchnorm: train mode needs at least 2 values per channel, input is " +
                          input.shape().str());
  }
  const Scalar m = Scalar(state.momentum);
  const Scalar count = Scalar(per_channel);
  for (Index c = 0; c < C; ++c) {
    Scalar sum = 0;
    for (Index n = 0; n < input.n(); ++n) sum += input.plane(n, c).sum();
    const Scalar mean = sum / count;
    Scalar sq = 0;
    for (Index n = 0; n < input.n(); ++n) sq += (input.plane(n, c) - mean).square().sum();
    const Scalar var = sq / count;
    const Scalar inv = Scalar(1) / std::sqrt(var + Scalar(state.epsilon));
    const Scalar gamma = state.gamma.data()[c];
    const Scalar beta = state.beta.data()[c];
    for (Index n = 0; n < input.n(); ++n) {
      out.plane(n, c) = (input.plane(n, c) - mean) * (inv * gamma) + beta;
    }
    state.running_mean.data()[c] = (Scalar(1) - m) * state.running_mean.data()[c] + m * mean;
    state.running_var.data()[c] =
        (Scalar(1) - m) * state.running_var.data()[c] + m * (sq / (count - Scalar(1)));
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> batchnorm_inference(const Tensor4<Scalar>& input, const BatchNormState<Scalar>& state) {
  const Index C = state.channels();
  require_channels(input, C, "batchnorm");
  Tensor4<Scalar> out(input.shape());
  for (Index c = 0; c < C; ++c) {
    const Scalar inv = Scalar(1) / std::sqrt(state.running_var.data()[c] + Scalar(state.epsilon));
    const Scalar scale = state.gamma.data()[c] * inv;
    const Scalar shift = state.beta.data()[c] - state.running_mean.data()[c] * scale;
    for (Index n = 0; n < input.n(); ++n) {
      out.plane(n, c) = input.plane(n, c) * scale + shift;
    }
  }
  return out;
}

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_backward(const Tensor4<Scalar>& input,
                                          const BatchNormState<Scalar>& state,
                                          const Tensor4<Scalar>& upstream) {
  const Index C = state.channels();
  require_channels(input, C, "batchnorm_backward");
  require_same_shape(upstream.shape(), input.shape(), "batchnorm_backward upstream");
  const Index per_channel = input.n() * input.h() * input.w();
  BatchNormGrads<Scalar> grads{Tensor4<Scalar>(input.shape()), Tensor4<Scalar>(1, C, 1, 1),
                               Tensor4<Scalar>(1, C, 1, 1)};

  if (state.mode == BnMode::eval) {
    for (Index c = 0; c < C; ++c) {
      const Scalar inv = Scalar(1) / std::sqrt(state.running_var.data()[c] + Scalar(state.epsilon));
      const Scalar mean = state.running_mean.data()[c];
      Scalar dgamma = 0, dbeta = 0;
      for (Index n = 0; n < input.n(); ++n) {
        const auto dy = upstream.plane(n, c);
        dbeta += dy.sum();
        dgamma += (dy * ((input.plane(n, c) - mean) * inv)).sum();
        grads.input.plane(n, c) = dy * (state.gamma.data()[c] * inv);
      }
      grads.gamma.data()[c] = dgamma;
      grads.beta.data()[c] = dbeta;
    }
    return grads;
  }

  if (per_channel < 2) {
    throw ValidationError("batchnorm_backward: train mode needs at least 2 values per channel");
  }
  const Scalar count = Scalar(per_channel);
  for (Index c = 0; c < C; ++c) {
    Scalar sum = 0;
    for (Index n = 0; n < input.n(); ++n) sum += input.plane(n, c).sum();
    const Scalar mean = sum / count;
    Scalar sq = 0;
    for (Index n = 0; n < input.n(); ++n) sq += (input.plane(n, c) - mean).square().sum();
    const Scalar inv = Scalar(1) / std::sqrt(sq / count + Scalar(state.epsilon));

    Scalar dbeta = 0, dgamma = 0;
    for (Index n = 0; n < input.n(); ++n) {
      const auto dy = upstream.plane(n, c);
      dbeta += dy.sum();
      dgamma += (dy * ((input.plane(n, c) - mean) * inv)).sum();
    }
    grads.gamma.data()[c] = dgamma;
    grads.beta.data()[c] = dbeta;

    // dx = gamma*inv/N * (N*dy - sum(dy) - xhat*sum(dy*xhat))
    const Scalar k = state.gamma.data()[c] * inv / count;
    for (Index n = 0; n < input.n(); ++n) {
      const auto xhat = (input.plane(n, c) - mean) * inv;
      grads.input.plane(n, c) = k * (count * upstream.plane(n, c) - dbeta - xhat * dgamma);
    }
  }
  return grads;
}

template <typename Scalar>
Tensor4<Scalar> relu(const Tensor4<Scalar>& input) {
  return Tensor4<Scalar>(input.shape(), input.data().max(Scalar(0)));
}

template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& input, const Tensor4<Scalar>& upstream) {
  require_same_shape(upstream.shape(), input.shape(), "relu_backward");
  return Tensor4<Scalar>(input.shape(),
                         (input.data() > Scalar(0)).select(upstream.data(), Scalar(0)));
}

template <typename Scalar>
Tensor4<Scalar> add(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  return Tensor4<Scalar>(a.shape(), a.data() + b.data());
}

template <typename Scalar>
Tensor4<Scalar> bilinear_resize(const Tensor4<Scalar>& input, Index new_h, Index new_w) {
  if (new_h < 1 || new_w < 1) {
    throw ValidationError("bilinear_resize: target size must be at least 1x1");
  }
  if (input.h() < 1 || input.w() < 1) {
    throw ValidationError("bilinear_resize: empty input " + input.shape().str());
  }
  const AxisTaps ty = axis_taps(input.h(), new_h);
  const AxisTaps tx = axis_taps(input.w(), new_w);
  Tensor4<Scalar> out(input.n(), input.c(), new_h, new_w);
  for (Index n = 0; n < input.n(); ++n) {
    for (Index c = 0; c < input.c(); ++c) {
      const auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (Index y = 0; y < new_h; ++y) {
        const double fy = ty.frac[y];
        for (Index x = 0; x < new_w; ++x) {
          const double fx = tx.frac[x];
          const double top = (1 - fx) * src(ty.lo[y], tx.lo[x]) + fx * src(ty.lo[y], tx.hi[x]);
          const double bot = (1 - fx) * src(ty.hi[y], tx.lo[x]) + fx * src(ty.hi[y], tx.hi[x]);
          dst(y, x) = static_cast<Scalar>((1 - fy) * top + fy * bot);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> bilinear_resize_backward(const Tensor4<Scalar>& upstream, Index in_h, Index in_w) {
  const AxisTaps ty = axis_taps(in_h, upstream.h());
  const AxisTaps tx = axis_taps(in_w, upstream.w());
  Tensor4<Scalar> grad(upstream.n(), upstream.c(), in_h, in_w);
  for (Index n = 0; n < upstream.n(); ++n) {
    for (Index c = 0; c < upstream.c(); ++c) {
      const auto g = upstream.plane(n, c);
      auto dst = grad.plane(n, c);
      for (Index y = 0; y < upstream.h(); ++y) {
        const double fy = ty.frac[y];
        for (Index x = 0; x < upstream.w(); ++x) {
          const double fx = tx.frac[x];
          const double v = g(y, x);
          dst(ty.lo[y], tx.lo[x]) += static_cast<Scalar>((1 - fy) * (1 - fx) * v);
          dst(ty.lo[y], tx.hi[x]) += static_cast<Scalar>((1 - fy) * fx * v);
          dst(ty.hi[y], tx.lo[x]) += static_cast<Scalar>(fy * (1 - fx) * v);
          dst(ty.hi[y], tx.hi[x]) += static_cast<Scalar>(fy * fx * v);
        }
      }
    }
  }
  return grad;
}

template <typename Scalar>
Tensor4<Scalar> mean_pool(const Tensor4<Scalar>& input, Index k) {
  if (k < 1) throw ValidationError("mean_pool: window must be positive");
  if (input.h() % k != 0 || input.w() % k != 0) {
    throw ValidationError("mean_pool: " + input.shape().str() + " is not divisible by window " +
                          std::to_string(k));
  }
  Tensor4<Scalar> out(input.n(), input.c(), input.h() / k, input.w() / k);
  const Scalar inv_area = Scalar(1) / Scalar(k * k);
  for (Index n = 0; n < input.n(); ++n) {
    for (Index c = 0; c < input.c(); ++c) {
      const auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (Index y = 0; y < out.h(); ++y) {
        for (Index x = 0; x < out.w(); ++x) {
          dst(y, x) = src.block(y * k, x * k, k, k).sum() * inv_area;
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> subsample(const Tensor4<Scalar>& input, int stride) {
  if (stride < 1) throw ValidationError("subsample: stride must be positive");
  const Index oh = (input.h() + stride - 1) / stride;
  const Index ow = (input.w() + stride - 1) / stride;
  Tensor4<Scalar> out(input.n(), input.c(), oh, ow);
  for (Index n = 0; n < input.n(); ++n) {
    for (Index c = 0; c < input.c(); ++c) {
      for (Index y = 0; y < oh; ++y) {
        for (Index x = 0; x < ow; ++x) out(n, c, y, x) = input(n, c, y * stride, x * stride);
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> subsample_backward(const Tensor4<Scalar>& upstream, const Shape4& input_shape,
                                   int stride) {
  Tensor4<Scalar> grad(input_shape);
  require_same_shape(upstream.shape(),
                     Shape4{input_shape.n, input_shape.c, (input_shape.h + stride - 1) / stride,
                            (input_shape.w + stride - 1) / stride},
                     "subsample_backward");
  for (Index n = 0; n < upstream.n(); ++n) {
    for (Index c = 0; c < upstream.c(); ++c) {
      for (Index y = 0; y < upstream.h(); ++y) {
        for (Index x = 0; x < upstream.w(); ++x) grad(n, c, y * stride, x * stride) = upstream(n, c, y, x);
      }
    }
  }
  return grad;
}

template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const Tensor4<Scalar>& logits,
                                         const Tensor4<Scalar>& labels) {
  require_channels(logits, 2, "softmax_cross_entropy logits");
  require_channels(labels, 1, "softmax_cross_entropy labels");
  if (labels.n() != logits.n() || labels.h() != logits.h() || labels.w() != logits.w()) {
    throw ValidationError("softmax_cross_entropy: label map " + labels.shape().str() +
                          " does not match logits " + logits.shape().str());
  }
  const Index pixels = logits.n() * logits.h() * logits.w();
  if (pixels == 0) throw ValidationError("softmax_cross_entropy: empty input");
  LossResult<Scalar> result{0.0, Tensor4<Scalar>(logits.shape())};
  const double inv_pixels = 1.0 / static_cast<double>(pixels);
  double total = 0.0;
  for (Index n = 0; n < logits.n(); ++n) {
    const Scalar* l0 = logits.plane_ptr(n, 0);
    const Scalar* l1 = logits.plane_ptr(n, 1);
    const Scalar* lab = labels.plane_ptr(n, 0);
    Scalar* g0 = result.grad.plane_ptr(n, 0);
    Scalar* g1 = result.grad.plane_ptr(n, 1);
    for (Index i = 0; i < logits.shape().plane(); ++i) {
      const Scalar label = lab[i];
      if (label != Scalar(0) && label != Scalar(1)) {
        throw ValidationError("softmax_cross_entropy: label " + std::to_string(double(label)) +
                              " is not a class index in {0, 1}");
      }
      const double a = l0[i], b = l1[i];
      const double hi = std::max(a, b);
      const double lse = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
      const double p1 = std::exp(b - lse);
      const double p0 = std::exp(a - lse);
      const bool positive = label == Scalar(1);
      total += lse - (positive ? b : a);
      g0[i] = static_cast<Scalar>((p0 - (positive ? 0.0 : 1.0)) * inv_pixels);
      g1[i] = static_cast<Scalar>((p1 - (positive ? 1.0 : 0.0)) * inv_pixels);
    }
  }
  result.value = total * inv_pixels;
  return result;
}

template <typename Scalar>
LossResult<Scalar> mse_loss(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target) {
  require_same_shape(pred.shape(), target.shape(), "mse_loss");
  if (pred.size() == 0) throw ValidationError("mse_loss: empty input");
  const auto diff = (pred.data() - target.data()).template cast<double>().eval();
  const double inv = 1.0 / static_cast<double>(pred.size());
  LossResult<Scalar> result{diff.square().sum() * inv, Tensor4<Scalar>(pred.shape())};
  result.grad.data() = (diff * (2.0 * inv)).template cast<Scalar>();
  return result;
}

#define SPD_INSTANTIATE_OPS(S)                                                                    \
  template Tensor4<S> conv2d(const Tensor4<S>&, const ConvSpec<S>&);                              \
  template ConvGrads<S> conv2d_backward(const Tensor4<S>&, const ConvSpec<S>&, const Tensor4<S>&); \
  template Tensor4<S> batchnorm(const Tensor4<S>&, BatchNormState<S>&);                           \
  template Tensor4<S> batchnorm_inference(const Tensor4<S>&, const BatchNormState<S>&);           \
  template BatchNormGrads<S> batchnorm_backward(const Tensor4<S>&, const BatchNormState<S>&,      \
                                                const Tensor4<S>&);                               \
  template Tensor4<S> relu(const Tensor4<S>&);                                                    \
  template Tensor4<S> relu_backward(const Tensor4<S>&, const Tensor4<S>&);                        \
  template Tensor4<S> add(const Tensor4<S>&, const Tensor4<S>&);                                  \
  template Tensor4<S> bilinear_resize(const Tensor4<S>&, Index, Index);                           \
  template Tensor4<S> bilinear_resize_backward(const Tensor4<S>&, Index, Index);                  \
  template Tensor4<S> mean_pool(const Tensor4<S>&, Index);                                        \
  template Tensor4<S> subsample(const Tensor4<S>&, int);                                          \
  template Tensor4<S> subsample_backward(const Tensor4<S>&, const Shape4&, int);                  \
  template LossResult<S> softmax_cross_entropy(const Tensor4<S>&, const Tensor4<S>&);             \
  template LossResult<S> mse_loss(const Tensor4<S>&, const Tensor4<S>&);

SPD_INSTANTIATE_OPS(float)
SPD_INSTANTIATE_OPS(double)

#undef SPD_INSTANTIATE_OPS

}  // namespace spd
