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

#ifndef SPD_TENSOR_HPP
#define SPD_TENSOR_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spd {

using Index = Eigen::Index;

/// Raised for any contract violation on shapes, ranges or file contents.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape4 {
  Index n = 0, c = 0, h = 0, w = 0;

  Index size() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
  }
};

/// Dense (batch, channel, row, col) array stored row-major, with an optional
/// gradient buffer of identical shape.
template <typename Scalar>
class Tensor4 {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  /// One channel plane viewed as a row-major matrix.
  using PlaneMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstPlaneMap =
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Tensor4() = default;
  explicit Tensor4(Shape4 s) : shape_(s), data_(Storage::Zero(checked_size(s))) {}
  Tensor4(Index n, Index c, Index h, Index w) : Tensor4(Shape4{n, c, h, w}) {}
  Tensor4(Shape4 s, Storage data) : shape_(s), data_(std::move(data)) {
    if (data_.size() != checked_size(s)) {
      throw ValidationError("Tensor4: data length " + std::to_string(data_.size()) +
                            " does not match shape " + s.str());
    }
  }

  static Tensor4 constant(Shape4 s, Scalar v) { return Tensor4(s, Storage::Constant(s.size(), v)); }

  const Shape4& shape() const { return shape_; }
  Index n() const { return shape_.n; }
  Index c() const { return shape_.c; }
  Index h() const { return shape_.h; }
  Index w() const { return shape_.w; }
  Index size() const { return data_.size(); }

  Storage& data() { return data_; }
  const Storage& data() const { return data_; }

  Scalar& operator()(Index n, Index c, Index y, Index x) { return data_[offset(n, c, y, x)]; }
  Scalar operator()(Index n, Index c, Index y, Index x) const { return data_[offset(n, c, y, x)]; }

  Index offset(Index n, Index c, Index y, Index x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Scalar* plane_ptr(Index n, Index c) { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
  const Scalar* plane_ptr(Index n, Index c) const {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }
  PlaneMap plane(Index n, Index c) { return PlaneMap(plane_ptr(n, c), shape_.h, shape_.w); }
  ConstPlaneMap plane(Index n, Index c) const {
    return ConstPlaneMap(plane_ptr(n, c), shape_.h, shape_.w);
  }

  bool has_grad() const { return grad_.has_value(); }
  Storage& grad() {
    if (!grad_) grad_ = Storage::Zero(data_.size());
    return *grad_;
  }
  const Storage& grad() const {
    if (!grad_) throw std::logic_error("Tensor4: gradient requested but never allocated");
    return *grad_;
  }
  void zero_grad() { grad().setZero(); }
  void drop_grad() { grad_.reset(); }

  template <typename Other>
  Tensor4<Other> cast() const {
    return Tensor4<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.isFinite().all(); }

 private:
  static Index checked_size(const Shape4& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw ValidationError("Tensor4: negative dimension in " + s.str());
    }
    return s.size();
  }

  Shape4 shape_;
  Storage data_;
  std::optional<Storage> grad_;
};

inline void require_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) {
    throw ValidationError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

}  // namespace spd

#endif  // SPD_TENSOR_HPP
