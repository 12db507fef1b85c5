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

#include "spd/tensor.hpp"

namespace spd {
namespace {

TEST(Tensor4, DataLengthMatchesShape) {
  Tensor4<float> t(2, 3, 4, 5);
  EXPECT_EQ(t.size(), 2 * 3 * 4 * 5);
  EXPECT_TRUE((t.data() == 0.0f).all());
}

TEST(Tensor4, RowMajorOffsets) {
  Tensor4<double> t(2, 3, 4, 5);
  Index expected = 0;
  for (Index n = 0; n < 2; ++n)
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < 4; ++y)
        for (Index x = 0; x < 5; ++x) EXPECT_EQ(t.offset(n, c, y, x), expected++);
}

TEST(Tensor4, PlaneViewAliasesStorage) {
  Tensor4<float> t(1, 2, 2, 3);
  t.plane(0, 1)(1, 2) = 7.0f;
  EXPECT_EQ(t(0, 1, 1, 2), 7.0f);
  EXPECT_EQ(t.data()[t.offset(0, 1, 1, 2)], 7.0f);
}

TEST(Tensor4, RejectsMismatchedStorage) {
  EXPECT_THROW(Tensor4<float>(Shape4{1, 1, 2, 2}, Tensor4<float>::Storage::Zero(3)), ValidationError);
  EXPECT_THROW(Tensor4<float>(Shape4{1, -1, 2, 2}), ValidationError);
}

TEST(Tensor4, GradientHasDataShape) {
  Tensor4<float> t(1, 2, 3, 3);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.grad().size(), t.size());
  t.grad().setConstant(2.0f);
  t.zero_grad();
  EXPECT_TRUE((t.grad() == 0.0f).all());
  t.drop_grad();
  EXPECT_FALSE(t.has_grad());
}

TEST(Tensor4, CastAndFiniteness) {
  auto t = Tensor4<double>::constant({1, 1, 2, 2}, 0.25);
  const auto f = t.cast<float>();
  EXPECT_EQ(f.shape(), t.shape());
  EXPECT_EQ(f(0, 0, 1, 1), 0.25f);
  EXPECT_TRUE(t.all_finite());
  t(0, 0, 0, 0) = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Tensor4, RequireSameShape) {
  EXPECT_NO_THROW(require_same_shape({1, 2, 3, 4}, {1, 2, 3, 4}, "test"));
  EXPECT_THROW(require_same_shape({1, 2, 3, 4}, {1, 2, 4, 3}, "test"), ValidationError);
}

}  // namespace
}  // namespace spd
