// Copyright 2026 The simulst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "grad_cases.hpp"
#include "gradcheck.hpp"
#include "simulst/autodiff/kernels.hpp"
#include "simulst/autodiff/tape.hpp"

namespace simulst {
namespace {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using testing::gradcheck;
using testing::random_tensor;

TEST(Tensor, ShapeAndAccess) {
  Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_FLOAT_EQ(t.at(1, 2), 6.0f);
  EXPECT_EQ(t.rows(1, 2), Tensor::matrix(1, 3, {4, 5, 6}));
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Tensor, AppendRowsToEmpty) {
  Tensor t;
  t.append_rows(Tensor::matrix(1, 2, {1, 2}));
  t.append_rows(Tensor::matrix(2, 2, {3, 4, 5, 6}));
  EXPECT_EQ(t, Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  EXPECT_THROW(t.append_rows(Tensor::matrix(1, 3, {1, 2, 3})), ShapeError);
}

TEST(Ops, MatmulExamples) {
  Tape t(false);
  Var eye = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  Var col = t.constant(Tensor::matrix(2, 1, {3, 4}));
  EXPECT_EQ(ad::matmul(eye, col).value(), Tensor::matrix(2, 1, {3, 4}));
  Var row = t.constant(Tensor::matrix(1, 2, {1, 2}));
  EXPECT_FLOAT_EQ(ad::matmul(row, col).value().item(), 11.0f);
  EXPECT_THROW(ad::matmul(col, col), ShapeError);
}

TEST(Ops, MatmulMatchesNaiveLoop) {
  std::mt19937_64 rng(5);
  const Tensor a = random_tensor({5, 7}, rng), b = random_tensor({7, 3}, rng);
  Tape t(false);
  const Tensor c = ad::matmul(t.constant(a), t.constant(b)).value();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double ref = 0;
      for (std::size_t k = 0; k < 7; ++k) ref += static_cast<double>(a.at(i, k)) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), ref, 1e-5);
    }
}

TEST(Ops, BatchedRowsEqualSingleRows) {
  // Each output row depends only on its input row, with the same
  // accumulation order; streaming relies on this.
  std::mt19937_64 rng(6);
  const Tensor a = random_tensor({6, 9}, rng), b = random_tensor({9, 4}, rng);
  Tape t(false);
  const Tensor all = ad::matmul(t.constant(a), t.constant(b)).value();
  for (std::size_t r = 0; r < 6; ++r)
    EXPECT_EQ(ad::matmul(t.constant(a.rows(r, r + 1)), t.constant(b)).value(), all.rows(r, r + 1));
}

TEST(Ops, ElementwiseExamples) {
  Tape t(false);
  EXPECT_FLOAT_EQ(ad::tanh(t.constant(Tensor::scalar(0))).value().item(), 0.0f);
  EXPECT_NEAR(ad::sigmoid(t.constant(Tensor::scalar(1))).value().item(), 1.0 / (1.0 + std::exp(-1.0)), 1e-7);
  EXPECT_EQ(ad::softmax(t.constant(Tensor::matrix(1, 2, {0, 0}))).value(), Tensor::matrix(1, 2, {0.5f, 0.5f}));
  EXPECT_FLOAT_EQ(ad::relu(t.constant(Tensor::vector({-2, 3}))).value()[0], 0.0f);
  EXPECT_THROW(ad::add(t.constant(Tensor({2, 3})), t.constant(Tensor({2}))), ShapeError);
}

TEST(Ops, SoftmaxShiftInvariant) {
  Tape t(false);
  const Tensor x = Tensor::matrix(1, 4, {0.3f, -1.0f, 2.0f, 0.5f});
  Tensor shifted = x;
  for (float& v : shifted.data()) v += 5.0f;
  const Tensor a = ad::softmax(t.constant(x)).value(), b = ad::softmax(t.constant(shifted)).value();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(Ops, ConvExamples) {
  Tape t(false);
  Var ones = t.constant(Tensor({1, 4, 4}, 1.0f));
  Var unit = t.constant(Tensor({1, 1, 1, 1}, 1.0f));
  EXPECT_EQ(ad::conv2d(ones, unit).value(), Tensor({1, 4, 4}, 1.0f));

  const Tensor img({1, 3, 3}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  Var avg = t.constant(Tensor({1, 1, 3, 3}, 1.0f / 9.0f));
  const Tensor mean = ad::conv2d(t.constant(img), avg, 1, ad::kernels::Padding::kValid).value();
  ASSERT_EQ(mean.shape(), (ad::Shape{1, 1, 1}));
  EXPECT_NEAR(mean[0], 5.0f, 1e-6);
  EXPECT_THROW(ad::conv2d(t.constant(Tensor({1, 2, 2})), t.constant(Tensor({1, 1, 3, 3})), 1,
                          ad::kernels::Padding::kValid),
               ShapeError);
}

TEST(Ops, ConvMatchesDirectSum) {
  std::mt19937_64 rng(9);
  const Tensor in = random_tensor({2, 5, 6}, rng), k = random_tensor({3, 2, 3, 3}, rng),
               b = random_tensor({3}, rng);
  Tape t(false);
  const Tensor out = ad::conv2d(t.constant(in), t.constant(k), t.constant(b)).value();
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        double ref = b[o];
        for (std::size_t c = 0; c < 2; ++c)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int yy = static_cast<int>(y) + dy, xx = static_cast<int>(x) + dx;
              if (yy < 0 || yy >= 5 || xx < 0 || xx >= 6) continue;
              ref += static_cast<double>(in[(c * 5 + yy) * 6 + xx]) *
                     k[((o * 2 + c) * 3 + (dy + 1)) * 3 + (dx + 1)];
            }
        EXPECT_NEAR(out[(o * 5 + y) * 6 + x], ref, 1e-5);
      }
}

TEST(Ops, MaxPoolExamples) {
  Tape t(false);
  EXPECT_FLOAT_EQ(ad::maxpool2d(t.constant(Tensor({1, 2, 2}, std::vector<float>{1, 2, 3, 4}))).value().item(), 4.0f);
  EXPECT_EQ(ad::maxpool2d(t.constant(Tensor({2, 4, 6}, 7.0f))).value(), Tensor({2, 2, 3}, 7.0f));
  EXPECT_EQ(ad::maxpool2d(t.constant(Tensor({1, 5, 5}))).value().shape(), (ad::Shape{1, 2, 2}));
  EXPECT_THROW(ad::maxpool2d(t.constant(Tensor({1, 1, 4}))), ShapeError);
}

TEST(Backward, SquareHasGradientSix) {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3));
  t.backward(ad::mul(x, x));
  EXPECT_FLOAT_EQ(t.grad(x).item(), 6.0f);
}

TEST(Backward, DisconnectedLeafKeepsZeroGradient) {
  Tape t;
  Var x = t.leaf(Tensor::scalar(2));
  Var unused = t.leaf(Tensor::vector({1, 2}));
  t.backward(ad::exp(x));
  EXPECT_EQ(t.grad(unused), Tensor({2}));
}

TEST(Backward, RejectsNonScalarAndNonRecording) {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(t.backward(x), ContractError);
  Tape off(false);
  Var y = off.constant(Tensor::scalar(1));
  EXPECT_THROW(off.backward(y), ContractError);
}

TEST(Backward, ReusedValueAccumulates) {
  Tape t;
  Var x = t.leaf(Tensor::scalar(2));
  Var y = ad::add(ad::mul(x, x), ad::scale(x, 3));  // x^2 + 3x
  t.backward(y);
  EXPECT_FLOAT_EQ(t.grad(x).item(), 7.0f);
}

// Central finite differences for every op on small tensors.

class GradientCheck : public ::testing::TestWithParam<testing::GradCase> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const testing::GradCase& c = GetParam();
  const std::vector<Tensor> inputs = testing::grad_case_inputs(c);
  for (const Tensor& t : inputs) ASSERT_LE(t.size(), 64u);
  const auto r = gradcheck(c.fn, inputs, 77);
  EXPECT_EQ(r.failures, 0u) << c.name << ": " << r.worst;
  EXPECT_LE(r.max_rel_error, 1e-3) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradientCheck, ::testing::ValuesIn(testing::grad_cases()),
                         [](const auto& info) { return std::string(info.param.name); });

}  // namespace
}  // namespace simulst
