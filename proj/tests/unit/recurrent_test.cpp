// Copyright 2026 The delaysnn Authors.
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

#include "delaysnn/recurrent.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace delaysnn {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Vector kernel_of(std::initializer_list<double> w) {
  Vector v(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double x : w) v[i++] = x;
  return v;
}

// y[b, i] = sum_m w[m] x[b, i + m - (k - 1) / 2], zero outside [0, N).
Matrix reference_conv(const Vector& w, const Matrix& x) {
  const Eigen::Index half = (w.size() - 1) / 2;
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      for (Eigen::Index m = 0; m < w.size(); ++m) {
        const Eigen::Index src = i + m - half;
        if (src >= 0 && src < x.cols()) y(b, i) += w[m] * x(b, src);
      }
    }
  }
  return y;
}

TEST(Conv, IdentityKernel) {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(3, 10, rng);
  EXPECT_EQ(apply_recurrent(make_conv_kernel(kernel_of({0, 1, 0}), 10), x), x);
}

TEST(Conv, CrossCorrelationWithoutFlip) {
  Matrix e5 = Matrix::Zero(1, 10);
  e5(0, 5) = 1.0;
  const Matrix y = apply_recurrent(make_conv_kernel(kernel_of({1, 0, 0}), 10), e5);
  Matrix e6 = Matrix::Zero(1, 10);
  e6(0, 6) = 1.0;
  EXPECT_EQ(y, e6);
}

TEST(Conv, MatchesReferenceLoop) {
  std::mt19937_64 rng(2);
  for (int k : {1, 3, 5, 7}) {
    const Matrix x = random_matrix(4, 13, rng);
    const Vector w = random_matrix(1, k, rng).transpose();
    EXPECT_TRUE(apply_recurrent(make_conv_kernel(w, 13), x).isApprox(reference_conv(w, x), 1e-14)) << k;
  }
}

TEST(Conv, BoundaryUsesOnlyPaddedNeighbours) {
  Matrix x = Matrix::Zero(1, 8);
  for (Eigen::Index i = 2; i < 8; ++i) x(0, i) = 100.0 + static_cast<double>(i);
  const Matrix y = apply_recurrent(make_conv_kernel(kernel_of({1, 1, 1}), 8), x);
  EXPECT_EQ(y(0, 0), 0.0);  // reads only x[0], x[1]
  EXPECT_EQ(y(0, 1), 102.0);
}

TEST(Conv, EvenKernelRejected) {
  EXPECT_THROW(make_conv_kernel(kernel_of({1, 1}), 8), ConfigError);
}

TEST(Dense, IdentityAndMatrixProduct) {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(3, 6, rng);
  EXPECT_EQ(apply_recurrent(make_dense_kernel(Matrix::Identity(6, 6)), x), x);
  const Matrix w = random_matrix(6, 6, rng);
  // y_i = sum_j W_ij x_j per batch row
  const Matrix expect = x * w.transpose();
  EXPECT_TRUE(apply_recurrent(make_dense_kernel(w), x).isApprox(expect, 1e-14));
}

TEST(DenseEquivalent, BandedMatrixReproducesConv) {
  std::mt19937_64 rng(4);
  for (Eigen::Index n : {1, 2, 5, 17, 64}) {
    for (int k : {1, 3, 5}) {
      const Vector w = random_matrix(1, k, rng).transpose();
      const RecurrentKernel conv = make_conv_kernel(w, n);
      const RecurrentKernel dense = dense_equivalent(conv);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const Eigen::Index m = j - i + (k - 1) / 2;
          EXPECT_EQ(dense.w_dense(i, j), (m >= 0 && m < k) ? w[m] : 0.0);
        }
      }
      const Matrix x = random_matrix(3, n, rng);
      EXPECT_TRUE(apply_recurrent(dense, x).isApprox(apply_recurrent(conv, x), 1e-13));
    }
  }
}

TEST(Linearity, BothKinds) {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(2, 12, rng);
  const Matrix y = random_matrix(2, 12, rng);
  for (const RecurrentKernel& k :
       {init_kernel(KernelKind::kConv, 12, 3, 1), init_kernel(KernelKind::kDense, 12, 3, 1)}) {
    const Matrix lhs = apply_recurrent(k, 1.5 * x - 0.25 * y);
    const Matrix rhs = 1.5 * apply_recurrent(k, x) - 0.25 * apply_recurrent(k, y);
    EXPECT_TRUE(lhs.isApprox(rhs, 1e-13));
  }
}

TEST(Adjoint, TransposeSatisfiesInnerProductIdentity) {
  std::mt19937_64 rng(6);
  for (const RecurrentKernel& k :
       {init_kernel(KernelKind::kConv, 9, 5, 2), init_kernel(KernelKind::kDense, 9, 3, 2)}) {
    const Matrix x = random_matrix(3, 9, rng);
    const Matrix g = random_matrix(3, 9, rng);
    Matrix kt_g = Matrix::Zero(3, 9);
    apply_recurrent_transpose_add(k, g, kt_g);
    EXPECT_NEAR((g.array() * apply_recurrent(k, x).array()).sum(), (kt_g.array() * x.array()).sum(), 1e-12);
  }
}

TEST(KernelGrad, ConvMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const Matrix x = random_matrix(4, 11, rng);
  const Matrix g = random_matrix(4, 11, rng);
  RecurrentKernel k = init_kernel(KernelKind::kConv, 11, 5, 3);
  Matrix gd;
  Vector gc = Vector::Zero(5);
  accumulate_kernel_grad(k, g, x, gd, gc);
  const double eps = 1e-6;
  for (int m = 0; m < 5; ++m) {
    RecurrentKernel plus = k;
    RecurrentKernel minus = k;
    plus.w_conv[m] += eps;
    minus.w_conv[m] -= eps;
    const double fd = ((g.array() * apply_recurrent(plus, x).array()).sum() -
                       (g.array() * apply_recurrent(minus, x).array()).sum()) /
                      (2 * eps);
    EXPECT_LT(std::abs(fd - gc[m]) / std::max(std::abs(gc[m]), 1e-12), 1e-5);
  }
}

TEST(KernelGrad, DenseIsOuterProduct) {
  std::mt19937_64 rng(8);
  const Matrix x = random_matrix(4, 6, rng);
  const Matrix g = random_matrix(4, 6, rng);
  RecurrentKernel k = init_kernel(KernelKind::kDense, 6, 3, 3);
  Matrix gd = Matrix::Zero(6, 6);
  Vector gc;
  accumulate_kernel_grad(k, g, x, gd, gc);
  EXPECT_TRUE(gd.isApprox(g.transpose() * x, 1e-13));
}

TEST(Init, KaimingBoundsAndDeterminism) {
  const RecurrentKernel a = init_kernel(KernelKind::kConv, 256, 3, 11);
  EXPECT_EQ(a.w_conv.size(), 3);
  EXPECT_EQ(a.w_dense.size(), 0);
  EXPECT_LE(a.w_conv.cwiseAbs().maxCoeff(), std::sqrt(2.0));
  EXPECT_EQ(a.w_conv, init_kernel(KernelKind::kConv, 256, 3, 11).w_conv);

  const RecurrentKernel d = init_kernel(KernelKind::kDense, 256, 3, 11);
  EXPECT_EQ(d.w_dense.rows(), 256);
  EXPECT_EQ(d.w_conv.size(), 0);
  const double bound = std::sqrt(6.0 / 256.0);
  EXPECT_NEAR(bound, 0.153, 5e-4);
  EXPECT_LE(d.w_dense.cwiseAbs().maxCoeff(), bound);
  // Uniform on [-b, b]: the extremes get close to the bound for 65536 draws.
  EXPECT_GT(d.w_dense.cwiseAbs().maxCoeff(), 0.99 * bound);
  EXPECT_EQ(d.w_dense, init_kernel(KernelKind::kDense, 256, 3, 11).w_dense);
}

TEST(ParamCount, ClosedForms) {
  const auto dense = count_recurrent_params(KernelKind::kDense, 256, 3);
  EXPECT_EQ(dense.weights, 65536);
  EXPECT_EQ(dense.delays, 256);
  EXPECT_EQ(dense.total, 65792);
  const auto conv = count_recurrent_params(KernelKind::kConv, 256, 3);
  EXPECT_EQ(conv.weights, 3);
  EXPECT_EQ(conv.total, 259);
  EXPECT_EQ(3 * conv.weights, 9);
  for (std::int64_t n : {1, 7, 100, 512}) {
    for (std::int64_t k : {1, 3, 9}) {
      EXPECT_EQ(count_recurrent_params(KernelKind::kDense, n, k).total, n * n + n);
      EXPECT_EQ(count_recurrent_params(KernelKind::kConv, n, k).total, k + n);
    }
  }
}

}  // namespace
}  // namespace delaysnn
