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

#include <cmath>
#include <random>

namespace delaysnn {

namespace {

void check_conv(int k, Eigen::Index neurons) {
  if (k <= 0 || k % 2 == 0) throw ConfigError("k", "conv kernel size must be odd and positive");
  if (neurons <= 0) throw ConfigError("N", "neuron count must be positive");
}

}  // namespace

RecurrentKernel make_dense_kernel(Matrix w) {
  if (w.rows() != w.cols()) throw ShapeError("dense recurrent kernel must be square");
  RecurrentKernel kernel;
  kernel.kind = KernelKind::kDense;
  kernel.neurons = w.rows();
  kernel.k = 0;
  kernel.w_dense = std::move(w);
  return kernel;
}

RecurrentKernel make_conv_kernel(Vector w, Eigen::Index neurons) {
  check_conv(static_cast<int>(w.size()), neurons);
  RecurrentKernel kernel;
  kernel.kind = KernelKind::kConv;
  kernel.neurons = neurons;
  kernel.k = static_cast<int>(w.size());
  kernel.w_conv = std::move(w);
  return kernel;
}

RecurrentKernel init_kernel(KernelKind kind, Eigen::Index neurons, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (kind == KernelKind::kConv) {
    check_conv(k, neurons);
    const double bound = std::sqrt(6.0 / k);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Vector w(k);
    for (int m = 0; m < k; ++m) w[m] = dist(rng);
    return make_conv_kernel(std::move(w), neurons);
  }
  if (neurons <= 0) throw ConfigError("N", "neuron count must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(neurons));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(neurons, neurons);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return make_dense_kernel(std::move(w));
}

void apply_recurrent_add(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out) {
  if (x.cols() != kernel.neurons || out.cols() != kernel.neurons || out.rows() != x.rows()) {
    throw ShapeError("apply_recurrent: shape mismatch");
  }
  if (kernel.kind == KernelKind::kDense) {
    out.noalias() += x * kernel.w_dense.transpose();
    return;
  }
  const Eigen::Index n = kernel.neurons;
  const int half = (kernel.k - 1) / 2;
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const double* xi = x.row(b).data();
    double* yi = out.row(b).data();
    for (int m = 0; m < kernel.k; ++m) {
      const double w = kernel.w_conv[m];
      const Eigen::Index shift = m - half;
      const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index hi = std::min<Eigen::Index>(n, n - shift);
      for (Eigen::Index i = lo; i < hi; ++i) yi[i] += w * xi[i + shift];
    }
  }
}

Matrix apply_recurrent(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& x) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  apply_recurrent_add(kernel, x, out);
  return out;
}

void apply_recurrent_transpose_add(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& g,
                                   Eigen::Ref<Matrix> out) {
  if (g.cols() != kernel.neurons || out.cols() != kernel.neurons || out.rows() != g.rows()) {
    throw ShapeError("apply_recurrent_transpose: shape mismatch");
  }
  if (kernel.kind == KernelKind::kDense) {
    out.noalias() += g * kernel.w_dense;
    return;
  }
  const Eigen::Index n = kernel.neurons;
  const int half = (kernel.k - 1) / 2;
  for (Eigen::Index b = 0; b < g.rows(); ++b) {
    const double* gi = g.row(b).data();
    double* xo = out.row(b).data();
    for (int m = 0; m < kernel.k; ++m) {
      const double w = kernel.w_conv[m];
      const Eigen::Index shift = m - half;
      const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index hi = std::min<Eigen::Index>(n, n - shift);
      for (Eigen::Index i = lo; i < hi; ++i) xo[i + shift] += w * gi[i];
    }
  }
}

void accumulate_kernel_grad(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& g,
                            const Eigen::Ref<const Matrix>& x, Matrix& grad_dense, Vector& grad_conv) {
  if (kernel.kind == KernelKind::kDense) {
    grad_dense.noalias() += g.transpose() * x;
    return;
  }
  const Eigen::Index n = kernel.neurons;
  const int half = (kernel.k - 1) / 2;
  for (int m = 0; m < kernel.k; ++m) {
    const Eigen::Index shift = m - half;
    const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index hi = std::min<Eigen::Index>(n, n - shift);
    if (hi <= lo) continue;
    grad_conv[m] += (g.middleCols(lo, hi - lo).array() * x.middleCols(lo + shift, hi - lo).array()).sum();
  }
}

RecurrentKernel dense_equivalent(const RecurrentKernel& conv) {
  if (conv.kind != KernelKind::kConv) return conv;
  const Eigen::Index n = conv.neurons;
  const int half = (conv.k - 1) / 2;
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int m = 0; m < conv.k; ++m) {
      const Eigen::Index j = i + m - half;
      if (j >= 0 && j < n) w(i, j) = conv.w_conv[m];
    }
  }
  return make_dense_kernel(std::move(w));
}

RecurrentParamCount count_recurrent_params(KernelKind kind, std::int64_t neurons, std::int64_t k) {
  RecurrentParamCount c;
  c.weights = kind == KernelKind::kDense ? neurons * neurons : k;
  c.delays = neurons;
  c.total = c.weights + c.delays;
  return c;
}

}  // namespace delaysnn
