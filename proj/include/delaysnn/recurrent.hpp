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

#pragma once

#include <cstdint>

#include "delaysnn/common.hpp"

namespace delaysnn {

enum class KernelKind { kDense, kConv };

// Either a dense (N, N) matrix or a length-k kernel slid along the neuron axis.
struct RecurrentKernel {
  KernelKind kind = KernelKind::kConv;
  Eigen::Index neurons = 0;
  int k = 3;
  Matrix w_dense;  // (N, N), y_i = sum_j W_ij x_j
  Vector w_conv;   // (k), y_i = sum_m w_m x_{i + m - (k - 1) / 2}

  Eigen::Index num_weights() const { return kind == KernelKind::kDense ? neurons * neurons : k; }
};

RecurrentKernel make_dense_kernel(Matrix w);
RecurrentKernel make_conv_kernel(Vector w, Eigen::Index neurons);

// Kaiming-uniform on [-sqrt(6 / fan_in), +sqrt(6 / fan_in)], fan_in = k (conv) or N (dense).
RecurrentKernel init_kernel(KernelKind kind, Eigen::Index neurons, int k, std::uint64_t seed);

// (B, N) -> (B, N). Conv is cross-correlation (no flip), stride 1, zero padded.
Matrix apply_recurrent(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& x);
void apply_recurrent_add(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& x, Eigen::Ref<Matrix> out);

// Adjoint of apply_recurrent: out += K^T g.
void apply_recurrent_transpose_add(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& g,
                                   Eigen::Ref<Matrix> out);

// Accumulates d<g, K x>/dK into grad_dense or grad_conv (matching kernel.kind).
void accumulate_kernel_grad(const RecurrentKernel& kernel, const Eigen::Ref<const Matrix>& g,
                            const Eigen::Ref<const Matrix>& x, Matrix& grad_dense, Vector& grad_conv);

// Banded matrix with W[i, i + m - (k - 1) / 2] = w_conv[m]; identical outputs to the conv kernel.
RecurrentKernel dense_equivalent(const RecurrentKernel& conv);

struct RecurrentParamCount {
  std::int64_t weights = 0;
  std::int64_t delays = 0;
  std::int64_t total = 0;
};

RecurrentParamCount count_recurrent_params(KernelKind kind, std::int64_t neurons, std::int64_t k);

}  // namespace delaysnn
