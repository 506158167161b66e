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

#include <numbers>

#include "delaysnn/common.hpp"

namespace delaysnn {

enum class ResetMode { kHard, kSoft };

struct LifParams {
  double tau = 2.0;  // membrane time constant, > 1
  double v_th = 1.0;
  ResetMode reset = ResetMode::kHard;
  // Readout neurons never fire; their membrane acts as a leaky integrator.
  bool infinite_threshold = false;

  double beta() const { return 1.0 - 1.0 / tau; }
  void validate() const;
};

struct SurrogateParams {
  double alpha = 2.0;
};

// v: potential after reset, h: potential before reset, s: spikes.
struct LifState {
  Matrix v;
  Matrix h;
  Matrix s;
  bool has_nan = false;

  static LifState zeros(Eigen::Index batch, Eigen::Index neurons);
};

// Heaviside with the tie firing: Θ(0) = 1.
inline double heaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }

// Arctangent surrogate: g(x) = alpha / (2 (1 + (pi alpha x / 2)^2)).
inline double surrogate_grad(double x, double alpha) {
  const double z = std::numbers::pi * alpha * x / 2.0;
  return alpha / (2.0 * (1.0 + z * z));
}

// Smooth primitive of surrogate_grad, rising from 0 to 1.
inline double surrogate_primitive(double x, double alpha) {
  return std::atan(std::numbers::pi * alpha * x / 2.0) / std::numbers::pi + 0.5;
}

Matrix spike_fn(const Matrix& h, double v_th);
// Backward contract of spike_fn: grad_out scaled by the surrogate at h - v_th.
Matrix spike_fn_backward(const Matrix& grad_out, const Matrix& h, double v_th, const SurrogateParams& surrogate);

// H = beta V + (1 - beta) I, S = Θ(H - v_th), then hard or soft reset.
// NaN inputs propagate and set has_nan on the returned state.
LifState lif_step(const LifState& state, const Matrix& input_current, const LifParams& params);

// Same update, in place. `smooth` replaces Θ by surrogate_primitive.
void lif_advance(LifState& state, const Eigen::Ref<const Matrix>& input_current, const LifParams& params,
                 bool smooth = false, const SurrogateParams& surrogate = {});

LifState readout_step(const LifState& state, const Matrix& input_current, const LifParams& params);

}  // namespace delaysnn
