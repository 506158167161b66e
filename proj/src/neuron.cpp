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

#include "delaysnn/neuron.hpp"

#include <cmath>

namespace delaysnn {

void LifParams::validate() const {
  if (!(tau > 1.0) || !std::isfinite(tau)) throw ConfigError("tau", "membrane time constant must be > 1");
  if (!infinite_threshold && (!(v_th > 0.0) || !std::isfinite(v_th))) {
    throw ConfigError("v_th", "threshold must be positive and finite");
  }
}

LifState LifState::zeros(Eigen::Index batch, Eigen::Index neurons) {
  return {Matrix::Zero(batch, neurons), Matrix::Zero(batch, neurons), Matrix::Zero(batch, neurons), false};
}

Matrix spike_fn(const Matrix& h, double v_th) {
  return h.unaryExpr([v_th](double x) { return heaviside(x - v_th); });
}

Matrix spike_fn_backward(const Matrix& grad_out, const Matrix& h, double v_th, const SurrogateParams& surrogate) {
  if (grad_out.rows() != h.rows() || grad_out.cols() != h.cols()) throw ShapeError("spike_fn_backward shape");
  const double alpha = surrogate.alpha;
  return grad_out.cwiseProduct(h.unaryExpr([=](double x) { return surrogate_grad(x - v_th, alpha); }));
}

void lif_advance(LifState& state, const Eigen::Ref<const Matrix>& input_current, const LifParams& params,
                 bool smooth, const SurrogateParams& surrogate) {
  if (input_current.rows() != state.v.rows() || input_current.cols() != state.v.cols()) {
    throw ShapeError("lif_step: input current shape does not match state");
  }
  const double beta = params.beta();
  state.h = beta * state.v + (1.0 - beta) * input_current;
  state.has_nan = state.has_nan || state.h.hasNaN();

  if (params.infinite_threshold) {
    state.s.setZero();
    state.v = state.h;
    return;
  }
  const double v_th = params.v_th;
  if (smooth) {
    const double alpha = surrogate.alpha;
    state.s = state.h.unaryExpr([=](double x) { return surrogate_primitive(x - v_th, alpha); });
  } else {
    state.s = state.h.unaryExpr([=](double x) { return heaviside(x - v_th); });
  }
  if (params.reset == ResetMode::kHard) {
    state.v = state.h.cwiseProduct((1.0 - state.s.array()).matrix());
  } else {
    state.v = state.h - v_th * state.s;
  }
}

LifState lif_step(const LifState& state, const Matrix& input_current, const LifParams& params) {
  LifState next = state;
  lif_advance(next, input_current, params);
  return next;
}

LifState readout_step(const LifState& state, const Matrix& input_current, const LifParams& params) {
  LifParams readout = params;
  readout.infinite_threshold = true;
  LifState next = state;
  lif_advance(next, input_current, readout);
  return next;
}

}  // namespace delaysnn
