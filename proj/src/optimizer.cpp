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

#include <cmath>

#include "delaysnn/training.hpp"

namespace delaysnn {

void OptimConfig::validate() const {
  if (!(lr_weights > 0.0)) throw ConfigError("optim.lr_weights", "must be positive");
  if (!(lr_delays > 0.0)) throw ConfigError("optim.lr_delays", "must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optim.beta1", "must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim.beta2", "must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optim.eps", "must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("optim.weight_decay", "must be non-negative");
  if (epochs < 0) throw ConfigError("optim.epochs", "must be non-negative");
  if (batch_size == 0) throw ConfigError("optim.batch_size", "must be at least 1");
}

void Optimizer::step(NetworkModel& model, Gradients& grads) {
  auto params = model.parameters();
  auto gviews = grads.views(model);
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Vector::Zero(static_cast<Eigen::Index>(p.values.size())));
      v_.push_back(Vector::Zero(static_cast<Eigen::Index>(p.values.size())));
    }
  }
  if (m_.size() != params.size()) throw ShapeError("optimizer state does not match model parameters");
  ++step_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const bool is_delay = p.group == ParamGroup::kDelays;
    if (is_delay && !model.layers()[static_cast<std::size_t>(p.layer)].delays.trainable) continue;
    const double lr = is_delay ? config_.lr_delays : config_.lr_weights;
    Eigen::Map<Vector> value(p.values.data(), static_cast<Eigen::Index>(p.values.size()));
    Eigen::Map<const Vector> grad(gviews[i].values.data(), static_cast<Eigen::Index>(gviews[i].values.size()));
    if (config_.kind == OptimizerKind::kAdamW && !is_delay) value *= 1.0 - lr * config_.weight_decay;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad.cwiseAbs2();
    value.array() -= lr * (m_[i].array() / bias1) / ((v_[i].array() / bias2).sqrt() + config_.eps);
  }
  for (auto& layer : model.layers()) {
    if (layer.delays.trainable) layer.delays.clamp();
  }
}

}  // namespace delaysnn
