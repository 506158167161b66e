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

#include "delaysnn/delay.hpp"

#include <algorithm>
#include <cmath>

namespace delaysnn {

double spread(int tau, double d, double sigma) {
  const double width = 1.0 + sigma;
  return std::max(0.0, (width - std::abs(static_cast<double>(tau) - (1.0 + d))) / (width * width));
}

double spread_grad_d(int tau, double d, double sigma) {
  const double width = 1.0 + sigma;
  const double x = static_cast<double>(tau) - (1.0 + d);
  const double ax = std::abs(x);
  if (ax == 0.0 || ax >= width) return 0.0;
  return (x > 0.0 ? 1.0 : -1.0) / (width * width);
}

OffsetRange spread_support(double d, double sigma) {
  const int lo = static_cast<int>(std::floor(d - sigma));
  const int hi = static_cast<int>(std::ceil(d + sigma + 2.0));
  OffsetRange range;
  for (int tau = lo; tau <= hi; ++tau) {
    if (spread(tau, d, sigma) > 0.0) {
      if (range.empty()) range.first = tau;
      range.last = tau;
    }
  }
  return range;
}

double distance_to_kink(double d, double sigma) {
  // Kinks sit where tau - (1 + d) is 0 or +-(1 + sigma) for some integer tau.
  auto frac_dist = [](double x) { return std::abs(x - std::round(x)); };
  const double apex = frac_dist(1.0 + d);
  const double lower = frac_dist(d - sigma);
  const double upper = frac_dist(d + sigma + 2.0);
  return std::min({apex, lower, upper});
}

double round_half_up(double x) { return std::floor(x + 0.5); }

void DelayVector::clamp() { d = d.cwiseMax(0.0).cwiseMin(static_cast<double>(d_max)); }

DelayVector init_delays(Eigen::Index n, int d_max, DelayInit init, std::mt19937_64& rng) {
  if (d_max < 0) throw ConfigError("d_max", "must be non-negative");
  DelayVector out{Vector(n), d_max, true};
  if (init == DelayInit::kHalfNormal) {
    std::normal_distribution<double> normal(0.0, std::max(d_max / 4.0, 1e-12));
    for (Eigen::Index j = 0; j < n; ++j) out.d[j] = std::abs(normal(rng));
  } else {
    std::uniform_real_distribution<double> uniform(0.0, static_cast<double>(d_max));
    for (Eigen::Index j = 0; j < n; ++j) out.d[j] = uniform(rng);
  }
  out.clamp();
  return out;
}

DelayVector round_for_inference(const DelayVector& delays) {
  DelayVector out = delays;
  out.d = delays.d.unaryExpr([](double x) { return round_half_up(x); });
  out.trainable = false;
  return out;
}

DelayStats delay_stats(const DelayVector& delays) {
  const auto n = delays.d.size();
  if (n == 0) throw Error("delay_stats: empty delay vector");
  const Vector r = round_for_inference(delays).d;
  DelayStats s;
  s.mean = r.mean();
  s.std = std::sqrt((r.array() - s.mean).square().mean());
  s.min = static_cast<long>(r.minCoeff());
  s.max = static_cast<long>(r.maxCoeff());
  return s;
}

void SpreadConfig::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("sigma", "must be >= 0");
  if (!(sigma_init >= 0.0)) throw ConfigError("sigma_init", "must be >= 0");
  if (!(sigma_decay > 0.0 && sigma_decay < 1.0)) throw ConfigError("sigma_decay", "must be in (0, 1)");
  if (!(sigma_floor >= 0.0)) throw ConfigError("sigma_floor", "must be >= 0");
}

SpreadConfig anneal(const SpreadConfig& config) {
  SpreadConfig next = config;
  next.sigma = config.sigma * config.sigma_decay;
  if (next.sigma < config.sigma_floor) next.sigma = 0.0;
  return next;
}

SpreadTable build_spread_table(const Vector& delays, double sigma) {
  SpreadTable table;
  for (Eigen::Index j = 0; j < delays.size(); ++j) {
    table.max_offset = std::max(table.max_offset, spread_support(delays[j], sigma).last);
  }
  const auto n = delays.size();
  table.weight.assign(static_cast<std::size_t>(table.max_offset) + 1, Vector::Zero(n));
  table.grad.assign(static_cast<std::size_t>(table.max_offset) + 1, Vector::Zero(n));
  std::vector<bool> used(static_cast<std::size_t>(table.max_offset) + 1, false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto range = spread_support(delays[j], sigma);
    for (int tau = std::max(range.first, 1); tau <= range.last; ++tau) {
      const auto t = static_cast<std::size_t>(tau);
      table.weight[t][j] = spread(tau, delays[j], sigma);
      table.grad[t][j] = spread_grad_d(tau, delays[j], sigma);
      used[t] = true;
    }
  }
  for (int tau = 1; tau <= table.max_offset; ++tau) {
    if (used[static_cast<std::size_t>(tau)]) table.active.push_back(tau);
  }
  return table;
}

SchedulingBuffer::SchedulingBuffer(Eigen::Index batch, Eigen::Index neurons, std::size_t length)
    : slots_(length, Matrix::Zero(batch, neurons)) {
  if (length == 0) throw SizingError("scheduling buffer length must be positive");
}

std::size_t SchedulingBuffer::required_length(int d_max, double sigma_init) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(d_max) + sigma_init + 2.0)) + 1;
}

std::size_t SchedulingBuffer::slot_index(int tau) const {
  if (tau < 1 || static_cast<std::size_t>(tau) > slots_.size()) {
    throw SizingError("offset " + std::to_string(tau) + " outside scheduling buffer of length " +
                      std::to_string(slots_.size()));
  }
  return (head_ + static_cast<std::size_t>(tau) - 1) % slots_.size();
}

void SchedulingBuffer::schedule(const Matrix& values, const DelayVector& delays, double sigma) {
  const Matrix& ref = slots_.front();
  if (values.rows() != ref.rows() || values.cols() != ref.cols() || delays.d.size() != values.cols()) {
    throw ShapeError("schedule: values/delays do not match buffer shape");
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if ((values.col(j).array() == 0.0).all()) continue;
    const auto range = spread_support(delays.d[j], sigma);
    for (int tau = std::max(range.first, 1); tau <= range.last; ++tau) {
      slots_[slot_index(tau)].col(j) += spread(tau, delays.d[j], sigma) * values.col(j);
    }
  }
}

void SchedulingBuffer::add_at_offset(int tau, const Eigen::Ref<const Matrix>& values) {
  auto& slot = slots_[slot_index(tau)];
  if (values.rows() != slot.rows() || values.cols() != slot.cols()) throw ShapeError("add_at_offset shape");
  slot += values;
}

Matrix SchedulingBuffer::pop_current() {
  Matrix out;
  pop_into(out);
  return out;
}

void SchedulingBuffer::pop_into(Matrix& out) {
  auto& slot = slots_[head_];
  out = slot;
  slot.setZero();
  head_ = (head_ + 1) % slots_.size();
}

const Matrix& SchedulingBuffer::peek(int tau) const { return slots_[slot_index(tau)]; }

void SchedulingBuffer::reset() {
  for (auto& s : slots_) s.setZero();
  head_ = 0;
}

}  // namespace delaysnn
