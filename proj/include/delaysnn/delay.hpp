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

#include <random>
#include <string>
#include <vector>

#include "delaysnn/common.hpp"

namespace delaysnn {

// Triangular spread h_{sigma,d}(tau) = max(0, (1 + sigma - |tau - (1 + d)|) / (1 + sigma)^2).
double spread(int tau, double d, double sigma);

// d/dd of spread: sign(tau - (1 + d)) / (1 + sigma)^2 on the open support,
// 0 outside it and at the apex/edge kinks.
double spread_grad_d(int tau, double d, double sigma);

// Integer offsets with nonzero spread, as an inclusive range [first, last].
struct OffsetRange {
  int first = 0;
  int last = -1;
  bool empty() const { return last < first; }
};
OffsetRange spread_support(double d, double sigma);

// Distance from d to the nearest point where spread(., d, sigma) is not differentiable.
double distance_to_kink(double d, double sigma);

double round_half_up(double x);

enum class DelayInit { kHalfNormal, kUniform };

struct DelayVector {
  Vector d;
  int d_max = 64;
  bool trainable = true;

  void clamp();
};

DelayVector init_delays(Eigen::Index n, int d_max, DelayInit init, std::mt19937_64& rng);
DelayVector round_for_inference(const DelayVector& delays);

struct DelayStats {
  double mean = 0.0;
  double std = 0.0;  // population
  long min = 0;
  long max = 0;
};

// Statistics of the rounded delays.
DelayStats delay_stats(const DelayVector& delays);

struct SpreadConfig {
  double sigma = 10.0;
  double sigma_init = 10.0;
  double sigma_decay = 0.95;
  double sigma_floor = 0.01;

  void validate() const;
};

// One epoch of multiplicative annealing; snaps to exactly 0 below the floor.
SpreadConfig anneal(const SpreadConfig& config);

// Spread coefficients for every neuron at offsets 1..max_offset.
// weight[tau] and grad[tau] are indexed by tau directly (entry 0 unused).
struct SpreadTable {
  int max_offset = 0;
  std::vector<Vector> weight;
  std::vector<Vector> grad;
  std::vector<int> active;  // offsets with at least one nonzero weight
};

// Offsets below 1 would land in the past and are dropped.
SpreadTable build_spread_table(const Vector& delays, double sigma);

// Circular (B, N, L) buffer of future input. Offset tau (>= 1) refers to the
// tau-th next pop: offset 1 is returned by the next call to pop_current().
class SchedulingBuffer {
 public:
  SchedulingBuffer(Eigen::Index batch, Eigen::Index neurons, std::size_t length);

  // Smallest length holding the full spread support for any delay in [0, d_max].
  static std::size_t required_length(int d_max, double sigma_init);

  // slot(tau) += spread(tau, d_j, sigma) * values[:, j] for every j and tau >= 1.
  void schedule(const Matrix& values, const DelayVector& delays, double sigma);
  void add_at_offset(int tau, const Eigen::Ref<const Matrix>& values);

  Matrix pop_current();
  // Moves the current slot into `out` (resized as needed) and zeroes it.
  void pop_into(Matrix& out);

  const Matrix& peek(int tau) const;
  Matrix& at_offset(int tau) { return slots_[slot_index(tau)]; }
  std::size_t length() const { return slots_.size(); }
  std::size_t head() const { return head_; }
  void reset();

 private:
  std::size_t slot_index(int tau) const;

  std::vector<Matrix> slots_;
  std::size_t head_ = 0;
};

}  // namespace delaysnn
