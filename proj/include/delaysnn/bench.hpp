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
#include <string>
#include <vector>

#include "delaysnn/network.hpp"

namespace delaysnn {

struct BenchConfig {
  Eigen::Index neurons = 256;
  std::size_t layers = 2;
  std::size_t steps = 100;
  std::size_t batch = 8;
  int k = 3;
  Eigen::Index input_channels = 140;
  Eigen::Index num_classes = 20;
  int d_max = 64;
  double input_rate = 0.05;
  std::size_t repetitions = 5;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
};

struct BenchEntry {
  std::string kind;  // "dense" or "conv"
  RecurrentParamCount per_layer;
  std::int64_t recurrent_weights_total = 0;
  std::vector<double> batch_seconds;  // one per timed repetition
  double median_ms_per_sample = 0.0;
};

struct BenchReport {
  BenchConfig config;
  BenchEntry dense;
  BenchEntry conv;
  double speedup = 0.0;             // dense median / conv median
  double param_reduction = 0.0;     // 1 - conv total / dense total, per layer
  double weight_reduction = 0.0;    // 1 - conv weights / dense weights, per layer
  double dense_spike_rate = 0.0;    // mean hidden spikes per neuron per step
  double conv_spike_rate = 0.0;

  std::string to_json() const;
  std::string to_text() const;
};

// Matched dense and conv models (same N, M, T and rounded delays), timed in
// eval mode on identical random inputs. Batch-norm statistics are taken from
// one pass over that input first. Warm-up runs are discarded.
BenchReport run_bench(const BenchConfig& config);

double median(std::vector<double> values);

}  // namespace delaysnn
