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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delaysnn/network.hpp"
#include "delaysnn/spike_data.hpp"

namespace delaysnn {

// Mean cross-entropy over the batch, max-subtracted.
double loss_ce(const Matrix& logits, const std::vector<std::uint32_t>& labels);
// d loss_ce / d logits.
Matrix loss_ce_grad(const Matrix& logits, const std::vector<std::uint32_t>& labels);

std::vector<std::uint32_t> predict(const Matrix& logits);
std::size_t count_correct(const Matrix& logits, const std::vector<std::uint32_t>& labels);

// Reverse-mode BPTT through a recorded forward. Spikes use the surrogate
// derivative; delays receive gradient only through the spread coefficients.
Gradients backward(const NetworkModel& model, const Tape& tape, const Matrix& dlogits);

enum class OptimizerKind { kAdam, kAdamW };

struct OptimConfig {
  OptimizerKind kind = OptimizerKind::kAdamW;
  double lr_weights = 1e-3;
  double lr_delays = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // AdamW only, weight group only
  int epochs = 10;
  std::size_t batch_size = 32;

  void validate() const;
};

// Adam / AdamW with two learning-rate groups: {weights, batch norm, readout}
// and {delays}. Delays are clamped to [0, d_max] after every step and
// non-trainable delay vectors are left untouched.
class Optimizer {
 public:
  explicit Optimizer(OptimConfig config) : config_(std::move(config)) {}

  void step(NetworkModel& model, Gradients& grads);
  std::int64_t steps_taken() const { return step_; }

 private:
  OptimConfig config_;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
  std::int64_t step_ = 0;
};

enum class AblationKind { kLearnable, kFixedUnit, kFixedValue };

struct AblationMode {
  AblationKind kind = AblationKind::kLearnable;
  double value = 1.0;  // delay for kFixedValue

  static AblationMode learnable() { return {}; }
  static AblationMode fixed_unit() { return {AblationKind::kFixedUnit, 1.0}; }
  static AblationMode fixed_value(double c) { return {AblationKind::kFixedValue, c}; }
};

// Freezes every layer's delays at the ablation constant (no-op for learnable).
void apply_ablation(NetworkModel& model, const AblationMode& ablation);

struct LayerDelayRecord {
  std::size_t layer = 0;
  DelayStats stats;
};

struct EpochRecord {
  int epoch = 0;
  double sigma = 0.0;  // width used during this epoch
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> valid_accuracy;
  std::size_t batches = 0;
  std::vector<LayerDelayRecord> delays;
};

struct TrainingReport {
  std::string config_text;  // run configuration, echoed verbatim
  std::vector<EpochRecord> epochs;
  std::optional<double> test_accuracy;
  std::vector<LayerDelayRecord> final_delays;
  std::size_t total_batches = 0;
};

struct TrainData {
  SpikeTensor train;
  std::vector<std::uint32_t> train_labels;
  std::optional<SpikeTensor> valid;
  std::vector<std::uint32_t> valid_labels;
  std::optional<SpikeTensor> test;
  std::vector<std::uint32_t> test_labels;
};

struct TrainOptions {
  OptimConfig optim{};
  AblationMode ablation{};
  std::uint64_t seed = 0;
  std::string config_text;
  // Called after each epoch; returning false stops training early.
  std::function<bool(const EpochRecord&)> on_epoch;
};

TrainingReport train(NetworkModel& model, const TrainData& data, const TrainOptions& options);

// Accuracy in eval mode. The model's mode is restored afterwards.
double evaluate(NetworkModel& model, const SpikeTensor& data, const std::vector<std::uint32_t>& labels,
                std::size_t batch_size = 64, std::vector<std::vector<std::int64_t>>* confusion = nullptr);

enum class DelayStatistic { kMean, kMedian };
// Mean or median of every layer's rounded delays, pooled.
double pooled_delay_statistic(const NetworkModel& model, DelayStatistic stat);

std::string report_to_json(const TrainingReport& report, bool include_config = true);

struct GradCheckSpec {
  NetworkConfig network;
  std::size_t batch = 2;
  std::size_t steps = 20;
  double input_rate = 0.3;
  double epsilon = 1e-5;
  std::size_t max_coords_per_group = 200;
  double kink_margin = 1e-3;
  // Denominator floor for relative errors of near-zero gradients.
  double abs_floor = 1e-8;
};

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  bool skipped = false;
  std::string note;
  bool passed() const { return skipped || max_rel_error < tolerance; }
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  bool passed() const;
  std::string to_text() const;
};

// Default setup: 2 conv layers of 8 neurons, T = 20, B = 2, sigma as given,
// smooth forward and attached reset so central differences are meaningful.
GradCheckSpec default_grad_check_spec(double sigma, KernelKind kind = KernelKind::kConv);

GradCheckReport grad_check(const GradCheckSpec& spec, double weight_tolerance, double delay_tolerance,
                           std::uint64_t seed);

}  // namespace delaysnn
