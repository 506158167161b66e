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
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "delaysnn/common.hpp"
#include "delaysnn/delay.hpp"
#include "delaysnn/neuron.hpp"
#include "delaysnn/recurrent.hpp"
#include "delaysnn/spike_data.hpp"

namespace delaysnn {

enum class DelayMode { kLearnable, kFixed };
enum class ReadoutMode { kLastStep, kSum };
enum class Mode { kTrain, kEval };

struct LayerConfig {
  Eigen::Index neurons = 256;
  KernelKind kernel_kind = KernelKind::kConv;
  int k = 3;
  DelayMode delay_mode = DelayMode::kLearnable;
  double fixed_delay = 1.0;  // used when delay_mode == kFixed
  double dropout_ff = 0.0;
  double dropout_rec = 0.0;
  bool has_batchnorm = true;
};

// Switches used by gradient checking. smooth_forward replaces the Heaviside by
// the surrogate's primitive so the forward becomes differentiable; with
// detach_reset off the backward also differentiates the reset term.
struct NumericsConfig {
  bool smooth_forward = false;
  bool detach_reset = true;
};

struct NetworkConfig {
  Eigen::Index input_channels = 140;
  Eigen::Index num_classes = 20;
  std::vector<LayerConfig> layers = {LayerConfig{}, LayerConfig{}};
  LifParams lif{};
  SurrogateParams surrogate{};
  ReadoutMode readout = ReadoutMode::kLastStep;
  int d_max = 64;
  DelayInit delay_init = DelayInit::kHalfNormal;
  SpreadConfig sigma{};
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  NumericsConfig numerics{};

  void validate() const;
};

struct BatchNorm {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
};

struct HiddenLayer {
  LayerConfig config;
  Matrix w_ff;  // (N_in, N)
  BatchNorm bn;
  RecurrentKernel kernel;
  DelayVector delays;
};

struct Readout {
  Matrix w_out;  // (N, N_c)
  Vector b_out;  // (N_c)
};

enum class ParamGroup { kWeights, kDelays };

// A named view onto one parameter (or state) block of a model.
struct ParamView {
  std::string name;
  std::span<double> values;
  std::vector<std::size_t> shape;
  ParamGroup group = ParamGroup::kWeights;
  int layer = -1;  // -1 for readout
  std::string kind;  // "w_ff", "bn", "w_rec", "w_conv", "delays", "readout", "bn_stats"
};

struct LayerGrad {
  Matrix w_ff;
  Vector gamma;
  Vector beta;
  Matrix w_dense;
  Vector w_conv;
  Vector delays;
};

class NetworkModel;

// Gradients shaped like the model's trainable parameters.
struct Gradients {
  std::vector<LayerGrad> layers;
  Matrix w_out;
  Vector b_out;

  static Gradients zeros_like(const NetworkModel& model);
  // Views aligned one-to-one with NetworkModel::parameters().
  std::vector<ParamView> views(const NetworkModel& model);
  double squared_norm() const;
};

class NetworkModel {
 public:
  NetworkModel() = default;
  static NetworkModel create(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  NetworkConfig& mutable_config() { return config_; }

  std::vector<HiddenLayer>& layers() { return layers_; }
  const std::vector<HiddenLayer>& layers() const { return layers_; }
  Readout& readout() { return readout_; }
  const Readout& readout() const { return readout_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  double sigma() const { return config_.sigma.sigma; }
  void set_sigma(double sigma) { config_.sigma.sigma = sigma; }

  // Length of every layer's scheduling buffer.
  std::size_t buffer_length() const;

  // Trainable parameters, in a fixed order shared with Gradients::views().
  std::vector<ParamView> parameters();
  // Parameters plus batch-norm running statistics.
  std::vector<ParamView> state_blocks();

  std::mt19937_64& dropout_rng() { return dropout_rng_; }
  void reseed_dropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

  // Effective delays for the current mode (rounded in eval and for fixed layers).
  Vector effective_delays(std::size_t layer) const;
  double effective_sigma(std::size_t layer) const;

 private:
  NetworkConfig config_;
  std::vector<HiddenLayer> layers_;
  Readout readout_;
  Mode mode_ = Mode::kTrain;
  std::mt19937_64 dropout_rng_{0};
};

struct LayerTape {
  std::size_t steps = 0;
  std::size_t batch = 0;
  Matrix xhat;     // normalised feedforward drive (T*B, N)
  Vector inv_std;  // (N), batch-norm 1 / sqrt(var + eps)
  Matrix h;        // (T*B, N)
  Matrix s;        // (T*B, N)
  Matrix mask_ff;  // (B, N)
  Matrix mask_rec;
  SpreadTable spread;
  Vector delays;
  double sigma = 0.0;
};

struct Tape {
  std::size_t steps = 0;
  std::size_t batch = 0;
  Matrix input;  // (T*B, C)
  std::vector<LayerTape> layers;
  Matrix readout_h;  // (T*B, N_c)
};

struct LayerOutput {
  Matrix spikes;  // (T*B, N)
  LayerTape tape;
};

// Runs one hidden layer over a (T*B, N_in) time-major input.
LayerOutput layer_forward(NetworkModel& model, std::size_t layer_index, const Matrix& input, std::size_t batch,
                          bool record_tape);

// Logits (B, N_c): readout membrane at t = T - 1, or summed over t.
Matrix forward(NetworkModel& model, const SpikeTensor& input, Tape* tape = nullptr);
Matrix forward_time_major(NetworkModel& model, const Matrix& input, std::size_t batch, Tape* tape = nullptr);

// Hidden-layer spikes for every layer (no readout); used by tests and tooling.
std::vector<Matrix> hidden_spikes(NetworkModel& model, const SpikeTensor& input);

struct ParamBreakdown {
  std::int64_t feedforward = 0;
  std::int64_t recurrent_weights = 0;
  std::int64_t delays = 0;
  std::int64_t batchnorm = 0;
  std::int64_t readout = 0;
  std::int64_t total = 0;
  std::vector<std::int64_t> recurrent_weights_per_layer;
  std::vector<std::int64_t> delays_per_layer;
};

ParamBreakdown count_params(const NetworkModel& model);

inline constexpr std::uint16_t kModelFileVersion = 1;

void save_model(const NetworkModel& model, const std::filesystem::path& path);
// With round_delays set, the loaded model is put in eval mode with delays
// passed through round_for_inference.
NetworkModel load_model(const std::filesystem::path& path, bool round_delays = false);

std::vector<std::uint8_t> encode_model(const NetworkModel& model);
NetworkModel decode_model(const std::vector<std::uint8_t>& bytes, bool round_delays = false);

}  // namespace delaysnn
