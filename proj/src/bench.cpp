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

#include "delaysnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace delaysnn {

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

NetworkConfig bench_network(const BenchConfig& c, KernelKind kind) {
  NetworkConfig net;
  net.input_channels = c.input_channels;
  net.num_classes = c.num_classes;
  LayerConfig layer;
  layer.neurons = c.neurons;
  layer.kernel_kind = kind;
  layer.k = c.k;
  net.layers.assign(c.layers, layer);
  net.d_max = c.d_max;
  net.delay_init = DelayInit::kUniform;
  net.sigma = {0.0, 0.0, 0.95, 0.01};
  return net;
}

BenchEntry time_model(NetworkModel& model, const SpikeTensor& input, const BenchConfig& c, const std::string& kind) {
  BenchEntry entry;
  entry.kind = kind;
  const auto& layer = model.layers().front();
  entry.per_layer = count_recurrent_params(layer.kernel.kind, layer.config.neurons, layer.kernel.k);
  entry.recurrent_weights_total = count_params(model).recurrent_weights;
  const Matrix x = input.to_time_major();
  for (std::size_t r = 0; r < c.warmup + c.repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const Matrix logits = forward_time_major(model, x, input.batch());
    const auto stop = std::chrono::steady_clock::now();
    if (logits.hasNaN()) throw NumericError("benchmark forward produced NaN");
    if (r >= c.warmup) entry.batch_seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  entry.median_ms_per_sample = 1e3 * median(entry.batch_seconds) / static_cast<double>(input.batch());
  return entry;
}

// Batch-norm running stats from one train-mode pass over the benchmark input,
// so the timed eval-mode network spikes at a realistic rate.
void calibrate_batchnorm(NetworkModel& model, const SpikeTensor& input) {
  const double momentum = model.config().bn_momentum;
  model.mutable_config().bn_momentum = 1.0;
  model.set_mode(Mode::kTrain);
  forward(model, input);
  model.mutable_config().bn_momentum = momentum;
  model.set_mode(Mode::kEval);
}

double hidden_spike_rate(NetworkModel& model, const SpikeTensor& input) {
  double total = 0.0;
  double count = 0.0;
  for (const Matrix& s : hidden_spikes(model, input)) {
    total += s.sum();
    count += static_cast<double>(s.size());
  }
  return count > 0.0 ? total / count : 0.0;
}

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
  if (config.repetitions < 5) throw ConfigError("repetitions", "at least 5 timed repetitions are required");
  if (config.batch == 0 || config.steps == 0) throw ConfigError("batch", "batch and steps must be positive");
  BenchReport report;
  report.config = config;

  NetworkModel conv = NetworkModel::create(bench_network(config, KernelKind::kConv), config.seed);
  NetworkModel dense = NetworkModel::create(bench_network(config, KernelKind::kDense), config.seed);
  // Same feedforward path and delays in both; only the recurrent kernel differs.
  for (std::size_t i = 0; i < config.layers; ++i) {
    auto& cl = conv.layers()[i];
    cl.delays = round_for_inference(cl.delays);
    auto& dl = dense.layers()[i];
    dl.w_ff = cl.w_ff;
    dl.bn = cl.bn;
    dl.delays = cl.delays;
  }
  dense.readout() = conv.readout();

  std::mt19937_64 rng(config.seed + 1);
  std::bernoulli_distribution fire(config.input_rate);
  SpikeTensor input(config.batch, config.steps, static_cast<std::size_t>(config.input_channels), true);
  for (double& v : input.data()) v = fire(rng) ? 1.0 : 0.0;

  calibrate_batchnorm(conv, input);
  calibrate_batchnorm(dense, input);
  report.conv_spike_rate = hidden_spike_rate(conv, input);
  report.dense_spike_rate = hidden_spike_rate(dense, input);

  report.dense = time_model(dense, input, config, "dense");
  report.conv = time_model(conv, input, config, "conv");
  report.speedup = report.dense.median_ms_per_sample / report.conv.median_ms_per_sample;
  report.param_reduction =
      1.0 - static_cast<double>(report.conv.per_layer.total) / static_cast<double>(report.dense.per_layer.total);
  report.weight_reduction =
      1.0 - static_cast<double>(report.conv.per_layer.weights) / static_cast<double>(report.dense.per_layer.weights);
  return report;
}

std::string BenchReport::to_json() const {
  auto entry = [](const BenchEntry& e) {
    return nlohmann::json{{"kind", e.kind},
                          {"recurrent_params_per_layer",
                           {{"weights", e.per_layer.weights}, {"delays", e.per_layer.delays}, {"total", e.per_layer.total}}},
                          {"recurrent_weights_total", e.recurrent_weights_total},
                          {"batch_seconds", e.batch_seconds},
                          {"median_ms_per_sample", e.median_ms_per_sample}};
  };
  nlohmann::json j{{"config",
                    {{"neurons", config.neurons},
                     {"layers", config.layers},
                     {"steps", config.steps},
                     {"batch", config.batch},
                     {"k", config.k},
                     {"d_max", config.d_max},
                     {"repetitions", config.repetitions},
                     {"warmup", config.warmup},
                     {"seed", config.seed},
                     {"threads", 1}}},
                   {"dense", entry(dense)},
                   {"conv", entry(conv)},
                   {"hidden_spike_rate", {{"dense", dense_spike_rate}, {"conv", conv_spike_rate}}},
                   {"speedup", speedup},
                   {"param_reduction", param_reduction},
                   {"weight_reduction", weight_reduction}};
  return j.dump(2);
}

std::string BenchReport::to_text() const {
  char buf[512];
  std::ostringstream out;
  out << "kind   rec.weights/layer  delays/layer  total/layer  median ms/sample\n";
  for (const auto* e : {&dense, &conv}) {
    std::snprintf(buf, sizeof(buf), "%-6s %17lld  %12lld  %11lld  %16.4f\n", e->kind.c_str(),
                  static_cast<long long>(e->per_layer.weights), static_cast<long long>(e->per_layer.delays),
                  static_cast<long long>(e->per_layer.total), e->median_ms_per_sample);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "hidden spike rate: dense %.4f, conv %.4f\n", dense_spike_rate, conv_spike_rate);
  out << buf;
  std::snprintf(buf, sizeof(buf), "speedup (dense / conv): %.2fx\nrecurrent parameter reduction: %.1f%%\n", speedup,
                100.0 * param_reduction);
  out << buf;
  return out.str();
}

}  // namespace delaysnn
