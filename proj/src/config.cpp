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

#include "delaysnn/config.hpp"

#include <fstream>
#include <sstream>

namespace delaysnn {

NLOHMANN_JSON_SERIALIZE_ENUM(KernelKind, {{KernelKind::kDense, "dense"}, {KernelKind::kConv, "conv"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DelayMode, {{DelayMode::kLearnable, "learnable"}, {DelayMode::kFixed, "fixed"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ResetMode, {{ResetMode::kHard, "hard"}, {ResetMode::kSoft, "soft"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ReadoutMode, {{ReadoutMode::kLastStep, "last"}, {ReadoutMode::kSum, "sum"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DelayInit, {{DelayInit::kHalfNormal, "half_normal"}, {DelayInit::kUniform, "uniform"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ChannelPool, {{ChannelPool::kSum, "sum"}, {ChannelPool::kMax, "max"}})
NLOHMANN_JSON_SERIALIZE_ENUM(OptimizerKind, {{OptimizerKind::kAdam, "adam"}, {OptimizerKind::kAdamW, "adamw"}})

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

// Enum keys go through the serializer above, which maps unknown strings to
// the first enumerator; reject those explicitly.
template <typename E>
E enum_or(const json& j, const char* key, E fallback) {
  if (!j.contains(key)) return fallback;
  const E value = j.at(key).get<E>();
  if (json(value) != j.at(key)) throw ConfigError(key, "unknown value " + j.at(key).dump());
  return value;
}

json layer_json(const LayerConfig& l) {
  return {{"neurons", l.neurons},       {"kernel", l.kernel_kind},        {"k", l.k},
          {"delay_mode", l.delay_mode}, {"fixed_delay", l.fixed_delay},   {"dropout_ff", l.dropout_ff},
          {"dropout_rec", l.dropout_rec}, {"batchnorm", l.has_batchnorm}};
}

LayerConfig layer_from_json(const json& j, const LayerConfig& d) {
  LayerConfig l;
  l.neurons = get_or<Eigen::Index>(j, "neurons", d.neurons);
  l.kernel_kind = enum_or(j, "kernel", d.kernel_kind);
  l.k = get_or<int>(j, "k", d.k);
  l.delay_mode = enum_or(j, "delay_mode", d.delay_mode);
  l.fixed_delay = get_or<double>(j, "fixed_delay", d.fixed_delay);
  l.dropout_ff = get_or<double>(j, "dropout_ff", d.dropout_ff);
  l.dropout_rec = get_or<double>(j, "dropout_rec", d.dropout_rec);
  l.has_batchnorm = get_or<bool>(j, "batchnorm", d.has_batchnorm);
  return l;
}

}  // namespace

std::string to_string(KernelKind kind) { return json(kind).get<std::string>(); }

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "dense") return KernelKind::kDense;
  if (s == "conv") return KernelKind::kConv;
  throw ConfigError("kernel", "expected dense or conv, got " + s);
}

std::string to_string(const AblationMode& mode) {
  switch (mode.kind) {
    case AblationKind::kLearnable:
      return "learnable";
    case AblationKind::kFixedUnit:
      return "fixed-unit";
    case AblationKind::kFixedValue: {
      std::ostringstream out;
      out << "fixed-value:" << mode.value;
      return out.str();
    }
  }
  return "learnable";
}

AblationMode ablation_from_string(const std::string& s) {
  if (s == "learnable") return AblationMode::learnable();
  if (s == "fixed-unit") return AblationMode::fixed_unit();
  const std::string prefix = "fixed-value:";
  if (s.rfind(prefix, 0) == 0) {
    try {
      return AblationMode::fixed_value(std::stod(s.substr(prefix.size())));
    } catch (const std::exception&) {
      throw ConfigError("ablation", "bad fixed value in " + s);
    }
  }
  throw ConfigError("ablation", "expected learnable, fixed-unit or fixed-value:<d>, got " + s);
}

nlohmann::json to_json_value(const NetworkConfig& c) {
  json layers = json::array();
  for (const auto& l : c.layers) layers.push_back(layer_json(l));
  return {{"input_channels", c.input_channels},
          {"num_classes", c.num_classes},
          {"layers", layers},
          {"lif", {{"tau", c.lif.tau}, {"v_th", c.lif.v_th}, {"reset", c.lif.reset}}},
          {"surrogate_alpha", c.surrogate.alpha},
          {"readout", c.readout},
          {"d_max", c.d_max},
          {"delay_init", c.delay_init},
          {"sigma",
           {{"sigma", c.sigma.sigma},
            {"init", c.sigma.sigma_init},
            {"decay", c.sigma.sigma_decay},
            {"floor", c.sigma.sigma_floor}}},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps},
          {"numerics", {{"smooth_forward", c.numerics.smooth_forward}, {"detach_reset", c.numerics.detach_reset}}}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  const NetworkConfig d;
  NetworkConfig c;
  c.input_channels = get_or<Eigen::Index>(j, "input_channels", d.input_channels);
  c.num_classes = get_or<Eigen::Index>(j, "num_classes", d.num_classes);
  if (j.contains("layers")) {
    c.layers.clear();
    for (const auto& l : j.at("layers")) c.layers.push_back(layer_from_json(l, LayerConfig{}));
  }
  if (j.contains("lif")) {
    const auto& l = j.at("lif");
    c.lif.tau = get_or<double>(l, "tau", d.lif.tau);
    c.lif.v_th = get_or<double>(l, "v_th", d.lif.v_th);
    c.lif.reset = enum_or(l, "reset", d.lif.reset);
  }
  c.surrogate.alpha = get_or<double>(j, "surrogate_alpha", d.surrogate.alpha);
  c.readout = enum_or(j, "readout", d.readout);
  c.d_max = get_or<int>(j, "d_max", d.d_max);
  c.delay_init = enum_or(j, "delay_init", d.delay_init);
  if (j.contains("sigma")) {
    const auto& s = j.at("sigma");
    c.sigma.sigma_init = get_or<double>(s, "init", d.sigma.sigma_init);
    c.sigma.sigma = get_or<double>(s, "sigma", c.sigma.sigma_init);
    c.sigma.sigma_decay = get_or<double>(s, "decay", d.sigma.sigma_decay);
    c.sigma.sigma_floor = get_or<double>(s, "floor", d.sigma.sigma_floor);
  }
  c.bn_momentum = get_or<double>(j, "bn_momentum", d.bn_momentum);
  c.bn_eps = get_or<double>(j, "bn_eps", d.bn_eps);
  if (j.contains("numerics")) {
    c.numerics.smooth_forward = get_or<bool>(j.at("numerics"), "smooth_forward", d.numerics.smooth_forward);
    c.numerics.detach_reset = get_or<bool>(j.at("numerics"), "detach_reset", d.numerics.detach_reset);
  }
  return c;
}

nlohmann::json to_json_value(const RunConfig& c) {
  const auto& s = c.synthetic;
  return {{"preset", c.preset},
          {"data", {{"train", c.train_path}, {"valid", c.valid_path}, {"test", c.test_path}}},
          {"bin",
           {{"time_steps", c.bin.time_steps},
            {"bin_factor", c.bin.bin_factor},
            {"binarize", c.bin.binarize},
            {"pool", c.bin.pool}}},
          {"network", to_json_value(c.network)},
          {"optim",
           {{"kind", c.optim.kind},
            {"lr_weights", c.optim.lr_weights},
            {"lr_delays", c.optim.lr_delays},
            {"beta1", c.optim.beta1},
            {"beta2", c.optim.beta2},
            {"eps", c.optim.eps},
            {"weight_decay", c.optim.weight_decay},
            {"epochs", c.optim.epochs},
            {"batch_size", c.optim.batch_size}}},
          {"ablation", to_string(c.ablation)},
          {"seed", c.seed},
          {"output", {{"model", c.model_path}, {"report", c.report_path}}},
          {"synthetic",
           {{"n_samples", s.n_samples},
            {"time_steps", s.time_steps},
            {"channels", s.channels},
            {"lag_a", s.lag_a},
            {"lag_b", s.lag_b},
            {"seed", s.seed},
            {"class1_fraction", s.class1_fraction},
            {"burst_width", s.burst_width},
            {"band_width", s.band_width},
            {"step_us", s.step_us}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  const RunConfig d;
  RunConfig c;
  c.preset = get_or<std::string>(j, "preset", d.preset);
  if (j.contains("data")) {
    const auto& x = j.at("data");
    c.train_path = get_or<std::string>(x, "train", d.train_path);
    c.valid_path = get_or<std::string>(x, "valid", d.valid_path);
    c.test_path = get_or<std::string>(x, "test", d.test_path);
  }
  if (j.contains("bin")) {
    const auto& x = j.at("bin");
    c.bin.time_steps = get_or<std::size_t>(x, "time_steps", d.bin.time_steps);
    c.bin.bin_factor = get_or<std::uint32_t>(x, "bin_factor", d.bin.bin_factor);
    c.bin.binarize = get_or<bool>(x, "binarize", d.bin.binarize);
    c.bin.pool = enum_or(x, "pool", d.bin.pool);
  }
  if (j.contains("network")) c.network = network_config_from_json(j.at("network"));
  if (j.contains("optim")) {
    const auto& x = j.at("optim");
    c.optim.kind = enum_or(x, "kind", d.optim.kind);
    c.optim.lr_weights = get_or<double>(x, "lr_weights", d.optim.lr_weights);
    c.optim.lr_delays = get_or<double>(x, "lr_delays", d.optim.lr_delays);
    c.optim.beta1 = get_or<double>(x, "beta1", d.optim.beta1);
    c.optim.beta2 = get_or<double>(x, "beta2", d.optim.beta2);
    c.optim.eps = get_or<double>(x, "eps", d.optim.eps);
    c.optim.weight_decay = get_or<double>(x, "weight_decay", d.optim.weight_decay);
    c.optim.epochs = get_or<int>(x, "epochs", d.optim.epochs);
    c.optim.batch_size = get_or<std::size_t>(x, "batch_size", d.optim.batch_size);
  }
  c.ablation = ablation_from_string(get_or<std::string>(j, "ablation", to_string(d.ablation)));
  c.seed = get_or<std::uint64_t>(j, "seed", d.seed);
  if (j.contains("output")) {
    c.model_path = get_or<std::string>(j.at("output"), "model", d.model_path);
    c.report_path = get_or<std::string>(j.at("output"), "report", d.report_path);
  }
  if (j.contains("synthetic")) {
    const auto& x = j.at("synthetic");
    auto& s = c.synthetic;
    s.n_samples = get_or<std::size_t>(x, "n_samples", d.synthetic.n_samples);
    s.time_steps = get_or<std::size_t>(x, "time_steps", d.synthetic.time_steps);
    s.channels = get_or<std::uint32_t>(x, "channels", d.synthetic.channels);
    s.lag_a = get_or<std::size_t>(x, "lag_a", d.synthetic.lag_a);
    s.lag_b = get_or<std::size_t>(x, "lag_b", d.synthetic.lag_b);
    s.seed = get_or<std::uint64_t>(x, "seed", d.synthetic.seed);
    s.class1_fraction = get_or<double>(x, "class1_fraction", d.synthetic.class1_fraction);
    s.burst_width = get_or<std::size_t>(x, "burst_width", d.synthetic.burst_width);
    s.band_width = get_or<std::uint32_t>(x, "band_width", d.synthetic.band_width);
    s.step_us = get_or<std::uint64_t>(x, "step_us", d.synthetic.step_us);
  }
  return c;
}

std::string run_config_to_text(const RunConfig& config) { return to_json_value(config).dump(2); }

RunConfig run_config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", e.what());
  }
  return run_config_from_json(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_text(buf.str());
}

void RunConfig::validate() const {
  if (bin.time_steps == 0) throw ConfigError("bin.time_steps", "must be at least 1");
  if (bin.bin_factor == 0) throw ConfigError("bin.bin_factor", "must be at least 1");
  network.validate();
  optim.validate();
  if (ablation.kind == AblationKind::kFixedValue &&
      !(ablation.value >= 0.0 && ablation.value <= network.d_max)) {
    throw ConfigError("ablation", "fixed delay must lie in [0, d_max]");
  }
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "shd" || name == "ssc") {
    const bool shd = name == "shd";
    c.bin = {shd ? std::size_t{100} : std::size_t{250}, 5, false, ChannelPool::kSum};
    LayerConfig layer;
    layer.neurons = 256;
    layer.kernel_kind = KernelKind::kConv;
    layer.k = 3;
    layer.dropout_ff = shd ? 0.44 : 0.1;
    layer.dropout_rec = shd ? 0.26 : 0.3;
    c.network.input_channels = 140;
    c.network.num_classes = shd ? 20 : 35;
    c.network.layers.assign(shd ? 2 : 3, layer);
    c.network.lif = {shd ? 1.17 : 2.0, 1.0, shd ? ResetMode::kHard : ResetMode::kSoft, false};
    c.network.d_max = 64;
    const double sigma_init = shd ? 10.36 : 10.0;
    c.network.sigma = {sigma_init, sigma_init, shd ? 0.971 : 0.95, 0.01};
    c.optim.kind = shd ? OptimizerKind::kAdamW : OptimizerKind::kAdam;
    c.optim.lr_weights = shd ? 0.0013 : 0.001;
    c.optim.lr_delays = shd ? 0.0279 : 0.05;
    c.optim.epochs = 150;
    c.optim.batch_size = 64;
    return c;
  }
  if (name == "interval") {
    c.synthetic = IntervalTaskParams{};
    c.bin = {c.synthetic.time_steps, 1, false, ChannelPool::kSum};
    LayerConfig layer;
    layer.neurons = 32;
    layer.kernel_kind = KernelKind::kConv;
    layer.k = 3;
    c.network.input_channels = c.synthetic.channels;
    c.network.num_classes = 2;
    c.network.layers.assign(2, layer);
    c.network.lif = {4.0, 1.0, ResetMode::kHard, false};
    c.network.readout = ReadoutMode::kLastStep;
    c.network.d_max = 32;
    c.network.delay_init = DelayInit::kUniform;
    c.network.sigma = {4.0, 4.0, 0.9, 0.01};
    c.optim.kind = OptimizerKind::kAdam;
    c.optim.lr_weights = 0.01;
    c.optim.lr_delays = 0.1;
    c.optim.epochs = 60;
    c.optim.batch_size = 32;
    return c;
  }
  throw ConfigError("preset", "unknown preset " + name + " (expected shd, ssc or interval)");
}

TrainData load_train_data(const RunConfig& config) {
  TrainData data;
  auto load = [&](const std::string& path, const std::string& name, std::optional<SpikeTensor>& out,
                  std::vector<std::uint32_t>& labels) {
    if (path.empty()) return;
    const DatasetSplit split = read_event_file(path, name);
    out = bin_split(split, config.bin);
    labels = labels_of(split);
  };
  if (!config.train_path.empty()) {
    std::optional<SpikeTensor> train;
    load(config.train_path, "train", train, data.train_labels);
    data.train = std::move(*train);
    load(config.valid_path, "valid", data.valid, data.valid_labels);
    load(config.test_path, "test", data.test, data.test_labels);
  } else {
    IntervalTaskParams p = config.synthetic;
    const std::uint64_t base = p.seed;
    const std::size_t n = p.n_samples;
    auto generate = [&](std::size_t count, std::uint64_t stream, std::vector<std::uint32_t>& labels) {
      p.n_samples = count;
      p.seed = mix_seed(base, stream);
      const DatasetSplit split = make_interval_task(p);
      labels = labels_of(split);
      return bin_split(split, config.bin);
    };
    data.train = generate(n, 1, data.train_labels);
    data.valid = generate(n / 4, 2, data.valid_labels);
    data.test = generate(n / 2, 3, data.test_labels);
  }
  if (data.train.channels() != static_cast<std::size_t>(config.network.input_channels)) {
    throw ConfigError("network.input_channels", "data has " + std::to_string(data.train.channels()) +
                                                    " channels after binning, network expects " +
                                                    std::to_string(config.network.input_channels));
  }
  return data;
}

}  // namespace delaysnn
