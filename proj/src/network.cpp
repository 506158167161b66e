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

#include "delaysnn/network.hpp"

#include <algorithm>
#include <cmath>

namespace delaysnn {

void NetworkConfig::validate() const {
  if (input_channels <= 0) throw ConfigError("input_channels", "must be positive");
  if (num_classes <= 0) throw ConfigError("num_classes", "must be positive");
  if (layers.empty()) throw ConfigError("layers", "at least one hidden layer is required");
  lif.validate();
  if (lif.infinite_threshold) throw ConfigError("lif.infinite_threshold", "hidden layers must be able to spike");
  if (!(surrogate.alpha > 0.0) || !std::isfinite(surrogate.alpha)) {
    throw ConfigError("surrogate.alpha", "must be positive and finite");
  }
  if (d_max < 0) throw ConfigError("d_max", "must be non-negative");
  sigma.validate();
  if (!(bn_eps > 0.0)) throw ConfigError("bn_eps", "must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("bn_momentum", "must be in [0, 1]");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string prefix = "layers[" + std::to_string(i) + "].";
    if (l.neurons <= 0) throw ConfigError(prefix + "neurons", "must be positive");
    if (l.kernel_kind == KernelKind::kConv && (l.k <= 0 || l.k % 2 == 0)) {
      throw ConfigError(prefix + "k", "conv kernel size must be odd and positive");
    }
    if (!(l.dropout_ff >= 0.0 && l.dropout_ff < 1.0)) throw ConfigError(prefix + "dropout_ff", "must be in [0, 1)");
    if (!(l.dropout_rec >= 0.0 && l.dropout_rec < 1.0)) {
      throw ConfigError(prefix + "dropout_rec", "must be in [0, 1)");
    }
    if (l.delay_mode == DelayMode::kFixed && !(l.fixed_delay >= 0.0 && l.fixed_delay <= d_max)) {
      throw ConfigError(prefix + "fixed_delay", "must lie in [0, d_max]");
    }
  }
}

NetworkModel NetworkModel::create(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  NetworkModel model;
  model.config_ = config;
  std::mt19937_64 rng(seed);
  Eigen::Index fan_in = config.input_channels;
  for (const auto& lc : config.layers) {
    HiddenLayer layer;
    layer.config = lc;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    layer.w_ff.resize(fan_in, lc.neurons);
    for (Eigen::Index i = 0; i < layer.w_ff.size(); ++i) layer.w_ff.data()[i] = uniform(rng);
    layer.bn.gamma = Vector::Ones(lc.neurons);
    layer.bn.beta = Vector::Zero(lc.neurons);
    layer.bn.running_mean = Vector::Zero(lc.neurons);
    layer.bn.running_var = Vector::Ones(lc.neurons);
    layer.kernel = init_kernel(lc.kernel_kind, lc.neurons, lc.k, rng());
    if (lc.delay_mode == DelayMode::kLearnable) {
      layer.delays = init_delays(lc.neurons, config.d_max, config.delay_init, rng);
    } else {
      layer.delays = DelayVector{Vector::Constant(lc.neurons, lc.fixed_delay), config.d_max, false};
    }
    model.layers_.push_back(std::move(layer));
    fan_in = lc.neurons;
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  model.readout_.w_out.resize(fan_in, config.num_classes);
  for (Eigen::Index i = 0; i < model.readout_.w_out.size(); ++i) model.readout_.w_out.data()[i] = uniform(rng);
  model.readout_.b_out.resize(config.num_classes);
  for (Eigen::Index i = 0; i < config.num_classes; ++i) model.readout_.b_out[i] = uniform(rng);
  model.dropout_rng_.seed(rng());
  return model;
}

std::size_t NetworkModel::buffer_length() const {
  return SchedulingBuffer::required_length(config_.d_max, std::max(config_.sigma.sigma_init, config_.sigma.sigma));
}

Vector NetworkModel::effective_delays(std::size_t layer) const {
  const auto& l = layers_.at(layer);
  if (mode_ == Mode::kEval || !l.delays.trainable) return round_for_inference(l.delays).d;
  return l.delays.d;
}

double NetworkModel::effective_sigma(std::size_t layer) const {
  if (mode_ == Mode::kEval || !layers_.at(layer).delays.trainable) return 0.0;
  return config_.sigma.sigma;
}

namespace {

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::vector<std::size_t> shape_of(const Matrix& m) {
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}
std::vector<std::size_t> shape_of(const Vector& v) { return {static_cast<std::size_t>(v.size())}; }

// Shared ordering for model parameters and gradient views.
template <typename Ff, typename Gamma, typename Beta, typename Dense, typename Conv, typename Delay>
void append_layer(std::vector<ParamView>& out, int li, const HiddenLayer& layer, Ff& w_ff, Gamma& gamma, Beta& beta,
                  Dense& dense, Conv& conv, Delay& delays) {
  const std::string p = "layer" + std::to_string(li) + ".";
  out.push_back({p + "w_ff", span_of(w_ff), shape_of(w_ff), ParamGroup::kWeights, li, "w_ff"});
  if (layer.config.has_batchnorm) {
    out.push_back({p + "bn.gamma", span_of(gamma), shape_of(gamma), ParamGroup::kWeights, li, "bn"});
    out.push_back({p + "bn.beta", span_of(beta), shape_of(beta), ParamGroup::kWeights, li, "bn"});
  }
  if (layer.kernel.kind == KernelKind::kDense) {
    out.push_back({p + "w_rec", span_of(dense), shape_of(dense), ParamGroup::kWeights, li, "w_rec"});
  } else {
    out.push_back({p + "w_conv", span_of(conv), shape_of(conv), ParamGroup::kWeights, li, "w_conv"});
  }
  out.push_back({p + "delays", span_of(delays), shape_of(delays), ParamGroup::kDelays, li, "delays"});
}

}  // namespace

std::vector<ParamView> NetworkModel::parameters() {
  std::vector<ParamView> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    append_layer(out, static_cast<int>(i), l, l.w_ff, l.bn.gamma, l.bn.beta, l.kernel.w_dense, l.kernel.w_conv,
                 l.delays.d);
  }
  out.push_back({"readout.w_out", span_of(readout_.w_out), shape_of(readout_.w_out), ParamGroup::kWeights, -1,
                 "readout"});
  out.push_back({"readout.b_out", span_of(readout_.b_out), shape_of(readout_.b_out), ParamGroup::kWeights, -1,
                 "readout"});
  return out;
}

std::vector<ParamView> NetworkModel::state_blocks() {
  auto out = parameters();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& bn = layers_[i].bn;
    const std::string p = "layer" + std::to_string(i) + ".bn.";
    const int li = static_cast<int>(i);
    if (!layers_[i].config.has_batchnorm) continue;
    out.push_back({p + "running_mean", span_of(bn.running_mean), shape_of(bn.running_mean), ParamGroup::kWeights, li,
                   "bn_stats"});
    out.push_back({p + "running_var", span_of(bn.running_var), shape_of(bn.running_var), ParamGroup::kWeights, li,
                   "bn_stats"});
  }
  return out;
}

Gradients Gradients::zeros_like(const NetworkModel& model) {
  Gradients g;
  for (const auto& l : model.layers()) {
    LayerGrad lg;
    lg.w_ff = Matrix::Zero(l.w_ff.rows(), l.w_ff.cols());
    lg.gamma = Vector::Zero(l.bn.gamma.size());
    lg.beta = Vector::Zero(l.bn.beta.size());
    lg.w_dense = Matrix::Zero(l.kernel.w_dense.rows(), l.kernel.w_dense.cols());
    lg.w_conv = Vector::Zero(l.kernel.w_conv.size());
    lg.delays = Vector::Zero(l.delays.d.size());
    g.layers.push_back(std::move(lg));
  }
  g.w_out = Matrix::Zero(model.readout().w_out.rows(), model.readout().w_out.cols());
  g.b_out = Vector::Zero(model.readout().b_out.size());
  return g;
}

std::vector<ParamView> Gradients::views(const NetworkModel& model) {
  if (layers.size() != model.layers().size()) throw ShapeError("gradient/model layer count mismatch");
  std::vector<ParamView> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& g = layers[i];
    append_layer(out, static_cast<int>(i), model.layers()[i], g.w_ff, g.gamma, g.beta, g.w_dense, g.w_conv,
                 g.delays);
  }
  out.push_back({"readout.w_out", span_of(w_out), shape_of(w_out), ParamGroup::kWeights, -1, "readout"});
  out.push_back({"readout.b_out", span_of(b_out), shape_of(b_out), ParamGroup::kWeights, -1, "readout"});
  return out;
}

double Gradients::squared_norm() const {
  double total = w_out.squaredNorm() + b_out.squaredNorm();
  for (const auto& g : layers) {
    total += g.w_ff.squaredNorm() + g.gamma.squaredNorm() + g.beta.squaredNorm() + g.w_dense.squaredNorm() +
             g.w_conv.squaredNorm() + g.delays.squaredNorm();
  }
  return total;
}

namespace {

Matrix dropout_mask(Eigen::Index batch, Eigen::Index neurons, double rate, bool active, std::mt19937_64& rng) {
  if (!active || rate <= 0.0) return Matrix::Ones(batch, neurons);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(batch, neurons);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return mask;
}

}  // namespace

LayerOutput layer_forward(NetworkModel& model, std::size_t layer_index, const Matrix& input, std::size_t batch,
                          bool record_tape) {
  auto& layer = model.layers().at(layer_index);
  const auto& cfg = model.config();
  const bool train = model.mode() == Mode::kTrain;
  if (batch == 0 || input.rows() % static_cast<Eigen::Index>(batch) != 0) {
    throw ShapeError("layer " + std::to_string(layer_index) + ": input rows not divisible by batch size");
  }
  if (input.cols() != layer.w_ff.rows()) {
    throw ShapeError("layer " + std::to_string(layer_index) + ": expected " + std::to_string(layer.w_ff.rows()) +
                     " input channels, got " + std::to_string(input.cols()));
  }
  const std::size_t steps = static_cast<std::size_t>(input.rows()) / batch;
  const Eigen::Index n = layer.config.neurons;
  const auto b = static_cast<Eigen::Index>(batch);

  LayerOutput out;
  LayerTape& tape = out.tape;
  tape.steps = steps;
  tape.batch = batch;

  // Feedforward drive for all steps at once; batch norm over (batch x time).
  Matrix drive = input * layer.w_ff;
  if (layer.config.has_batchnorm) {
    auto& bn = layer.bn;
    if (train) {
      const Eigen::RowVectorXd mean = drive.colwise().mean();
      drive.rowwise() -= mean;
      const Eigen::RowVectorXd var = drive.array().square().colwise().mean();
      tape.inv_std = (var.array() + cfg.bn_eps).rsqrt().transpose();
      bn.running_mean = (1.0 - cfg.bn_momentum) * bn.running_mean + cfg.bn_momentum * mean.transpose();
      bn.running_var = (1.0 - cfg.bn_momentum) * bn.running_var + cfg.bn_momentum * var.transpose();
    } else {
      drive.rowwise() -= bn.running_mean.transpose();
      tape.inv_std = (bn.running_var.array() + cfg.bn_eps).rsqrt();
    }
    drive.array().rowwise() *= tape.inv_std.transpose().array();
    if (record_tape) tape.xhat = drive;
    drive.array().rowwise() *= bn.gamma.transpose().array();
    drive.rowwise() += bn.beta.transpose();
  } else if (record_tape) {
    tape.xhat = drive;
  }

  tape.mask_ff = dropout_mask(b, n, layer.config.dropout_ff, train, model.dropout_rng());
  tape.mask_rec = dropout_mask(b, n, layer.config.dropout_rec, train, model.dropout_rng());
  const bool use_ff_mask = train && layer.config.dropout_ff > 0.0;
  const bool use_rec_mask = train && layer.config.dropout_rec > 0.0;

  tape.delays = model.effective_delays(layer_index);
  tape.sigma = model.effective_sigma(layer_index);
  tape.spread = build_spread_table(tape.delays, tape.sigma);

  SchedulingBuffer buffer(b, n, model.buffer_length());
  if (static_cast<std::size_t>(tape.spread.max_offset) > buffer.length()) {
    throw SizingError("spread support exceeds scheduling buffer length");
  }
  const bool smooth = cfg.numerics.smooth_forward;

  out.spikes.resize(input.rows(), n);
  if (record_tape) tape.h.resize(input.rows(), n);
  LifState state = LifState::zeros(b, n);
  Matrix recurrent(b, n);
  Matrix current(b, n);
  Matrix spread_spikes(b, n);

  for (std::size_t t = 0; t < steps; ++t) {
    buffer.pop_into(recurrent);
    if (use_ff_mask) {
      current = time_step(drive, t, batch).cwiseProduct(tape.mask_ff);
    } else {
      current = time_step(drive, t, batch);
    }
    if (use_rec_mask) {
      current += recurrent.cwiseProduct(tape.mask_rec);
    } else {
      current += recurrent;
    }
    lif_advance(state, current, cfg.lif, smooth, cfg.surrogate);
    if (state.has_nan) {
      throw NumericError("NaN in membrane potential at layer " + std::to_string(layer_index) + ", t=" +
                         std::to_string(t));
    }
    time_step(out.spikes, t, batch) = state.s;
    if (record_tape) time_step(tape.h, t, batch) = state.h;

    if (!smooth && (state.s.array() == 0.0).all()) continue;
    // Spread each presynaptic spike over its delay support, apply the
    // recurrent kernel to every offset slice, then schedule the result.
    for (const int tau : tape.spread.active) {
      if (t + static_cast<std::size_t>(tau) >= steps) break;
      spread_spikes = state.s.array().rowwise() * tape.spread.weight[static_cast<std::size_t>(tau)].transpose().array();
      apply_recurrent_add(layer.kernel, spread_spikes, buffer.at_offset(tau));
    }
  }
  if (record_tape) tape.s = out.spikes;
  return out;
}

Matrix forward_time_major(NetworkModel& model, const Matrix& input, std::size_t batch, Tape* tape) {
  const auto& cfg = model.config();
  if (input.cols() != cfg.input_channels) {
    throw ShapeError("input has " + std::to_string(input.cols()) + " channels, model expects " +
                     std::to_string(cfg.input_channels));
  }
  if (batch == 0 || input.rows() % static_cast<Eigen::Index>(batch) != 0 || input.rows() == 0) {
    throw ShapeError("input rows must be a positive multiple of the batch size");
  }
  const std::size_t steps = static_cast<std::size_t>(input.rows()) / batch;
  if (tape) {
    tape->steps = steps;
    tape->batch = batch;
    tape->input = input;
    tape->layers.clear();
  }

  Matrix x = input;
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    auto out = layer_forward(model, li, x, batch, tape != nullptr);
    x = std::move(out.spikes);
    if (tape) tape->layers.push_back(std::move(out.tape));
  }

  const auto& ro = model.readout();
  Matrix z = x * ro.w_out;
  z.rowwise() += ro.b_out.transpose();
  const double beta = cfg.lif.beta();
  const auto b = static_cast<Eigen::Index>(batch);
  Matrix h = Matrix::Zero(b, cfg.num_classes);
  Matrix logits = Matrix::Zero(b, cfg.num_classes);
  if (tape) tape->readout_h.resize(z.rows(), z.cols());
  for (std::size_t t = 0; t < steps; ++t) {
    h = beta * h + (1.0 - beta) * time_step(z, t, batch);
    if (h.hasNaN()) throw NumericError("NaN in readout membrane at t=" + std::to_string(t));
    if (cfg.readout == ReadoutMode::kSum) logits += h;
    if (tape) time_step(tape->readout_h, t, batch) = h;
  }
  if (cfg.readout == ReadoutMode::kLastStep) logits = h;
  return logits;
}

Matrix forward(NetworkModel& model, const SpikeTensor& input, Tape* tape) {
  return forward_time_major(model, input.to_time_major(), input.batch(), tape);
}

std::vector<Matrix> hidden_spikes(NetworkModel& model, const SpikeTensor& input) {
  std::vector<Matrix> out;
  Matrix x = input.to_time_major();
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    auto res = layer_forward(model, li, x, input.batch(), false);
    x = res.spikes;
    out.push_back(std::move(res.spikes));
  }
  return out;
}

ParamBreakdown count_params(const NetworkModel& model) {
  ParamBreakdown c;
  for (const auto& l : model.layers()) {
    c.feedforward += l.w_ff.size();
    const auto rec = l.kernel.num_weights();
    c.recurrent_weights += rec;
    c.recurrent_weights_per_layer.push_back(rec);
    const std::int64_t delays = l.config.delay_mode == DelayMode::kLearnable ? l.config.neurons : 0;
    c.delays += delays;
    c.delays_per_layer.push_back(delays);
    if (l.config.has_batchnorm) c.batchnorm += 2 * l.config.neurons;
  }
  c.readout = model.readout().w_out.size() + model.readout().b_out.size();
  c.total = c.feedforward + c.recurrent_weights + c.delays + c.batchnorm + c.readout;
  return c;
}

}  // namespace delaysnn
